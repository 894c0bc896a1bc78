#include "wsn/channel.hpp"

#include <algorithm>

namespace wsn {

Channel::Channel(std::vector<Vec2> positions, const RadioParams& radio,
                 PathlossModel model)
    : n_(positions.size()), positions_(std::move(positions)) {
  sense_floor_mw_ = to_mw(radio.propagation_limit_dbm);
  decode_floor_mw_ = to_mw(radio.rx_threshold_dbm);
  noise_floor_dbm_ = wsn::noise_floor_dbm(radio);

  // Pair gains are pure geometry: evaluate each model at unit transmit
  // power (0 dBm = 1 mW) so received mW = tx mW x gain.
  RadioParams unit = radio;
  unit.tx_power_dbm = 0.0;
  gain_.assign(n_ * n_, 0.0);
  for (size_t i = 0; i < n_; ++i) {
    for (size_t j = i + 1; j < n_; ++j) {
      // Co-located nodes would have unbounded gain; clamp the distance to a
      // centimeter so such (test-only) layouts stay finite.
      const double d = std::max(distance(positions_[i], positions_[j]), 0.01);
      const double g = rx_power(unit, d, model).value;
      gain_[i * n_ + j] = g;
      gain_[j * n_ + i] = g;
    }
  }

  // Receiver scan lists at the configured transmit power (the cap for every
  // controlled transmission in a run).
  const double max_mw = to_mw(radio.tx_power_dbm);
  reach_.resize(n_);
  for (size_t i = 0; i < n_; ++i) {
    for (size_t j = 0; j < n_; ++j) {
      if (i == j) continue;
      if (max_mw * gain_[i * n_ + j] >= decode_floor_mw_) {
        reach_[i].push_back(static_cast<NodeId>(j));
      }
    }
  }
}

void Channel::fail_link(NodeId a, NodeId b) {
  if (a >= n_ || b >= n_) return;
  gain_[a * n_ + b] = 0.0;
  gain_[b * n_ + a] = 0.0;
}

}  // namespace wsn
