#pragma once

#include <vector>

#include "wsn/linkbudget.hpp"
#include "wsn/scenario.hpp"

namespace wsn {

/// Static propagation state for one run: a cached symmetric gain factor per
/// node pair (received mW = transmitted mW x gain), the sensing and decoding
/// floors, and scripted link cuts.  All geometry is fixed at construction;
/// queries are O(1).
class Channel {
 public:
  Channel(std::vector<Vec2> positions, const RadioParams& radio,
          PathlossModel model);

  size_t node_count() const { return positions_.size(); }
  const Vec2& position(NodeId id) const { return positions_[id]; }

  /// Linear power gain from one node to another (zero for self or a cut
  /// link).
  double gain(NodeId from, NodeId to) const {
    return gain_[from * n_ + to];
  }

  double rx_power_mw(NodeId from, NodeId to, double tx_power_dbm) const {
    return to_mw(tx_power_dbm) * gain(from, to);
  }

  /// Received power in dBm, or a very small floor value when the gain is
  /// zero (cut link); callers compare against thresholds in mW instead.
  bool senses(NodeId from, NodeId to, double tx_power_dbm) const {
    return rx_power_mw(from, to, tx_power_dbm) >= sense_floor_mw_;
  }

  bool decodes(NodeId from, NodeId to, double tx_power_dbm) const {
    return rx_power_mw(from, to, tx_power_dbm) >= decode_floor_mw_;
  }

  double sense_floor_mw() const { return sense_floor_mw_; }
  double decode_floor_mw() const { return decode_floor_mw_; }

  /// Receiver noise floor (bandwidth and noise figure included), dBm.
  double noise_floor_dbm() const { return noise_floor_dbm_; }

  /// SNR of a reception at the given received power.
  double snr_db(double rx_power_dbm) const {
    return rx_power_dbm - noise_floor_dbm_;
  }

  /// Sever both directions of a link (scripted failure).
  void fail_link(NodeId a, NodeId b);

  /// Decode-range neighbor ids (ascending) at the configured maximum
  /// transmit power; the per-transmission receiver scan iterates these.
  const std::vector<NodeId>& reach(NodeId from) const { return reach_[from]; }

 private:
  size_t n_ = 0;
  std::vector<Vec2> positions_;
  std::vector<double> gain_;  // n x n, row-major
  std::vector<std::vector<NodeId>> reach_;
  double sense_floor_mw_ = 0.0;
  double decode_floor_mw_ = 0.0;
  double noise_floor_dbm_ = 0.0;
};

}  // namespace wsn
