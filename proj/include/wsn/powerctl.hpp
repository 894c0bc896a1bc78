#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "wsn/linkbudget.hpp"

namespace wsn {

using NodeId = uint32_t;

/// Loop parameters for closed-loop transmit-power control.  Receivers report
/// a smoothed signal-strength reading back in their beacons; the transmitter
/// steps its per-link power toward the weakest level that still clears the
/// target received power.
struct PowerControlConfig {
  double step_db = 1.0;
  double deadband_db = 0.5;  // half a step: no reaction inside the band
  double ewma_alpha = 0.25;
  double margin_db = 3.0;
  double min_power_dbm = -10.0;
  double max_power_dbm = 15.0;
};

/// Controlled power and smoothed feedback for one transmit link.
struct LinkPowerState {
  double tx_power_dbm = 0.0;
  double rssi_ewma_dbm = 0.0;
  double last_rssi_dbm = 0.0;   // newest raw sample, gates down-steps
  double last_feedback_s = 0.0;  // when that sample arrived
  bool has_feedback = false;
};

enum class AdjustStatus {
  Raised,
  Lowered,
  Unchanged,
  SaturatedHigh,  // wants more power but is pinned at the maximum
  SaturatedLow,   // wants less power but is pinned at the minimum
  NoFeedback,     // nothing recorded for that neighbor yet
};

/// Per-node power-control state: one controlled power per neighbor that has
/// sent feedback, plus the shared target and loop parameters.
struct PowerControlState {
  double target_rx_power_dbm = -78.0;
  double default_tx_power_dbm = 15.0;  // used until a link has feedback
  PowerControlConfig cfg;
  std::map<NodeId, LinkPowerState> links;

  /// Power for a unicast toward `neighbor`.
  double current_tx_power(NodeId neighbor) const {
    auto it = links.find(neighbor);
    return it == links.end() ? clamp(default_tx_power_dbm)
                             : it->second.tx_power_dbm;
  }

  /// Power for a broadcast: the maximum over the given links so every listed
  /// neighbor still decodes, or the default when none are given.
  template <typename NeighborPredicate>
  double broadcast_tx_power(NeighborPredicate include) const {
    double best = -1e300;
    bool any = false;
    for (const auto& [id, link] : links) {
      if (!link.has_feedback || !include(id)) continue;
      best = std::max(best, link.tx_power_dbm);
      any = true;
    }
    return any ? best : clamp(default_tx_power_dbm);
  }

  double clamp(double dbm) const {
    return std::min(cfg.max_power_dbm, std::max(cfg.min_power_dbm, dbm));
  }
};

/// Received power a transmitter should aim for so the link sustains the BER
/// target: the minimum detectable signal at the SNR that the target BER maps
/// to, plus a safety margin.  The SNR term collapses to the bare noise floor
/// when the BER target is loose enough to need no excess SNR.
inline PowerDbm target_rx_power(const RadioParams& params, double ber_target,
                                double margin_db, int bits_per_symbol = 2) {
  if (bits_per_symbol <= 0) {
    throw std::domain_error("target_rx_power: bits_per_symbol must be positive");
  }
  const double ebn0 = required_ebn0(ber_target);
  const double snr_linear = ebn0 * bits_per_symbol;
  const double snr_min_db = snr_linear > 0.0 ? 10.0 * std::log10(snr_linear) : 0.0;
  return {minimum_detectable_signal(params, snr_min_db).value + margin_db};
}

/// Fold one receiver-reported RSSI sample into the link's smoothed value.
/// The first sample initializes the average directly.
inline void record_feedback(PowerControlState& state, NodeId neighbor,
                            double measured_rssi_dbm, double now = 0.0) {
  auto [it, inserted] = state.links.try_emplace(neighbor);
  LinkPowerState& link = it->second;
  if (inserted) {
    link.tx_power_dbm = state.clamp(state.default_tx_power_dbm);
  }
  if (!link.has_feedback) {
    link.rssi_ewma_dbm = measured_rssi_dbm;
    link.has_feedback = true;
  } else {
    link.rssi_ewma_dbm = state.cfg.ewma_alpha * measured_rssi_dbm +
                         (1.0 - state.cfg.ewma_alpha) * link.rssi_ewma_dbm;
  }
  link.last_rssi_dbm = measured_rssi_dbm;
  link.last_feedback_s = now;
}

/// One control step for the given link: raise power when the smoothed
/// feedback sits below the target band, lower it above the band, otherwise
/// hold.  Clamped to the configured power range.
inline AdjustStatus adjust_tx_power(PowerControlState& state, NodeId neighbor) {
  auto it = state.links.find(neighbor);
  if (it == state.links.end() || !it->second.has_feedback) {
    return AdjustStatus::NoFeedback;
  }
  LinkPowerState& link = it->second;
  const PowerControlConfig& cfg = state.cfg;
  const double err = link.rssi_ewma_dbm - state.target_rx_power_dbm;
  if (err < -cfg.deadband_db) {
    if (link.tx_power_dbm >= cfg.max_power_dbm) return AdjustStatus::SaturatedHigh;
    link.tx_power_dbm = state.clamp(link.tx_power_dbm + cfg.step_db);
    return AdjustStatus::Raised;
  }
  if (err > cfg.deadband_db) {
    if (link.tx_power_dbm <= cfg.min_power_dbm) return AdjustStatus::SaturatedLow;
    // The smoothed average trails the real signal during a ramp, so it can
    // argue for another cut long after the link is already at the edge.  A
    // cut goes through only if the newest raw sample would still sit inside
    // the band afterwards; this bounds the undershoot to about one step.
    if (link.last_rssi_dbm - cfg.step_db <
        state.target_rx_power_dbm - cfg.deadband_db) {
      return AdjustStatus::Unchanged;
    }
    link.tx_power_dbm = state.clamp(link.tx_power_dbm - cfg.step_db);
    return AdjustStatus::Lowered;
  }
  return AdjustStatus::Unchanged;
}

}  // namespace wsn
