#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "wsn/packet.hpp"

namespace wsn {

/// One row of the neighbors power list: smoothed received power per
/// neighbor, refreshed on every decoded frame from that neighbor.
struct NeighborPowerRecord {
  NodeId neighbor = 0;
  double last_rx_power_dbm = 0.0;
  double rx_power_ewma_dbm = 0.0;
  double last_update_s = 0.0;
  bool on_active_route = false;
};

struct RecoveryConfig {
  double ewma_alpha = 0.25;
  double stale_timeout_s = 3.0;   // three beacon periods of silence
  double break_margin_db = 3.0;   // predict a break this far above threshold
  double repair_deadline_s = 1.0;
  double repair_energy_fraction = 0.20;  // of the initial energy budget
  int max_attempts = 15;
  size_t repair_queue_cap = 64;
};

/// What a node does about a broken (or about-to-break) link on an active
/// route, in the order the gates are checked.
enum class RecoveryDecision : uint8_t {
  LocalRepair,      // this node re-discovers the route itself
  HandoffToPrehop,  // the backward pre-hop node takes over
  NotifySource,     // the source re-discovers
  UpperLayerNotify, // per-packet trial budget exhausted
};

const char* to_string(RecoveryDecision d);

/// Handoff-based self-recovery state for one node: the neighbors power list,
/// break prediction, the repair decision gates, and the per-destination
/// packet queues that buffer traffic while a repair runs.
class RecoveryManager {
 public:
  RecoveryManager() = default;
  RecoveryManager(NodeId self, size_t node_count, const RecoveryConfig& cfg);

  /// Fold one received-power sample into the neighbor's record.
  void update_npl(NodeId neighbor, double rx_power_dbm, double now);

  /// Drop records that have been silent past the staleness timeout.
  void evict_stale(double now);

  const NeighborPowerRecord* record(NodeId neighbor) const;
  void mark_active(NodeId neighbor, bool active);
  size_t record_count() const;

  /// Visit every live record in ascending neighbor order.
  template <typename Visitor>
  void for_each_record(Visitor visit) const {
    for (size_t i = 0; i < known_.size(); ++i) {
      if (known_[i]) visit(npl_[i]);
    }
  }

  /// A break is predicted when the smoothed power has sunk below the RX
  /// threshold plus the margin (strictly), or the record has gone stale.
  static bool predict_break(const NeighborPowerRecord& rec,
                            double rx_threshold_dbm, double margin_db,
                            double now, double stale_timeout_s);

  /// Prediction for a route next hop using the configured margin.  A
  /// neighbor with no record at all counts as broken.
  bool link_at_risk(NodeId neighbor, double rx_threshold_dbm,
                    double now) const;

  /// Decision gates, in order: out of trials, source shortcut, energy gate.
  static RecoveryDecision decide_recovery(bool is_source, int attempt_count,
                                          double remaining_energy_mwh,
                                          double repair_threshold_mwh,
                                          int max_attempts = 15);

  /// An in-progress repair toward one destination and the traffic waiting
  /// on it.
  struct Episode {
    NodeId destination = 0;
    std::deque<Packet> queue;
    uint32_t round_id = 0;        // invalidates stale deadline events
    bool repair_pending = false;  // a discovery/repair round is in flight
    bool notice_sent = false;     // repair notice broadcast once per episode
  };

  Episode* episode(NodeId destination);
  Episode& open_episode(NodeId destination);
  void close_episode(NodeId destination);
  std::map<NodeId, Episode>& episodes() { return episodes_; }

  /// FIFO buffering with a hard cap: when the queue is full the newest
  /// packet is the one dropped.  Returns false on such an overflow drop.
  bool enqueue_packet(Episode& ep, Packet pkt);

  const RecoveryConfig& cfg() const { return cfg_; }

 private:
  NodeId self_ = 0;
  RecoveryConfig cfg_;
  std::vector<NeighborPowerRecord> npl_;
  std::vector<bool> known_;
  size_t known_count_ = 0;
  std::map<NodeId, Episode> episodes_;
};

}  // namespace wsn
