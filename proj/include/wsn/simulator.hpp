#pragma once

#include <deque>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "wsn/channel.hpp"
#include "wsn/metrics.hpp"
#include "wsn/packet.hpp"
#include "wsn/powerctl.hpp"
#include "wsn/recovery.hpp"
#include "wsn/rng.hpp"
#include "wsn/routing.hpp"
#include "wsn/scenario.hpp"
#include "wsn/token.hpp"

namespace wsn {

/// Deterministic discrete-event engine: carrier-sense MAC over the cached
/// channel, per-node routing/recovery/power-control state machines, energy
/// accounting, and structured tracing.  One run is strictly single-threaded;
/// identical (scenario, seed) pairs replay byte-identically.
class Simulator {
 public:
  explicit Simulator(const Scenario& sc, bool record_trace = true);

  /// Execute events until the configured end of simulated time and return
  /// the aggregated run metrics.
  RunMetrics run();

  // Post-run introspection (tests and the validation suite).
  const std::string& trace() const { return trace_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const std::vector<DeliveryRecord>& deliveries() const { return deliveries_; }
  const TokenRegistry& tokens() const { return tokens_; }
  const Router& router(NodeId id) const { return nodes_[id].router; }
  const Channel& channel() const { return chan_; }
  uint64_t packets_sent() const { return sent_; }

  /// Route-error frames decoded while addressed to the node.
  uint64_t rerr_received_at(NodeId id) const { return rerr_received_[id]; }
  /// Data packets abandoned after the per-packet trial budget, by id.
  const std::vector<uint32_t>& upper_layer_notices() const {
    return upper_notices_;
  }
  /// Every path accumulated on a transmitted request/reply, with the time
  /// the frame was queued.
  const std::vector<std::pair<double, std::vector<NodeId>>>& accumulated_paths()
      const {
    return paths_;
  }
  /// Time a node turned red, or a negative value if it never did.
  double conviction_time(NodeId id) const { return conviction_time_[id]; }

 private:
  enum class EventKind : uint8_t {
    AppSend,
    MacAttempt,
    TxStart,
    TxEnd,
    BeaconTimer,
    Housekeep,
    DiscoveryTimeout,
    RepairDeadline,
    WatchDeadline,
    LinkFail,
  };

  struct Event {
    double time;
    uint64_t seq;
    EventKind kind;
    NodeId node;
    uint64_t a = 0;
    uint64_t b = 0;
  };
  struct EventAfter {
    bool operator()(const Event& l, const Event& r) const {
      if (l.time != r.time) return l.time > r.time;
      return l.seq > r.seq;
    }
  };

  struct PendingFrame {
    Packet pkt;
    double tx_power_dbm = 0.0;
    int retry_count = 0;
    uint32_t cw = 32;
    double earliest_s = 0.0;
  };

  struct AirFrame {
    NodeId sender = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double tx_mw = 0.0;
    Packet pkt;
  };

  struct Watch {
    double deadline_s = 0.0;
    NodeId forwarder = 0;
    NodeId flow_dest = 0;
    uint32_t data_id = 0;
    std::vector<NodeId> umpires;
    std::vector<bool> heard;
    bool resolved = false;
  };

  struct Node {
    NodeId id = 0;
    bool alive = true;
    Router router;
    RecoveryManager recovery;
    PowerControlState power;
    std::deque<PendingFrame> txq;
    bool attempt_pending = false;
    bool tx_active = false;
    double own_tx_end_s = 0.0;
    double last_idle_accrual_s = 0.0;
    std::map<NodeId, NodeId> prehop_for;  // flow destination -> upstream hop
    bool is_blackhole = false;
    // Break prediction is edge-triggered: a neighbor fires one repair when
    // it first looks at risk and re-arms only after it looks healthy again.
    // A stable-but-weak link must not loop purge/repair forever.
    std::vector<uint8_t> risk_latched;
  };

  // Event plumbing.
  void schedule(double time, EventKind kind, NodeId node, uint64_t a = 0,
                uint64_t b = 0);
  void dispatch(const Event& ev);

  // MAC.
  void enqueue_frame(NodeId node, Packet pkt, double tx_power_dbm,
                     double earliest_s);
  void maybe_schedule_attempt(NodeId node, double at);
  void on_mac_attempt(NodeId node);
  void on_tx_start(NodeId node);
  void on_tx_end(NodeId node, uint64_t air_id);
  void finish_frame(NodeId node, bool delivered_to_dst);
  void mac_drop(NodeId node, PendingFrame&& frame);
  double visible_busy_until(NodeId node) const;
  bool collided(const AirFrame& f, NodeId receiver, uint64_t self_id) const;
  const AirFrame* air_frame(uint64_t id) const;
  void prune_air();

  // Protocol.
  void handle_decoded(NodeId receiver, const AirFrame& f, double rx_dbm,
                      const std::vector<NodeId>& decoders);
  void on_beacon_timer(NodeId node);
  void on_app_send(NodeId node, uint64_t index);
  void on_housekeep();
  void forward_or_recover(NodeId node, Packet pkt);
  void dispatch_data(NodeId node, Packet pkt, const RouteEntry& route);
  void start_recovery(NodeId node, NodeId dest, Packet* pkt);
  void run_recovery_decision(NodeId node, NodeId dest);
  void on_recovery_round_end(NodeId node, NodeId dest, uint32_t round);
  void flush_episode_if_routed(NodeId node);
  void drop_exhausted(NodeId node, RecoveryManager::Episode& ep);
  void send_rerr_toward(NodeId node, NodeId flow_origin, NodeId lost_dest);
  double broadcast_power(const Node& n) const;
  double controlled_power(const Node& n, NodeId neighbor) const;
  void predict_breaks_via(NodeId node, NodeId neighbor);

  // Umpiring.
  void register_watch(NodeId prehop, NodeId forwarder, const Packet& data,
                      const std::vector<NodeId>& inbound_decoders);
  void resolve_watches_for_tx(const AirFrame& f,
                              const std::vector<NodeId>& decoders);
  void on_watch_deadline(uint64_t watch_id);
  void convict(NodeId node);

  // Energy.
  void accrue_idle(NodeId node);
  void charge(NodeId node, EnergyMode mode, double power_mw, double duration_s);
  void kill_node(NodeId node);
  double remaining_energy_mwh(NodeId node) const;

  // Tracing.
  void tracef(const char* fmt, ...);

  static Channel make_channel(const Scenario& sc, Rng& rng);

  Scenario sc_;
  Rng rng_;  // declared before the channel: placement draws seed it
  Channel chan_;
  TokenRegistry tokens_;
  std::vector<Node> nodes_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  uint64_t seq_ = 0;
  double now_ = 0.0;
  double sim_target_rx_dbm_ = 0.0;
  uint32_t recovery_rounds_ = 0;  // node-spanning round ids, never reused

  std::deque<AirFrame> air_;
  uint64_t air_base_ = 0;  // id of air_.front()
  uint64_t air_next_ = 0;
  double max_airtime_s_ = 0.0;

  std::vector<Watch> watches_;
  std::vector<uint32_t> active_watches_;  // per forwarder

  EnergyLedger ledger_;
  uint64_t sent_ = 0;
  uint32_t next_data_id_ = 1;
  std::set<uint64_t> delivered_keys_;
  std::vector<DeliveryRecord> deliveries_;
  std::vector<uint64_t> rerr_received_;
  std::vector<uint32_t> upper_notices_;
  std::vector<std::pair<double, std::vector<NodeId>>> paths_;
  std::vector<double> conviction_time_;

  bool record_trace_ = true;
  std::string trace_;
};

/// Convenience wrapper: build, run, return metrics.
RunMetrics run_scenario(const Scenario& sc);

}  // namespace wsn
