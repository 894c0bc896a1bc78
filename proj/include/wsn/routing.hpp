#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "wsn/packet.hpp"
#include "wsn/token.hpp"

namespace wsn {

struct RoutingConfig {
  double snr_threshold_db = 13.0;  // good/bad neighbor boundary (inclusive)
  double snr_ewma_alpha = 0.25;
  double route_lifetime_s = 10.0;
  double rreq_buffer_s = 10.0;  // duplicate-request memory
  double rrep_wait_s = 1.0;     // discovery round timeout at the originator
};

/// One routing-table row.  `path` runs from the next hop (first element) to
/// the destination (last element); its length always equals `hop_count`.
struct RouteEntry {
  NodeId destination = 0;
  NodeId next_hop = 0;
  uint16_t hop_count = 0;
  uint32_t dest_sequence = 0;
  bool seq_known = false;
  double expiry_s = 0.0;
  std::vector<NodeId> path;
  double min_link_snr_db = 0.0;  // first-hop SNR at installation, tie-breaker
  bool active = false;           // carried data within the current lifetime
};

/// Smoothed link-quality record and the class it maps to.
struct NeighborClass {
  NodeId neighbor = 0;
  double snr_ewma_db = 0.0;
  bool good = true;
};

/// Per-node route discovery and maintenance: request flooding with path
/// accumulation, reply routing along reverse paths, SNR-based neighbor
/// classification, and token gating of every decision.
class Router {
 public:
  Router() = default;
  Router(NodeId self, size_t node_count, const RoutingConfig& cfg,
         const TokenRegistry* tokens);

  enum class RreqAction { Rebroadcast, Reply, Drop };
  struct RreqResult {
    RreqAction action = RreqAction::Drop;
    Packet packet;              // rebroadcast or reply frame
    NodeId next_hop = kBroadcast;  // unicast target for a reply
  };

  enum class RrepAction { Forward, Deliver, Drop };
  struct RrepResult {
    RrepAction action = RrepAction::Drop;
    Packet packet;
    NodeId next_hop = kBroadcast;
  };

  /// Build a fresh route request for `destination`.  Refused (empty) when
  /// this node's token is red, or when a fresh route already exists and
  /// `force` is not set (the caller should just use the table).
  std::optional<Packet> originate_rreq(NodeId destination, double now,
                                       bool force = false);

  /// Process a received route request.  Updates neighbor classification and
  /// reverse routes, then decides between rebroadcast, reply, and drop.
  RreqResult handle_rreq(const Packet& pkt, double measured_snr_db, double now);

  /// Process a received route reply: install forward routes and either
  /// forward it toward the request origin or deliver it here.
  RrepResult handle_rrep(const Packet& pkt, double measured_snr_db, double now);

  /// Fold one SNR sample into the neighbor's smoothed value and classify.
  NeighborClass classify_neighbor(NodeId neighbor, double measured_snr_db);

  /// Current class without updating (no samples yet counts as good).
  bool neighbor_good(NodeId neighbor) const;
  bool neighbor_has_samples(NodeId neighbor) const;
  double neighbor_snr(NodeId neighbor) const;

  /// Usable route lookup: expired rows and rows through red-token or
  /// bad-classified next hops are filtered out.
  const RouteEntry* route_to(NodeId destination, double now);

  /// Refresh the lifetime of an in-use route and mark it active.
  void touch(NodeId destination, double now);

  /// Remove rows whose next hop is `via` (link-level failure).
  void purge_via(NodeId via);
  /// Remove the row for one destination.
  void purge_to(NodeId destination);
  /// Remove every row that mentions `node` anywhere (conviction).
  void purge_node(NodeId node);
  void purge_expired(double now);

  const std::map<NodeId, RouteEntry>& table() const { return table_; }
  uint32_t own_seq() const { return own_seq_; }

 private:
  bool install(NodeId destination, NodeId next_hop, std::vector<NodeId> path,
               uint32_t seq, bool seq_known, double first_hop_snr_db,
               double now);
  bool path_mentions_red(const std::vector<NodeId>& path) const;

  /// Best reply already relayed for one discovery flood; used to suppress
  /// the reply storm a dense network would otherwise produce (every holder
  /// of a cached route answers, and every answer travels multiple hops).
  struct RelayedReply {
    uint32_t dest_seq = 0;
    bool seq_known = false;
    uint32_t hops = 0;  // route length this node would install
    double expiry_s = 0.0;
  };

  NodeId self_ = 0;
  RoutingConfig cfg_;
  const TokenRegistry* tokens_ = nullptr;
  std::vector<NeighborClass> neighbors_;  // indexed by node id
  std::vector<bool> neighbor_known_;
  std::map<NodeId, RouteEntry> table_;
  std::map<std::pair<NodeId, uint32_t>, double> rreq_seen_;     // -> expiry
  std::map<std::pair<NodeId, uint32_t>, uint32_t> rreq_best_;   // -> fewest hops
  std::map<std::pair<NodeId, uint32_t>, uint32_t> replied_;     // -> best total hops
  std::map<std::pair<NodeId, uint32_t>, RelayedReply> rrep_relayed_;
  uint32_t own_seq_ = 0;
  uint32_t rreq_counter_ = 0;
};

}  // namespace wsn
