#include "wsn/routing.hpp"

#include <algorithm>

namespace wsn {

namespace {

bool contains(const std::vector<NodeId>& v, NodeId id) {
  return std::find(v.begin(), v.end(), id) != v.end();
}

/// Chain from the packet sender back to path[i]: the reverse of the suffix
/// path[i..end].  Used to install a route toward every accumulated node.
std::vector<NodeId> chain_to(const std::vector<NodeId>& path, size_t i) {
  return std::vector<NodeId>(path.rbegin(), path.rend() - i);
}

}  // namespace

Router::Router(NodeId self, size_t node_count, const RoutingConfig& cfg,
               const TokenRegistry* tokens)
    : self_(self),
      cfg_(cfg),
      tokens_(tokens),
      neighbors_(node_count),
      neighbor_known_(node_count, false) {}

NeighborClass Router::classify_neighbor(NodeId neighbor,
                                        double measured_snr_db) {
  if (neighbor >= neighbors_.size()) {
    neighbors_.resize(neighbor + 1);
    neighbor_known_.resize(neighbor + 1, false);
  }
  NeighborClass& rec = neighbors_[neighbor];
  rec.neighbor = neighbor;
  if (!neighbor_known_[neighbor]) {
    rec.snr_ewma_db = measured_snr_db;
    neighbor_known_[neighbor] = true;
  } else {
    rec.snr_ewma_db = cfg_.snr_ewma_alpha * measured_snr_db +
                      (1.0 - cfg_.snr_ewma_alpha) * rec.snr_ewma_db;
  }
  rec.good = rec.snr_ewma_db >= cfg_.snr_threshold_db;
  return rec;
}

bool Router::neighbor_good(NodeId neighbor) const {
  if (neighbor >= neighbors_.size() || !neighbor_known_[neighbor]) return true;
  return neighbors_[neighbor].good;
}

bool Router::neighbor_has_samples(NodeId neighbor) const {
  return neighbor < neighbors_.size() && neighbor_known_[neighbor];
}

double Router::neighbor_snr(NodeId neighbor) const {
  return neighbor < neighbors_.size() ? neighbors_[neighbor].snr_ewma_db : 0.0;
}

bool Router::path_mentions_red(const std::vector<NodeId>& path) const {
  if (!tokens_) return false;
  for (NodeId id : path) {
    if (!tokens_->is_green(id)) return true;
  }
  return false;
}

std::optional<Packet> Router::originate_rreq(NodeId destination, double now,
                                             bool force) {
  if (tokens_ && !tokens_->is_green(self_)) return std::nullopt;  // barred
  if (!force && route_to(destination, now) != nullptr) return std::nullopt;

  ++own_seq_;
  ++rreq_counter_;
  Packet pkt;
  pkt.type = PacketType::Rreq;
  pkt.origin = self_;
  pkt.origin_seq = own_seq_;
  pkt.rreq_id = rreq_counter_;
  pkt.destination = destination;
  auto it = table_.find(destination);  // last known sequence, even if expired
  if (it != table_.end() && it->second.seq_known) {
    pkt.dest_seq = it->second.dest_sequence;
    pkt.dest_seq_known = true;
  }
  pkt.hop_count = 0;
  pkt.accumulated_path = {self_};
  if (tokens_) pkt.token = tokens_->token_of(self_);
  // Remember our own request so the flood echo is discarded.
  rreq_seen_[{self_, rreq_counter_}] = now + cfg_.rreq_buffer_s;
  return pkt;
}

Router::RreqResult Router::handle_rreq(const Packet& pkt,
                                       double measured_snr_db, double now) {
  RreqResult result;
  if (pkt.type != PacketType::Rreq) return result;
  if (tokens_ && !tokens_->is_green(self_)) return result;  // red: no part

  const std::vector<NodeId>& path = pkt.accumulated_path;
  if (path.empty() || path.back() != pkt.mac_src) return result;  // malformed
  if (path_has_duplicates(path)) return result;                   // malformed
  if (contains(path, self_)) return result;  // already relayed this request
  if (path_mentions_red(path)) return result;

  const NodeId sender = pkt.mac_src;
  const NeighborClass cls = classify_neighbor(sender, measured_snr_db);

  // Every node acts on the first copy of a flood, and afterwards only on
  // copies that accumulated strictly fewer hops than the best copy it has
  // already processed.  Improving copies refresh the reverse routes and
  // propagate onward, so the flood converges on fewest-hop paths even when
  // rebroadcast jitter delivers a longer copy first; every other duplicate
  // is ignored.  Per node and flood the processed hop counts strictly
  // decrease, which bounds the extra rebroadcasts.
  const std::pair<NodeId, uint32_t> key{pkt.origin, pkt.rreq_id};
  const uint32_t in_hops = static_cast<uint32_t>(path.size());
  const auto seen = rreq_seen_.find(key);
  const bool duplicate = seen != rreq_seen_.end() && seen->second > now;
  if (duplicate) {
    const auto best = rreq_best_.find(key);
    if (best != rreq_best_.end() && in_hops >= best->second) return result;
  }
  rreq_seen_[key] = now + cfg_.rreq_buffer_s;
  rreq_best_[key] = in_hops;

  if (!cls.good) return result;  // no routes through bad neighbors

  // Reverse routes: to the origin and to every node the request traversed.
  for (size_t i = 0; i < path.size(); ++i) {
    const bool is_origin = path[i] == pkt.origin;
    install(path[i], sender, chain_to(path, i),
            is_origin ? pkt.origin_seq : 0, is_origin, measured_snr_db, now);
  }

  if (pkt.destination == self_) {
    // Destination reply: first arrival, then again only for strictly
    // shorter request paths, all sharing one bumped sequence number.
    const uint32_t total_hops = static_cast<uint32_t>(path.size());
    auto rep = replied_.find(key);
    if (rep != replied_.end() && total_hops >= rep->second) return result;
    if (rep == replied_.end()) {
      own_seq_ = std::max(own_seq_ + 1,
                          pkt.dest_seq_known ? pkt.dest_seq : own_seq_ + 1);
    }
    replied_[key] = total_hops;

    Packet reply;
    reply.type = PacketType::Rrep;
    reply.origin = pkt.origin;
    reply.origin_seq = pkt.origin_seq;
    reply.rreq_id = pkt.rreq_id;
    reply.destination = self_;
    reply.dest_seq = own_seq_;
    reply.dest_seq_known = true;
    reply.hop_count = 0;
    reply.accumulated_path = {self_};
    if (tokens_) reply.token = tokens_->token_of(self_);
    result.action = RreqAction::Reply;
    result.packet = std::move(reply);
    result.next_hop = sender;
    return result;
  }

  // Intermediate reply from a fresh-enough route: sequence at least as new
  // as the one requested, and unexpired.
  const RouteEntry* fresh = route_to(pkt.destination, now);
  if (fresh != nullptr && fresh->seq_known &&
      (!pkt.dest_seq_known || fresh->dest_sequence >= pkt.dest_seq)) {
    const uint32_t total_hops =
        static_cast<uint32_t>(path.size()) + fresh->hop_count;
    auto rep = replied_.find(key);
    if (rep == replied_.end() || total_hops < rep->second) {
      replied_[key] = total_hops;
      Packet reply;
      reply.type = PacketType::Rrep;
      reply.origin = pkt.origin;
      reply.origin_seq = pkt.origin_seq;
      reply.rreq_id = pkt.rreq_id;
      reply.destination = pkt.destination;
      reply.dest_seq = fresh->dest_sequence;
      reply.dest_seq_known = true;
      // Path from the destination up to this node, destination first.
      reply.accumulated_path.assign(fresh->path.rbegin(), fresh->path.rend());
      reply.accumulated_path.push_back(self_);
      reply.hop_count = fresh->hop_count;
      if (tokens_) reply.token = tokens_->token_of(self_);
      result.action = RreqAction::Reply;
      result.packet = std::move(reply);
      result.next_hop = sender;
      return result;
    }
    return result;
  }

  // Forward the flood with this node appended.
  Packet fwd = pkt;
  fwd.accumulated_path.push_back(self_);
  fwd.hop_count = static_cast<uint16_t>(fwd.accumulated_path.size() - 1);
  result.action = RreqAction::Rebroadcast;
  result.packet = std::move(fwd);
  return result;
}

Router::RrepResult Router::handle_rrep(const Packet& pkt,
                                       double measured_snr_db, double now) {
  RrepResult result;
  if (pkt.type != PacketType::Rrep) return result;
  if (tokens_ && !tokens_->is_green(self_)) return result;

  const std::vector<NodeId>& path = pkt.accumulated_path;
  if (path.empty() || path.back() != pkt.mac_src) return result;
  if (path_has_duplicates(path)) return result;
  if (contains(path, self_)) return result;
  if (path_mentions_red(path)) return result;

  const NodeId sender = pkt.mac_src;
  const NeighborClass cls = classify_neighbor(sender, measured_snr_db);
  if (!cls.good) return result;  // reply from a bad neighbor: not installed

  // Forward routes: the replied destination is path[0]; every node along
  // the accumulated reply path becomes reachable through the sender.
  for (size_t i = 0; i < path.size(); ++i) {
    const bool is_dest = path[i] == pkt.destination;
    install(path[i], sender, chain_to(path, i), is_dest ? pkt.dest_seq : 0,
            is_dest && pkt.dest_seq_known, measured_snr_db, now);
  }

  if (pkt.origin == self_) {
    result.action = RrepAction::Deliver;
    result.packet = pkt;
    return result;
  }

  // Relay a reply only if it beats every reply already relayed for this
  // flood (newer destination sequence, or fewer hops at equal knowledge).
  // Without this, a dense network answers one discovery with hundreds of
  // cached-route replies and each travels multiple unicast hops: the relay
  // storm starves data traffic for seconds.
  const std::pair<NodeId, uint32_t> flood_key{pkt.origin, pkt.rreq_id};
  const uint32_t in_hops = static_cast<uint32_t>(path.size());
  auto relayed = rrep_relayed_.find(flood_key);
  if (relayed != rrep_relayed_.end() && relayed->second.expiry_s > now) {
    const RelayedReply& best = relayed->second;
    const bool newer_seq =
        pkt.dest_seq_known && (!best.seq_known || pkt.dest_seq > best.dest_seq);
    const bool older_seq =
        best.seq_known && (!pkt.dest_seq_known || pkt.dest_seq < best.dest_seq);
    if (!newer_seq && (older_seq || in_hops >= best.hops)) return result;
  }
  rrep_relayed_[flood_key] = RelayedReply{pkt.dest_seq, pkt.dest_seq_known,
                                          in_hops, now + cfg_.rreq_buffer_s};

  const RouteEntry* reverse = route_to(pkt.origin, now);
  if (reverse == nullptr) return result;  // reverse path gone: drop

  Packet fwd = pkt;
  fwd.accumulated_path.push_back(self_);
  fwd.hop_count = static_cast<uint16_t>(fwd.hop_count + 1);
  result.action = RrepAction::Forward;
  result.packet = std::move(fwd);
  result.next_hop = reverse->next_hop;
  return result;
}

bool Router::install(NodeId destination, NodeId next_hop,
                     std::vector<NodeId> path, uint32_t seq, bool seq_known,
                     double first_hop_snr_db, double now) {
  if (destination == self_) return false;
  if (tokens_ && !tokens_->is_green(next_hop)) return false;
  if (!neighbor_good(next_hop)) return false;
  if (path_has_duplicates(path)) return false;

  const uint16_t hops = static_cast<uint16_t>(path.size());
  auto it = table_.find(destination);
  bool replace;
  if (it == table_.end() || it->second.expiry_s <= now) {
    replace = true;
  } else {
    const RouteEntry& old = it->second;
    if (seq_known && (!old.seq_known || seq > old.dest_sequence)) {
      replace = true;  // strictly newer information
    } else if (seq_known && old.seq_known && seq < old.dest_sequence) {
      replace = false;  // stale information
    } else if (hops != old.hop_count) {
      replace = hops < old.hop_count;  // smallest hop count wins
    } else if (first_hop_snr_db != old.min_link_snr_db) {
      replace = first_hop_snr_db > old.min_link_snr_db;
    } else {
      replace = next_hop < old.next_hop;  // deterministic final tie-break
    }
  }
  if (!replace) {
    // Same next hop re-reporting the surviving route refreshes its life.
    if (it != table_.end() && it->second.next_hop == next_hop &&
        it->second.hop_count == hops) {
      it->second.expiry_s = now + cfg_.route_lifetime_s;
    }
    return false;
  }

  RouteEntry entry;
  entry.destination = destination;
  entry.next_hop = next_hop;
  entry.hop_count = hops;
  entry.dest_sequence = seq_known ? seq : (it != table_.end() && it->second.seq_known
                                               ? it->second.dest_sequence
                                               : 0);
  entry.seq_known = seq_known || (it != table_.end() && it->second.seq_known);
  entry.expiry_s = now + cfg_.route_lifetime_s;
  entry.path = std::move(path);
  entry.min_link_snr_db = first_hop_snr_db;
  entry.active = it != table_.end() && it->second.expiry_s > now &&
                 it->second.active;
  table_[destination] = std::move(entry);
  return true;
}

const RouteEntry* Router::route_to(NodeId destination, double now) {
  auto it = table_.find(destination);
  if (it == table_.end()) return nullptr;
  const RouteEntry& e = it->second;
  if (e.expiry_s <= now) return nullptr;
  if (tokens_ && !tokens_->is_green(e.next_hop)) return nullptr;
  if (!neighbor_good(e.next_hop)) return nullptr;
  return &e;
}

void Router::touch(NodeId destination, double now) {
  auto it = table_.find(destination);
  if (it == table_.end()) return;
  it->second.expiry_s = now + cfg_.route_lifetime_s;
  it->second.active = true;
}

void Router::purge_via(NodeId via) {
  for (auto it = table_.begin(); it != table_.end();) {
    it = it->second.next_hop == via ? table_.erase(it) : std::next(it);
  }
}

void Router::purge_to(NodeId destination) { table_.erase(destination); }

void Router::purge_node(NodeId node) {
  for (auto it = table_.begin(); it != table_.end();) {
    const RouteEntry& e = it->second;
    const bool hit = e.destination == node || e.next_hop == node ||
                     contains(e.path, node);
    it = hit ? table_.erase(it) : std::next(it);
  }
}

void Router::purge_expired(double now) {
  for (auto it = table_.begin(); it != table_.end();) {
    it = it->second.expiry_s <= now ? table_.erase(it) : std::next(it);
  }
  for (auto it = rreq_seen_.begin(); it != rreq_seen_.end();) {
    if (it->second <= now) {
      replied_.erase(it->first);
      rreq_best_.erase(it->first);
      it = rreq_seen_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = rrep_relayed_.begin(); it != rrep_relayed_.end();) {
    it = it->second.expiry_s <= now ? rrep_relayed_.erase(it) : std::next(it);
  }
}

}  // namespace wsn
