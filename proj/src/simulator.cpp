#include "wsn/simulator.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>

namespace wsn {

namespace {

const char* packet_type_name(PacketType t) {
  switch (t) {
    case PacketType::Rreq: return "rreq";
    case PacketType::Rrep: return "rrep";
    case PacketType::Rerr: return "rerr";
    case PacketType::RepairNotice: return "repair_notice";
    case PacketType::Beacon: return "beacon";
    case PacketType::Data: return "data";
  }
  return "?";
}

uint64_t delivery_key(NodeId origin, uint32_t data_id) {
  return (static_cast<uint64_t>(origin) << 32) | data_id;
}

// Power-control feedback older than this many beacon periods is stale: the
// link is driven open-loop and its loop state restarts on the next report.
constexpr double kFeedbackStaleBeacons = 3.0;

}  // namespace

Channel Simulator::make_channel(const Scenario& sc, Rng& rng) {
  sc.validate();
  return Channel(place_nodes(sc, rng), sc.radio, sc.model);
}

Simulator::Simulator(const Scenario& sc, bool record_trace)
    : sc_(sc),
      rng_(sc.rng_seed),
      chan_(make_channel(sc_, rng_)),
      tokens_(sc.node_count),
      record_trace_(record_trace) {
  const PowerControlConfig pcfg = sc_.effective_power_config();
  const double ber_floor =
      target_rx_power(sc_.radio, sc_.ber_target, pcfg.margin_db,
                      sc_.bits_per_symbol)
          .value;
  sim_target_rx_dbm_ =
      std::max(ber_floor, sc_.radio.rx_threshold_dbm + pcfg.margin_db);

  nodes_.resize(sc_.node_count);
  for (NodeId id = 0; id < sc_.node_count; ++id) {
    Node& n = nodes_[id];
    n.id = id;
    n.router = Router(id, sc_.node_count, sc_.routing, &tokens_);
    n.recovery = RecoveryManager(id, sc_.node_count, sc_.recovery);
    n.power.target_rx_power_dbm = sim_target_rx_dbm_;
    n.power.cfg = pcfg;
    n.power.default_tx_power_dbm = sc_.radio.tx_power_dbm;
    n.risk_latched.assign(sc_.node_count, 0);
  }
  for (NodeId b : sc_.blackhole_nodes) nodes_[b].is_blackhole = true;

  ledger_.nodes.assign(sc_.node_count, NodeEnergy{});
  ledger_.initial_budget_mwh = sc_.energy.budget_mwh;
  rerr_received_.assign(sc_.node_count, 0);
  conviction_time_.assign(sc_.node_count, -1.0);
  active_watches_.assign(sc_.node_count, 0);

  // Initial events.  Beacon phases are drawn in node-id order so the stream
  // position is a pure function of (scenario, seed).
  for (NodeId id = 0; id < sc_.node_count; ++id) {
    schedule(rng_.uniform(0.0, sc_.beacon_period_s), EventKind::BeaconTimer,
             id);
  }
  if (sc_.traffic.packet_count > 0 && sc_.traffic.start_s <= sc_.sim_time_s) {
    schedule(sc_.traffic.start_s, EventKind::AppSend, sc_.source_node, 0);
  }
  if (sc_.sim_time_s >= 1.0) schedule(1.0, EventKind::Housekeep, 0);
  for (size_t i = 0; i < sc_.link_failures.size(); ++i) {
    const LinkFailure& lf = sc_.link_failures[i];
    schedule(lf.time_s, EventKind::LinkFail, lf.node_a, lf.node_b);
  }
}

void Simulator::schedule(double time, EventKind kind, NodeId node, uint64_t a,
                         uint64_t b) {
  queue_.push(Event{time, seq_++, kind, node, a, b});
}

RunMetrics Simulator::run() {
  while (!queue_.empty() && queue_.top().time <= sc_.sim_time_s) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    dispatch(ev);
  }
  now_ = sc_.sim_time_s;
  for (NodeId id = 0; id < sc_.node_count; ++id) accrue_idle(id);

  for (NodeId id = 0; id < sc_.node_count; ++id) {
    const NodeEnergy& e = ledger_.nodes[id];
    tracef("t=%.9f n=%u energy tx=%.17g rx=%.17g idle=%.17g dead=%d\n", now_,
           id, e.tx_mwh, e.rx_mwh, e.idle_mwh, e.dead ? 1 : 0);
  }

  RunMetrics m;
  m.node_count = sc_.node_count;
  m.tx_power_dbm = sc_.radio.tx_power_dbm;
  m.payload_bytes = sc_.traffic.payload_bytes;
  m.seed = sc_.rng_seed;
  m.sim_time_s = sc_.sim_time_s;
  m.packets_sent = sent_;
  m.packets_received = deliveries_.size();
  m.pdr = pdr(m.packets_received, m.packets_sent);
  m.mean_delay_s = mean_end_to_end_delay(deliveries_);
  m.throughput_pps =
      sc_.sim_time_s > 0.0 ? static_cast<double>(m.packets_received) /
                                 sc_.sim_time_s
                           : 0.0;
  const EnergyTotals totals = energy_summary(ledger_);
  m.total_energy_mwh = totals.total_mwh;
  m.mean_energy_per_node_mwh = totals.per_node_mean_mwh;
  return m;
}

void Simulator::dispatch(const Event& ev) {
  switch (ev.kind) {
    case EventKind::AppSend:
      on_app_send(ev.node, ev.a);
      break;
    case EventKind::MacAttempt:
      on_mac_attempt(ev.node);
      break;
    case EventKind::TxStart:
      on_tx_start(ev.node);
      break;
    case EventKind::TxEnd:
      on_tx_end(ev.node, ev.a);
      break;
    case EventKind::BeaconTimer:
      on_beacon_timer(ev.node);
      break;
    case EventKind::Housekeep:
      on_housekeep();
      break;
    case EventKind::DiscoveryTimeout:
    case EventKind::RepairDeadline:
      on_recovery_round_end(ev.node, static_cast<NodeId>(ev.a),
                            static_cast<uint32_t>(ev.b));
      break;
    case EventKind::WatchDeadline:
      on_watch_deadline(ev.a);
      break;
    case EventKind::LinkFail:
      chan_.fail_link(ev.node, static_cast<NodeId>(ev.a));
      tracef("t=%.9f link_fail a=%u b=%u\n", now_, ev.node,
             static_cast<NodeId>(ev.a));
      break;
  }
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

void Simulator::charge(NodeId node, EnergyMode mode, double power_mw,
                       double duration_s) {
  account_energy(ledger_, node, mode, power_mw, duration_s);
  if (ledger_.nodes[node].dead && nodes_[node].alive) kill_node(node);
}

void Simulator::accrue_idle(NodeId node) {
  Node& n = nodes_[node];
  if (!n.alive) return;
  const double dt = now_ - n.last_idle_accrual_s;
  if (dt <= 0.0) return;
  n.last_idle_accrual_s = now_;
  charge(node, EnergyMode::Idle, sc_.energy.idle_mw, dt);
}

void Simulator::kill_node(NodeId node) {
  Node& n = nodes_[node];
  n.alive = false;
  n.txq.clear();
  tracef("t=%.9f n=%u death\n", now_, node);
}

double Simulator::remaining_energy_mwh(NodeId node) const {
  return ledger_.initial_budget_mwh - ledger_.nodes[node].consumed_mwh();
}

// ---------------------------------------------------------------------------
// MAC
// ---------------------------------------------------------------------------

double Simulator::broadcast_power(const Node& n) const {
  if (!sc_.power_control_enabled) return n.power.clamp(sc_.radio.tx_power_dbm);
  return n.power.broadcast_tx_power([this, &n](NodeId id) {
    const NeighborPowerRecord* rec = n.recovery.record(id);
    if (rec == nullptr || !rec->on_active_route) return false;
    // Links without recent feedback fall out of the maximum; if none are
    // fresh the broadcast goes out at the open-loop default.
    auto it = n.power.links.find(id);
    return it != n.power.links.end() &&
           now_ - it->second.last_feedback_s <=
               kFeedbackStaleBeacons * sc_.beacon_period_s;
  });
}

double Simulator::controlled_power(const Node& n, NodeId neighbor) const {
  if (!sc_.power_control_enabled) return n.power.clamp(sc_.radio.tx_power_dbm);
  // With no recent feedback the closed-loop value is untrustworthy -- it may
  // sit below the decode floor, and a link that cannot decode never produces
  // the feedback that would raise it again.  Drive such links open-loop.
  auto it = n.power.links.find(neighbor);
  if (it != n.power.links.end() && it->second.has_feedback &&
      now_ - it->second.last_feedback_s > kFeedbackStaleBeacons * sc_.beacon_period_s) {
    return n.power.clamp(sc_.radio.tx_power_dbm);
  }
  return n.power.current_tx_power(neighbor);
}

void Simulator::enqueue_frame(NodeId node, Packet pkt, double tx_power_dbm,
                              double earliest_s) {
  Node& n = nodes_[node];
  if (!n.alive) return;
  pkt.mac_src = node;
  pkt.token = tokens_.token_of(node);
  if (pkt.type == PacketType::Rreq || pkt.type == PacketType::Rrep) {
    paths_.emplace_back(now_, pkt.accumulated_path);
  }
  PendingFrame f;
  f.pkt = std::move(pkt);
  f.tx_power_dbm = tx_power_dbm;
  f.cw = sc_.mac.cw_min;
  f.earliest_s = earliest_s;
  n.txq.push_back(std::move(f));
  maybe_schedule_attempt(node, std::max(now_, earliest_s));
}

void Simulator::maybe_schedule_attempt(NodeId node, double at) {
  Node& n = nodes_[node];
  if (!n.alive || n.txq.empty() || n.attempt_pending || n.tx_active) return;
  n.attempt_pending = true;
  schedule(std::max(at, now_), EventKind::MacAttempt, node);
}

double Simulator::visible_busy_until(NodeId node) const {
  double busy = 0.0;
  for (size_t i = 0; i < air_.size(); ++i) {
    const AirFrame& g = air_[i];
    if (g.end_s <= now_ || g.start_s > now_) continue;
    if (g.sender == node) {
      busy = std::max(busy, g.end_s);
    } else if (g.tx_mw * chan_.gain(g.sender, node) >=
               chan_.sense_floor_mw()) {
      busy = std::max(busy, g.end_s);
    }
  }
  return busy;
}

bool Simulator::collided(const AirFrame& f, NodeId receiver,
                         uint64_t self_id) const {
  for (size_t i = 0; i < air_.size(); ++i) {
    const uint64_t id = air_base_ + i;
    if (id == self_id) continue;
    const AirFrame& g = air_[i];
    if (!(g.start_s < f.end_s && f.start_s < g.end_s)) continue;
    if (g.sender == receiver) return true;  // half-duplex: was transmitting
    if (g.sender == f.sender) continue;     // same radio transmits serially
    if (g.tx_mw * chan_.gain(g.sender, receiver) >= chan_.sense_floor_mw()) {
      return true;
    }
  }
  return false;
}

const Simulator::AirFrame* Simulator::air_frame(uint64_t id) const {
  if (id < air_base_ || id - air_base_ >= air_.size()) return nullptr;
  return &air_[id - air_base_];
}

void Simulator::prune_air() {
  // Retention guard: anything that could still overlap a live frame stays.
  const double guard = max_airtime_s_ + 1e-6;
  while (!air_.empty() && air_.front().end_s + guard < now_) {
    air_.pop_front();
    ++air_base_;
  }
}

void Simulator::on_mac_attempt(NodeId node) {
  Node& n = nodes_[node];
  n.attempt_pending = false;
  if (!n.alive || n.txq.empty()) return;
  PendingFrame& f = n.txq.front();
  if (now_ < f.earliest_s) {
    maybe_schedule_attempt(node, f.earliest_s);
    return;
  }
  if (n.tx_active) {
    maybe_schedule_attempt(node, n.own_tx_end_s);
    return;
  }
  const double busy = visible_busy_until(node);
  if (busy > now_) {
    // Carrier busy: one retry consumed, contention window doubles.
    f.retry_count += 1;
    if (f.retry_count > sc_.mac.retry_limit) {
      PendingFrame dropped = std::move(n.txq.front());
      n.txq.pop_front();
      mac_drop(node, std::move(dropped));
      maybe_schedule_attempt(node, now_);
      return;
    }
    f.cw = std::min(f.cw * 2, sc_.mac.cw_max);
    const double backoff =
        busy + sc_.mac.difs_s +
        static_cast<double>(rng_.uniform_u32(f.cw)) * sc_.mac.slot_s;
    maybe_schedule_attempt(node, backoff);
    return;
  }
  // Idle: commit to transmit after one inter-frame space.  The gap is not
  // re-sensed; two nodes committing inside the same window will collide.
  n.attempt_pending = true;
  schedule(now_ + sc_.mac.difs_s, EventKind::TxStart, node);
}

void Simulator::on_tx_start(NodeId node) {
  Node& n = nodes_[node];
  n.attempt_pending = false;
  if (!n.alive || n.txq.empty()) return;
  PendingFrame& f = n.txq.front();
  const double dur =
      frame_airtime_s(f.pkt, sc_.data_rate_bps, sc_.mac.header_bytes);

  accrue_idle(node);
  if (!n.alive) return;
  charge(node, EnergyMode::Tx,
         to_mw(f.tx_power_dbm) + sc_.energy.tx_electronics_mw, dur);
  if (!n.alive) return;  // battery died starting this frame

  const uint64_t air_id = air_next_++;
  AirFrame af;
  af.sender = node;
  af.start_s = now_;
  af.end_s = now_ + dur;
  af.tx_mw = to_mw(f.tx_power_dbm);
  af.pkt = f.pkt;
  air_.push_back(std::move(af));
  max_airtime_s_ = std::max(max_airtime_s_, dur);

  n.tx_active = true;
  n.own_tx_end_s = now_ + dur;
  tracef("t=%.9f n=%u tx type=%s to=%u bytes=%zu dbm=%.17g\n", now_, node,
         packet_type_name(f.pkt.type), f.pkt.mac_dst,
         frame_bytes(f.pkt, sc_.mac.header_bytes), f.tx_power_dbm);
  schedule(now_ + dur, EventKind::TxEnd, node, air_id);
}

void Simulator::on_tx_end(NodeId node, uint64_t air_id) {
  const AirFrame* slot = air_frame(air_id);
  if (slot == nullptr) return;
  const AirFrame f = *slot;  // stable copy; handlers may grow air_ bookkeeping
  Node& sender = nodes_[node];
  sender.tx_active = false;

  const double dur = f.end_s - f.start_s;
  std::vector<NodeId> decoded;
  std::vector<double> decoded_rx_dbm;
  for (NodeId j : chan_.reach(node)) {
    Node& rx = nodes_[j];
    if (!rx.alive) continue;
    const double rx_mw = f.tx_mw * chan_.gain(node, j);
    if (rx_mw < chan_.decode_floor_mw()) continue;
    if (collided(f, j, air_id)) continue;
    accrue_idle(j);
    if (!rx.alive) continue;
    charge(j, EnergyMode::Rx, sc_.energy.rx_mw, dur);
    if (!rx.alive) continue;
    decoded.push_back(j);
    decoded_rx_dbm.push_back(to_dbm(rx_mw));
  }

  for (size_t i = 0; i < decoded.size(); ++i) {
    if (!nodes_[decoded[i]].alive) continue;
    handle_decoded(decoded[i], f, decoded_rx_dbm[i], decoded);
  }

  resolve_watches_for_tx(f, decoded);

  if (sender.alive) {
    const bool dst_ok =
        f.pkt.is_broadcast() ||
        std::find(decoded.begin(), decoded.end(), f.pkt.mac_dst) !=
            decoded.end();
    finish_frame(node, dst_ok);
    maybe_schedule_attempt(node, now_);
  }
  prune_air();
}

void Simulator::finish_frame(NodeId node, bool delivered_to_dst) {
  Node& n = nodes_[node];
  if (n.txq.empty()) return;
  if (delivered_to_dst) {
    n.txq.pop_front();
    return;
  }
  PendingFrame& f = n.txq.front();
  f.retry_count += 1;
  if (f.retry_count > sc_.mac.retry_limit) {
    PendingFrame dropped = std::move(n.txq.front());
    n.txq.pop_front();
    mac_drop(node, std::move(dropped));
    return;
  }
  f.cw = std::min(f.cw * 2, sc_.mac.cw_max);
  f.earliest_s = now_ + sc_.mac.difs_s +
                 static_cast<double>(rng_.uniform_u32(f.cw)) * sc_.mac.slot_s;
}

void Simulator::mac_drop(NodeId node, PendingFrame&& frame) {
  Node& n = nodes_[node];
  Packet pkt = std::move(frame.pkt);
  tracef("t=%.9f n=%u mac_drop type=%s to=%u attempts=%d\n", now_, node,
         packet_type_name(pkt.type), pkt.mac_dst, frame.retry_count);
  if (pkt.is_broadcast()) return;

  // Repeated delivery failure is link-level evidence: routes through that
  // neighbor are stale.
  n.router.purge_via(pkt.mac_dst);

  if (pkt.type == PacketType::Data) {
    if (!sc_.recovery_enabled) {
      send_rerr_toward(node, pkt.origin, pkt.destination);
      tracef("t=%.9f n=%u data_drop id=%u reason=no_recovery\n", now_, node,
             pkt.data_id);
      return;
    }
    pkt.handoff_return = false;
    start_recovery(node, pkt.destination, &pkt);
  }
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

void Simulator::predict_breaks_via(NodeId node, NodeId neighbor) {
  if (!sc_.recovery_enabled) return;
  Node& n = nodes_[node];
  const bool at_risk =
      n.recovery.link_at_risk(neighbor, sc_.radio.rx_threshold_dbm, now_);
  if (!at_risk) {
    n.risk_latched[neighbor] = 0;  // healthy again: re-arm the trigger
    return;
  }
  if (n.risk_latched[neighbor]) return;  // already acted on this decline
  n.risk_latched[neighbor] = 1;
  std::vector<NodeId> dests;
  for (const auto& [dest, entry] : n.router.table()) {
    if (entry.next_hop == neighbor && entry.active && entry.expiry_s >= now_) {
      dests.push_back(dest);
    }
  }
  for (NodeId dest : dests) {
    n.router.purge_to(dest);
    tracef("t=%.9f n=%u predict_break via=%u dest=%u\n", now_, node, neighbor,
           dest);
    start_recovery(node, dest, nullptr);
  }
}

void Simulator::handle_decoded(NodeId receiver, const AirFrame& f,
                               double rx_dbm,
                               const std::vector<NodeId>& decoders) {
  const Packet& pkt = f.pkt;
  const NodeId sender = f.sender;
  Node& n = nodes_[receiver];

  // Red tokens shut a node out of the network in both directions: nobody
  // processes its frames, and it processes nobody's.
  if (!tokens_.is_green(sender) || !tokens_.is_green(receiver)) return;

  n.recovery.update_npl(sender, rx_dbm, now_);
  n.router.classify_neighbor(sender, chan_.snr_db(rx_dbm));
  predict_breaks_via(receiver, sender);
  if (!n.alive) return;

  switch (pkt.type) {
    case PacketType::Beacon: {
      if (!sc_.power_control_enabled) break;
      for (const RssiFeedback& fb : pkt.feedback) {
        if (fb.neighbor != receiver) continue;
        // A long feedback gap means the loop state describes a link that no
        // longer exists (the controlled level may not even decode anymore).
        // Restart that link's loop from the open-loop default instead of
        // resuming from the dead value.
        auto lk = n.power.links.find(sender);
        if (lk != n.power.links.end() && lk->second.has_feedback &&
            now_ - lk->second.last_feedback_s > kFeedbackStaleBeacons * sc_.beacon_period_s) {
          n.power.links.erase(lk);
        }
        record_feedback(n.power, sender, fb.rssi_dbm, now_);
        adjust_tx_power(n.power, sender);
        break;
      }
      break;
    }
    case PacketType::Rreq: {
      Router::RreqResult r =
          n.router.handle_rreq(pkt, chan_.snr_db(rx_dbm), now_);
      if (r.action == Router::RreqAction::Rebroadcast) {
        r.packet.mac_dst = kBroadcast;
        enqueue_frame(receiver, std::move(r.packet), broadcast_power(n),
                      now_ + rng_.uniform(0.0, sc_.mac.rreq_jitter_max_s));
      } else if (r.action == Router::RreqAction::Reply) {
        r.packet.mac_dst = r.next_hop;
        enqueue_frame(receiver, std::move(r.packet),
                      controlled_power(n, r.next_hop), now_);
      }
      flush_episode_if_routed(receiver);
      break;
    }
    case PacketType::Rrep: {
      Router::RrepResult r =
          n.router.handle_rrep(pkt, chan_.snr_db(rx_dbm), now_);
      if (r.action == Router::RrepAction::Forward) {
        r.packet.mac_dst = r.next_hop;
        enqueue_frame(receiver, std::move(r.packet),
                      controlled_power(n, r.next_hop), now_);
      }
      flush_episode_if_routed(receiver);
      break;
    }
    case PacketType::Data: {
      if (pkt.destination == receiver) {
        if (pkt.mac_dst != receiver) break;  // overheard copy of a final hop
        if (delivered_keys_.insert(delivery_key(pkt.origin, pkt.data_id))
                .second) {
          deliveries_.push_back({pkt.data_id, pkt.app_send_time_s, now_,
                                 pkt.airtime_accum_s});
          tracef("t=%.9f n=%u deliver id=%u src=%u send=%.17g delay=%.17g "
                 "airtime=%.17g\n",
                 now_, receiver, pkt.data_id, pkt.origin, pkt.app_send_time_s,
                 now_ - pkt.app_send_time_s, pkt.airtime_accum_s);
        }
        break;
      }
      if (pkt.mac_dst != receiver) break;  // promiscuous copy, no duty

      // Forwarding duty accepted: the sender's umpire panel starts watching.
      register_watch(sender, receiver, pkt, decoders);

      if (n.is_blackhole) {
        tracef("t=%.9f n=%u blackhole_drop id=%u\n", now_, receiver,
               pkt.data_id);
        break;
      }

      Packet fwd = pkt;
      if (fwd.handoff_return) {
        fwd.handoff_return = false;
        // The downstream node handed the packet back: whatever route went
        // through it toward this destination is unusable.
        const RouteEntry* e = n.router.route_to(fwd.destination, now_);
        if (e != nullptr && e->next_hop == sender) {
          n.router.purge_to(fwd.destination);
        }
        if (fwd.attempts >= sc_.recovery.max_attempts) {
          upper_notices_.push_back(fwd.data_id);
          tracef("t=%.9f n=%u upper_notify id=%u attempts=%d\n", now_,
                 receiver, fwd.data_id, fwd.attempts);
          break;
        }
        fwd.attempts += 1;  // the prehop starts a fresh delivery trial
      } else {
        n.prehop_for[fwd.destination] = sender;
      }
      forward_or_recover(receiver, std::move(fwd));
      break;
    }
    case PacketType::Rerr: {
      if (pkt.mac_dst != receiver) break;
      rerr_received_[receiver] += 1;
      tracef("t=%.9f n=%u rerr_rx from=%u\n", now_, receiver, sender);
      for (NodeId dest : pkt.unreachable) {
        const RouteEntry* e = n.router.route_to(dest, now_);
        if (e != nullptr && e->next_hop == sender) n.router.purge_to(dest);
        if (receiver != pkt.origin && pkt.hop_count < 32) {
          auto it = n.prehop_for.find(dest);
          if (it != n.prehop_for.end() && it->second != sender) {
            Packet relay;
            relay.type = PacketType::Rerr;
            relay.origin = pkt.origin;
            relay.hop_count = pkt.hop_count + 1;
            relay.unreachable = {dest};
            relay.mac_dst = it->second;
            enqueue_frame(receiver, std::move(relay),
                          controlled_power(n, it->second), now_);
          }
        }
      }
      break;
    }
    case PacketType::RepairNotice:
      // Informational: the sender is repairing.  Watch exculpation keys off
      // the transmission itself; receivers take no routing action.
      break;
  }
}

void Simulator::forward_or_recover(NodeId node, Packet pkt) {
  Node& n = nodes_[node];
  const NodeId dest = pkt.destination;

  if (RecoveryManager::Episode* ep = n.recovery.episode(dest)) {
    if (!n.recovery.enqueue_packet(*ep, std::move(pkt))) {
      tracef("t=%.9f n=%u queue_drop dest=%u\n", now_, node, dest);
    }
    return;
  }

  const RouteEntry* e = n.router.route_to(dest, now_);
  if (e != nullptr) {
    // An at-risk link is a repair trigger, not a dispatch filter: while the
    // link still decodes, traffic keeps flowing over it.
    dispatch_data(node, std::move(pkt), *e);
    return;
  }
  if (!sc_.recovery_enabled && pkt.origin != node) {
    // Error-reporting baseline: only the origin may flood for a route;
    // a relay reports the break toward the source and sheds the packet.
    send_rerr_toward(node, pkt.origin, dest);
    tracef("t=%.9f n=%u data_drop id=%u reason=no_route\n", now_, node,
           pkt.data_id);
    return;
  }
  start_recovery(node, dest, &pkt);
}

void Simulator::dispatch_data(NodeId node, Packet pkt,
                              const RouteEntry& route) {
  Node& n = nodes_[node];
  n.router.touch(pkt.destination, now_);
  n.recovery.mark_active(route.next_hop, true);
  pkt.mac_dst = route.next_hop;
  pkt.airtime_accum_s +=
      frame_airtime_s(pkt, sc_.data_rate_bps, sc_.mac.header_bytes);
  enqueue_frame(node, std::move(pkt), controlled_power(n, route.next_hop),
                now_);
}

void Simulator::start_recovery(NodeId node, NodeId dest, Packet* pkt) {
  Node& n = nodes_[node];
  // With self-recovery off, the episode machinery still serves the origin's
  // own discovery; relays drop instead of repairing.
  if (!sc_.recovery_enabled && (pkt == nullptr || pkt->origin != node)) {
    if (pkt != nullptr) {
      tracef("t=%.9f n=%u data_drop id=%u reason=no_recovery\n", now_, node,
             pkt->data_id);
    }
    return;
  }
  RecoveryManager::Episode& ep = n.recovery.open_episode(dest);
  if (pkt != nullptr) {
    if (!n.recovery.enqueue_packet(ep, *pkt)) {
      tracef("t=%.9f n=%u queue_drop dest=%u\n", now_, node, dest);
    }
  }
  if (ep.repair_pending) return;  // a round is already in flight
  run_recovery_decision(node, dest);
}

void Simulator::drop_exhausted(NodeId node, RecoveryManager::Episode& ep) {
  std::deque<Packet> keep;
  for (Packet& p : ep.queue) {
    if (p.attempts >= sc_.recovery.max_attempts) {
      upper_notices_.push_back(p.data_id);
      tracef("t=%.9f n=%u upper_notify id=%u attempts=%d\n", now_, node,
             p.data_id, p.attempts);
    } else {
      keep.push_back(std::move(p));
    }
  }
  ep.queue = std::move(keep);
}

void Simulator::run_recovery_decision(NodeId node, NodeId dest) {
  Node& n = nodes_[node];
  RecoveryManager::Episode* ep = n.recovery.episode(dest);
  if (ep == nullptr) return;

  drop_exhausted(node, *ep);
  if (ep->queue.empty() && ep->round_id > 0) {
    // A proactive repair already ran its round; nothing is waiting.
    n.recovery.close_episode(dest);
    return;
  }

  const bool is_source = !ep->queue.empty()
                             ? ep->queue.front().origin == node
                             : node == sc_.source_node;
  const int attempts = !ep->queue.empty() ? ep->queue.front().attempts : 0;
  const double threshold =
      sc_.recovery.repair_energy_fraction * ledger_.initial_budget_mwh;
  const RecoveryDecision decision = RecoveryManager::decide_recovery(
      is_source, attempts, remaining_energy_mwh(node), threshold,
      sc_.recovery.max_attempts);
  tracef("t=%.9f n=%u decision d=%s dest=%u attempts=%d\n", now_, node,
         to_string(decision), dest, attempts);

  // Watched forwarders broadcast their repair intent once per episode so the
  // umpire panel does not mistake buffering for a silent drop.
  if (sc_.umpiring_enabled && !ep->notice_sent &&
      decision != RecoveryDecision::UpperLayerNotify) {
    Packet notice;
    notice.type = PacketType::RepairNotice;
    notice.origin = node;
    notice.unreachable = {dest};
    enqueue_frame(node, std::move(notice), broadcast_power(n), now_);
    ep->notice_sent = true;
  }

  switch (decision) {
    case RecoveryDecision::UpperLayerNotify: {
      drop_exhausted(node, *ep);
      n.recovery.close_episode(dest);
      return;
    }
    case RecoveryDecision::NotifySource:
    case RecoveryDecision::LocalRepair: {
      std::optional<Packet> req = n.router.originate_rreq(dest, now_, true);
      if (!req.has_value()) {
        for (const Packet& p : ep->queue) {
          tracef("t=%.9f n=%u data_drop id=%u reason=red_origin\n", now_, node,
                 p.data_id);
        }
        n.recovery.close_episode(dest);
        return;
      }
      req->mac_dst = kBroadcast;
      enqueue_frame(node, std::move(*req), broadcast_power(n), now_);
      ep->round_id = ++recovery_rounds_;  // globally unique, never aliased
      ep->repair_pending = true;
      const bool source_round = decision == RecoveryDecision::NotifySource;
      const double wait =
          source_round ? sc_.routing.rrep_wait_s : sc_.recovery.repair_deadline_s;
      schedule(now_ + wait,
               source_round ? EventKind::DiscoveryTimeout
                            : EventKind::RepairDeadline,
               node, dest, ep->round_id);
      return;
    }
    case RecoveryDecision::HandoffToPrehop: {
      auto it = n.prehop_for.find(dest);
      const bool prehop_ok = it != n.prehop_for.end() &&
                             tokens_.is_green(it->second) &&
                             it->second != node;
      if (!prehop_ok) {
        // Nobody upstream to hand the flow to: report and shed the queue.
        if (!ep->queue.empty()) {
          send_rerr_toward(node, ep->queue.front().origin, dest);
        }
        for (const Packet& p : ep->queue) {
          tracef("t=%.9f n=%u data_drop id=%u reason=no_prehop\n", now_, node,
                 p.data_id);
        }
        n.recovery.close_episode(dest);
        return;
      }
      const NodeId prehop = it->second;
      tracef("t=%.9f n=%u handoff to=%u dest=%u count=%zu\n", now_, node,
             prehop, dest, ep->queue.size());
      std::deque<Packet> queue = std::move(ep->queue);
      n.recovery.close_episode(dest);
      for (Packet& p : queue) {
        p.handoff_return = true;
        p.mac_dst = prehop;
        p.airtime_accum_s +=
            frame_airtime_s(p, sc_.data_rate_bps, sc_.mac.header_bytes);
        enqueue_frame(node, std::move(p), controlled_power(n, prehop), now_);
      }
      return;
    }
  }
}

void Simulator::on_recovery_round_end(NodeId node, NodeId dest,
                                      uint32_t round) {
  Node& n = nodes_[node];
  if (!n.alive) return;
  RecoveryManager::Episode* ep = n.recovery.episode(dest);
  if (ep == nullptr || ep->round_id != round || !ep->repair_pending) return;
  ep->repair_pending = false;

  if (n.router.route_to(dest, now_) != nullptr) {
    flush_episode_if_routed(node);
    return;
  }
  // The round failed: every buffered packet is charged one trial.
  for (Packet& p : ep->queue) {
    if (p.attempts < sc_.recovery.max_attempts) p.attempts += 1;
    else p.attempts = sc_.recovery.max_attempts;
  }
  run_recovery_decision(node, dest);
}

void Simulator::flush_episode_if_routed(NodeId node) {
  Node& n = nodes_[node];
  if (n.recovery.episodes().empty()) return;
  std::vector<NodeId> dests;
  for (const auto& [dest, ep] : n.recovery.episodes()) dests.push_back(dest);

  for (NodeId dest : dests) {
    RecoveryManager::Episode* ep = n.recovery.episode(dest);
    if (ep == nullptr) continue;
    if (n.router.route_to(dest, now_) == nullptr) continue;

    std::deque<Packet> queue = std::move(ep->queue);
    n.recovery.close_episode(dest);
    tracef("t=%.9f n=%u repair_flush dest=%u count=%zu\n", now_, node, dest,
           queue.size());
    while (!queue.empty()) {
      Packet p = std::move(queue.front());
      queue.pop_front();
      if (p.attempts >= sc_.recovery.max_attempts) {
        upper_notices_.push_back(p.data_id);
        tracef("t=%.9f n=%u upper_notify id=%u attempts=%d\n", now_, node,
               p.data_id, p.attempts);
        continue;
      }
      p.attempts += 1;  // re-dispatch after repair is a fresh trial
      const RouteEntry* e = n.router.route_to(dest, now_);
      if (e == nullptr) {
        // Route died mid-flush; requeue the remainder and re-decide.
        RecoveryManager::Episode& again = n.recovery.open_episode(dest);
        n.recovery.enqueue_packet(again, std::move(p));
        while (!queue.empty()) {
          n.recovery.enqueue_packet(again, std::move(queue.front()));
          queue.pop_front();
        }
        run_recovery_decision(node, dest);
        break;
      }
      dispatch_data(node, std::move(p), *e);
    }
  }
}

void Simulator::send_rerr_toward(NodeId node, NodeId flow_origin,
                                 NodeId lost_dest) {
  Node& n = nodes_[node];
  if (node == flow_origin) return;
  auto it = n.prehop_for.find(lost_dest);
  if (it == n.prehop_for.end()) return;
  Packet e;
  e.type = PacketType::Rerr;
  e.origin = flow_origin;
  e.unreachable = {lost_dest};
  e.mac_dst = it->second;
  enqueue_frame(node, std::move(e), controlled_power(n, it->second), now_);
}

// ---------------------------------------------------------------------------
// Application and timers
// ---------------------------------------------------------------------------

void Simulator::on_app_send(NodeId node, uint64_t index) {
  if (index + 1 < sc_.traffic.packet_count) {
    const double next = sc_.traffic.start_s +
                        static_cast<double>(index + 1) * sc_.traffic.interval_s;
    if (next <= sc_.sim_time_s) {
      schedule(next, EventKind::AppSend, node, index + 1);
    }
  }
  Node& n = nodes_[node];
  if (!n.alive) return;
  if (!tokens_.is_green(node)) {
    tracef("t=%.9f n=%u send_refused reason=red_token\n", now_, node);
    return;
  }
  Packet p;
  p.type = PacketType::Data;
  p.origin = node;
  p.destination = sc_.sink_node;
  p.data_id = next_data_id_++;
  p.payload_bytes = sc_.traffic.payload_bytes;
  p.app_send_time_s = now_;
  p.attempts = 1;  // the first delivery trial
  sent_ += 1;
  tracef("t=%.9f n=%u app_send id=%u dest=%u\n", now_, node, p.data_id,
         p.destination);
  forward_or_recover(node, std::move(p));
}

void Simulator::on_beacon_timer(NodeId node) {
  Node& n = nodes_[node];
  if (!n.alive) return;

  Packet b;
  b.type = PacketType::Beacon;
  b.origin = node;
  std::vector<const NeighborPowerRecord*> recs;
  n.recovery.for_each_record(
      [&recs](const NeighborPowerRecord& r) { recs.push_back(&r); });
  std::sort(recs.begin(), recs.end(),
            [](const NeighborPowerRecord* a, const NeighborPowerRecord* b) {
              if (a->on_active_route != b->on_active_route) {
                return a->on_active_route;  // active links report first
              }
              if (a->rx_power_ewma_dbm != b->rx_power_ewma_dbm) {
                return a->rx_power_ewma_dbm > b->rx_power_ewma_dbm;
              }
              return a->neighbor < b->neighbor;
            });
  if (recs.size() > sc_.beacon_feedback_cap) {
    recs.resize(sc_.beacon_feedback_cap);
  }
  b.feedback.reserve(recs.size());
  for (const NeighborPowerRecord* r : recs) {
    // Report the newest raw measurement, not the smoothed one: the sender's
    // controller does its own smoothing, and stacking two filters would
    // double the loop lag.
    b.feedback.push_back({r->neighbor, r->last_rx_power_dbm});
  }
  enqueue_frame(node, std::move(b), broadcast_power(n), now_);
  schedule(now_ + sc_.beacon_period_s, EventKind::BeaconTimer, node);
}

void Simulator::on_housekeep() {
  for (NodeId id = 0; id < sc_.node_count; ++id) {
    Node& n = nodes_[id];
    if (!n.alive) continue;
    accrue_idle(id);
    if (!n.alive) continue;
    n.router.purge_expired(now_);
    n.recovery.evict_stale(now_);

    // Keep the active-link flags in step with what the table actually uses.
    std::vector<NodeId> active_hops;
    for (const auto& [dest, entry] : n.router.table()) {
      if (entry.active && entry.expiry_s >= now_) {
        active_hops.push_back(entry.next_hop);
      }
    }
    std::vector<NodeId> known;
    n.recovery.for_each_record(
        [&known](const NeighborPowerRecord& r) { known.push_back(r.neighbor); });
    for (NodeId nb : known) {
      const bool active = std::find(active_hops.begin(), active_hops.end(),
                                    nb) != active_hops.end();
      n.recovery.mark_active(nb, active);
    }

    if (sc_.recovery_enabled) {
      // Catch silently-gone neighbors: staleness is only observable from a
      // timer, never from a received frame.  Same edge-triggered policy.
      std::vector<NodeId> hops;
      for (const auto& [dest, entry] : n.router.table()) {
        if (!entry.active || entry.expiry_s < now_) continue;
        if (std::find(hops.begin(), hops.end(), entry.next_hop) ==
            hops.end()) {
          hops.push_back(entry.next_hop);
        }
      }
      for (NodeId hop : hops) predict_breaks_via(id, hop);
    }
  }
  if (now_ + 1.0 <= sc_.sim_time_s) {
    schedule(now_ + 1.0, EventKind::Housekeep, 0);
  }
}

// ---------------------------------------------------------------------------
// Umpiring
// ---------------------------------------------------------------------------

void Simulator::register_watch(NodeId prehop, NodeId forwarder,
                               const Packet& data,
                               const std::vector<NodeId>& inbound_decoders) {
  if (!sc_.umpiring_enabled) return;
  for (const Watch& w : watches_) {
    if (!w.resolved && w.forwarder == forwarder && w.data_id == data.data_id) {
      return;  // already watching this duty
    }
  }
  Node& fnode = nodes_[forwarder];
  const Node& pnode = nodes_[prehop];

  // Power the forwarder would use for the expected retransmission; umpires
  // that could not decode at that level must not judge.
  const RouteEntry* route = fnode.router.route_to(data.destination, now_);
  const double out_dbm = route != nullptr
                             ? controlled_power(fnode, route->next_hop)
                             : broadcast_power(fnode);
  const double out_mw = to_mw(out_dbm);
  auto hears_outbound = [&](NodeId u) {
    return out_mw * chan_.gain(forwarder, u) >= chan_.decode_floor_mw();
  };

  std::vector<NodeId> umpires;
  if (tokens_.is_green(prehop) && pnode.alive && hears_outbound(prehop)) {
    umpires.push_back(prehop);
  }
  // Common good neighbors of the prehop and the forwarder that decoded the
  // original frame, ranked by how well the prehop hears them.
  std::vector<NodeId> candidates;
  for (NodeId u : inbound_decoders) {
    if (u == prehop || u == forwarder) continue;
    if (!nodes_[u].alive || !tokens_.is_green(u)) continue;
    if (!pnode.router.neighbor_has_samples(u) || !pnode.router.neighbor_good(u))
      continue;
    if (!fnode.router.neighbor_has_samples(u) || !fnode.router.neighbor_good(u))
      continue;
    if (!hears_outbound(u)) continue;
    candidates.push_back(u);
  }
  std::sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
    const double sa = pnode.router.neighbor_snr(a);
    const double sb = pnode.router.neighbor_snr(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  for (size_t i = 0; i < candidates.size() && umpires.size() < 3; ++i) {
    umpires.push_back(candidates[i]);
  }
  if (umpires.empty()) return;

  Watch w;
  w.deadline_s = now_ + sc_.mac.watch_timeout_s;
  w.forwarder = forwarder;
  w.flow_dest = data.destination;
  w.data_id = data.data_id;
  w.umpires = std::move(umpires);
  w.heard.assign(w.umpires.size(), false);
  watches_.push_back(std::move(w));
  active_watches_[forwarder] += 1;
  schedule(watches_.back().deadline_s, EventKind::WatchDeadline, forwarder,
           watches_.size() - 1);
}

void Simulator::resolve_watches_for_tx(const AirFrame& f,
                                       const std::vector<NodeId>& decoders) {
  if (active_watches_[f.sender] == 0) return;
  for (Watch& w : watches_) {
    if (w.resolved || w.forwarder != f.sender) continue;
    const Packet& pkt = f.pkt;
    if (pkt.type == PacketType::Data && pkt.data_id == w.data_id) {
      bool all = true;
      for (size_t i = 0; i < w.umpires.size(); ++i) {
        if (std::find(decoders.begin(), decoders.end(), w.umpires[i]) !=
            decoders.end()) {
          w.heard[i] = true;
        }
        all = all && w.heard[i];
      }
      const bool dst_decoded =
          !pkt.is_broadcast() &&
          std::find(decoders.begin(), decoders.end(), pkt.mac_dst) !=
              decoders.end();
      if (all || dst_decoded) {
        w.resolved = true;
        active_watches_[f.sender] -= 1;
      }
    } else if ((pkt.type == PacketType::RepairNotice ||
                pkt.type == PacketType::Rerr) &&
               std::find(pkt.unreachable.begin(), pkt.unreachable.end(),
                         w.flow_dest) != pkt.unreachable.end()) {
      // An announced repair (or an error report) is an honest signal, not a
      // silent drop.
      w.resolved = true;
      active_watches_[f.sender] -= 1;
    } else if (pkt.type == PacketType::Rreq &&
               pkt.destination == w.flow_dest) {
      // Asking the network for a fresh route to the watched flow's
      // destination is likewise visible repair effort.
      w.resolved = true;
      active_watches_[f.sender] -= 1;
    }
  }
}

void Simulator::on_watch_deadline(uint64_t watch_id) {
  Watch& w = watches_[watch_id];
  if (w.resolved) return;
  w.resolved = true;
  active_watches_[w.forwarder] -= 1;

  int voting = 0;
  int misbehave = 0;
  for (size_t i = 0; i < w.umpires.size(); ++i) {
    const NodeId u = w.umpires[i];
    if (!nodes_[u].alive || !tokens_.is_green(u)) continue;  // no observation
    voting += 1;
    if (umpire_observe(w.data_id, w.heard[i], w.heard[i]) ==
        UmpireVote::Misbehave) {
      misbehave += 1;
    }
  }
  tracef("t=%.9f n=%u verdict misbehave=%d panel=%d id=%u\n", now_,
         w.forwarder, misbehave, voting, w.data_id);
  if (panel_convicts(misbehave, voting)) convict(w.forwarder);
}

void Simulator::convict(NodeId node) {
  if (!tokens_.convict(node)) return;
  conviction_time_[node] = now_;
  tracef("t=%.9f n=%u convicted\n", now_, node);
  // The verdict is final and global: every table sheds the node at once.
  for (Node& m : nodes_) m.router.purge_node(node);
}

// ---------------------------------------------------------------------------
// Tracing
// ---------------------------------------------------------------------------

void Simulator::tracef(const char* fmt, ...) {
  if (!record_trace_) return;
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  const int len = vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  if (len > 0) trace_.append(buf, std::min<size_t>(len, sizeof buf - 1));
}

RunMetrics run_scenario(const Scenario& sc) {
  Simulator sim(sc, /*record_trace=*/false);
  return sim.run();
}

}  // namespace wsn
