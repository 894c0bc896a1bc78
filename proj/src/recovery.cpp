#include "wsn/recovery.hpp"

namespace wsn {

const char* to_string(RecoveryDecision d) {
  switch (d) {
    case RecoveryDecision::LocalRepair: return "local_repair";
    case RecoveryDecision::HandoffToPrehop: return "handoff_to_prehop";
    case RecoveryDecision::NotifySource: return "notify_source";
    case RecoveryDecision::UpperLayerNotify: return "upper_layer_notify";
  }
  return "unknown";
}

RecoveryManager::RecoveryManager(NodeId self, size_t node_count,
                                 const RecoveryConfig& cfg)
    : self_(self), cfg_(cfg), npl_(node_count), known_(node_count, false) {}

void RecoveryManager::update_npl(NodeId neighbor, double rx_power_dbm,
                                 double now) {
  if (neighbor >= npl_.size()) {
    npl_.resize(neighbor + 1);
    known_.resize(neighbor + 1, false);
  }
  NeighborPowerRecord& rec = npl_[neighbor];
  rec.neighbor = neighbor;
  rec.last_rx_power_dbm = rx_power_dbm;
  if (!known_[neighbor]) {
    rec.rx_power_ewma_dbm = rx_power_dbm;
    known_[neighbor] = true;
    ++known_count_;
  } else {
    rec.rx_power_ewma_dbm = cfg_.ewma_alpha * rx_power_dbm +
                            (1.0 - cfg_.ewma_alpha) * rec.rx_power_ewma_dbm;
  }
  rec.last_update_s = now;
}

void RecoveryManager::evict_stale(double now) {
  for (size_t i = 0; i < npl_.size(); ++i) {
    if (!known_[i]) continue;
    if (now - npl_[i].last_update_s > cfg_.stale_timeout_s) {
      known_[i] = false;
      npl_[i] = NeighborPowerRecord{};
      --known_count_;
    }
  }
}

const NeighborPowerRecord* RecoveryManager::record(NodeId neighbor) const {
  if (neighbor >= npl_.size() || !known_[neighbor]) return nullptr;
  return &npl_[neighbor];
}

void RecoveryManager::mark_active(NodeId neighbor, bool active) {
  if (neighbor >= npl_.size() || !known_[neighbor]) return;
  npl_[neighbor].on_active_route = active;
}

size_t RecoveryManager::record_count() const { return known_count_; }

bool RecoveryManager::predict_break(const NeighborPowerRecord& rec,
                                    double rx_threshold_dbm, double margin_db,
                                    double now, double stale_timeout_s) {
  if (now - rec.last_update_s > stale_timeout_s) return true;  // gone quiet
  return rec.rx_power_ewma_dbm < rx_threshold_dbm + margin_db;
}

bool RecoveryManager::link_at_risk(NodeId neighbor, double rx_threshold_dbm,
                                   double now) const {
  const NeighborPowerRecord* rec = record(neighbor);
  if (rec == nullptr) return true;  // never heard from: unusable
  return predict_break(*rec, rx_threshold_dbm, cfg_.break_margin_db, now,
                       cfg_.stale_timeout_s);
}

RecoveryDecision RecoveryManager::decide_recovery(bool is_source,
                                                  int attempt_count,
                                                  double remaining_energy_mwh,
                                                  double repair_threshold_mwh,
                                                  int max_attempts) {
  if (attempt_count >= max_attempts) return RecoveryDecision::UpperLayerNotify;
  if (is_source) return RecoveryDecision::NotifySource;
  if (remaining_energy_mwh > repair_threshold_mwh) {
    return RecoveryDecision::LocalRepair;
  }
  return RecoveryDecision::HandoffToPrehop;
}

RecoveryManager::Episode* RecoveryManager::episode(NodeId destination) {
  auto it = episodes_.find(destination);
  return it == episodes_.end() ? nullptr : &it->second;
}

RecoveryManager::Episode& RecoveryManager::open_episode(NodeId destination) {
  Episode& ep = episodes_[destination];
  ep.destination = destination;
  return ep;
}

void RecoveryManager::close_episode(NodeId destination) {
  episodes_.erase(destination);
}

bool RecoveryManager::enqueue_packet(Episode& ep, Packet pkt) {
  if (ep.queue.size() >= cfg_.repair_queue_cap) return false;  // drop newest
  ep.queue.push_back(std::move(pkt));
  return true;
}

}  // namespace wsn
