#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "wsn/recovery.hpp"

using wsn::NeighborPowerRecord;
using wsn::NodeId;
using wsn::Packet;
using wsn::RecoveryConfig;
using wsn::RecoveryDecision;
using wsn::RecoveryManager;

namespace {

RecoveryManager make_manager(size_t n = 8) {
  return RecoveryManager(0, n, RecoveryConfig{});
}

}  // namespace

// ---------------------------------------------------------------------------
// Neighbor power list.

TEST_CASE("the first power sample initializes a record directly") {
  RecoveryManager m = make_manager();
  CHECK(m.record(3) == nullptr);
  CHECK(m.record_count() == 0);
  m.update_npl(3, -70.0, 1.0);
  const NeighborPowerRecord* rec = m.record(3);
  REQUIRE(rec != nullptr);
  CHECK(rec->neighbor == 3);
  CHECK(rec->last_rx_power_dbm == doctest::Approx(-70.0).epsilon(1e-15));
  CHECK(rec->rx_power_ewma_dbm == doctest::Approx(-70.0).epsilon(1e-15));
  CHECK(rec->last_update_s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.record_count() == 1);
}

TEST_CASE("power smoothing follows the configured blend") {
  RecoveryManager m = make_manager();  // alpha 0.25
  m.update_npl(2, -80.0, 1.0);
  m.update_npl(2, -72.0, 2.0);
  const NeighborPowerRecord* rec = m.record(2);
  REQUIRE(rec != nullptr);
  // 0.25*(-72) + 0.75*(-80) = -78
  CHECK(rec->rx_power_ewma_dbm == doctest::Approx(-78.0).epsilon(1e-12));
  CHECK(rec->last_rx_power_dbm == doctest::Approx(-72.0).epsilon(1e-15));
  CHECK(rec->last_update_s == doctest::Approx(2.0).epsilon(1e-15));
  m.update_npl(2, -70.0, 3.0);
  CHECK(rec->rx_power_ewma_dbm == doctest::Approx(-76.0).epsilon(1e-12));
}

TEST_CASE("silent neighbors are evicted after the staleness timeout") {
  RecoveryConfig cfg;
  cfg.stale_timeout_s = 3.0;
  RecoveryManager m(0, 8, cfg);
  m.update_npl(1, -70.0, 0.0);
  m.update_npl(2, -70.0, 2.5);
  m.evict_stale(3.0);  // exactly at the boundary: not yet over
  CHECK(m.record(1) != nullptr);
  m.evict_stale(3.01);
  CHECK(m.record(1) == nullptr);
  CHECK(m.record(2) != nullptr);
  CHECK(m.record_count() == 1);
  // A fresh sample re-admits the neighbor with a clean average.
  m.update_npl(1, -90.0, 4.0);
  REQUIRE(m.record(1) != nullptr);
  CHECK(m.record(1)->rx_power_ewma_dbm == doctest::Approx(-90.0).epsilon(1e-12));
}

TEST_CASE("record visitation walks live records in ascending neighbor order") {
  RecoveryManager m = make_manager();
  m.update_npl(5, -70.0, 1.0);
  m.update_npl(1, -72.0, 1.0);
  m.update_npl(3, -74.0, 1.0);
  std::vector<NodeId> seen;
  m.for_each_record([&](const NeighborPowerRecord& rec) {
    seen.push_back(rec.neighbor);
  });
  CHECK(seen == std::vector<NodeId>({1, 3, 5}));
}

TEST_CASE("active-route marking sticks to existing records only") {
  RecoveryManager m = make_manager();
  m.mark_active(4, true);  // no record yet: ignored
  CHECK(m.record(4) == nullptr);
  m.update_npl(4, -70.0, 1.0);
  m.mark_active(4, true);
  REQUIRE(m.record(4) != nullptr);
  CHECK(m.record(4)->on_active_route);
  m.mark_active(4, false);
  CHECK_FALSE(m.record(4)->on_active_route);
}

// ---------------------------------------------------------------------------
// Break prediction.

TEST_CASE("a break is predicted strictly below threshold plus margin") {
  NeighborPowerRecord rec;
  rec.last_update_s = 10.0;
  const double thr = -81.0;
  const double margin = 3.0;
  rec.rx_power_ewma_dbm = -78.0;  // exactly threshold + margin
  CHECK_FALSE(RecoveryManager::predict_break(rec, thr, margin, 10.0, 3.0));
  rec.rx_power_ewma_dbm = -78.001;
  CHECK(RecoveryManager::predict_break(rec, thr, margin, 10.0, 3.0));
  rec.rx_power_ewma_dbm = -60.0;
  CHECK_FALSE(RecoveryManager::predict_break(rec, thr, margin, 10.0, 3.0));
}

TEST_CASE("a stale record predicts a break regardless of its power") {
  NeighborPowerRecord rec;
  rec.rx_power_ewma_dbm = -50.0;  // excellent signal
  rec.last_update_s = 0.0;
  CHECK_FALSE(RecoveryManager::predict_break(rec, -81.0, 3.0, 3.0, 3.0));
  CHECK(RecoveryManager::predict_break(rec, -81.0, 3.0, 3.01, 3.0));
}

TEST_CASE("a neighbor with no record at all counts as broken") {
  RecoveryManager m = make_manager();
  CHECK(m.link_at_risk(6, -81.0, 1.0));
  m.update_npl(6, -70.0, 1.0);
  CHECK_FALSE(m.link_at_risk(6, -81.0, 1.0));
  m.update_npl(6, -90.0, 1.5);  // average sinks toward the floor
  m.update_npl(6, -90.0, 2.0);
  m.update_npl(6, -90.0, 2.5);
  m.update_npl(6, -90.0, 3.0);
  m.update_npl(6, -90.0, 3.5);
  CHECK(m.link_at_risk(6, -81.0, 3.5));
}

// ---------------------------------------------------------------------------
// Recovery decision gates.

TEST_CASE("decision gates run in order: trials, source, energy") {
  // Trial budget exhausted trumps everything.
  CHECK(RecoveryManager::decide_recovery(true, 15, 90.0, 20.0) ==
        RecoveryDecision::UpperLayerNotify);
  CHECK(RecoveryManager::decide_recovery(false, 16, 1.0, 20.0) ==
        RecoveryDecision::UpperLayerNotify);
  // The source never repairs locally; it just re-discovers.
  CHECK(RecoveryManager::decide_recovery(true, 14, 90.0, 20.0) ==
        RecoveryDecision::NotifySource);
  CHECK(RecoveryManager::decide_recovery(true, 0, 0.0, 20.0) ==
        RecoveryDecision::NotifySource);
  // Intermediates repair when energy remains strictly above the threshold.
  CHECK(RecoveryManager::decide_recovery(false, 3, 20.01, 20.0) ==
        RecoveryDecision::LocalRepair);
  CHECK(RecoveryManager::decide_recovery(false, 3, 20.0, 20.0) ==
        RecoveryDecision::HandoffToPrehop);  // boundary: not strictly above
  CHECK(RecoveryManager::decide_recovery(false, 3, 5.0, 20.0) ==
        RecoveryDecision::HandoffToPrehop);
}

TEST_CASE("the trial boundary sits exactly at the configured maximum") {
  CHECK(RecoveryManager::decide_recovery(false, 14, 90.0, 20.0, 15) ==
        RecoveryDecision::LocalRepair);
  CHECK(RecoveryManager::decide_recovery(false, 15, 90.0, 20.0, 15) ==
        RecoveryDecision::UpperLayerNotify);
  // A custom budget moves the boundary with it.
  CHECK(RecoveryManager::decide_recovery(false, 15, 90.0, 20.0, 20) ==
        RecoveryDecision::LocalRepair);
  CHECK(RecoveryManager::decide_recovery(false, 20, 90.0, 20.0, 20) ==
        RecoveryDecision::UpperLayerNotify);
}

TEST_CASE("decision names are stable strings") {
  CHECK(std::strcmp(to_string(RecoveryDecision::LocalRepair), "local_repair") == 0);
  CHECK(std::strcmp(to_string(RecoveryDecision::HandoffToPrehop),
                    "handoff_to_prehop") == 0);
  CHECK(std::strcmp(to_string(RecoveryDecision::NotifySource),
                    "notify_source") == 0);
  CHECK(std::strcmp(to_string(RecoveryDecision::UpperLayerNotify),
                    "upper_layer_notify") == 0);
}

// ---------------------------------------------------------------------------
// Repair episodes.

TEST_CASE("episodes open on demand and close without residue") {
  RecoveryManager m = make_manager();
  CHECK(m.episode(7) == nullptr);
  RecoveryManager::Episode& ep = m.open_episode(7);
  CHECK(ep.destination == 7);
  CHECK(m.episode(7) == &ep);
  // Reopening returns the same episode, state intact.
  ep.repair_pending = true;
  CHECK(m.open_episode(7).repair_pending);
  m.close_episode(7);
  CHECK(m.episode(7) == nullptr);
  CHECK(m.episodes().empty());
}

TEST_CASE("the repair queue holds first arrivals and drops the newest overflow") {
  RecoveryConfig cfg;
  cfg.repair_queue_cap = 4;
  RecoveryManager m(0, 8, cfg);
  RecoveryManager::Episode& ep = m.open_episode(7);
  for (uint32_t i = 0; i < 4; ++i) {
    Packet pkt;
    pkt.data_id = i;
    CHECK(m.enqueue_packet(ep, pkt));
  }
  Packet overflow;
  overflow.data_id = 99;
  CHECK_FALSE(m.enqueue_packet(ep, overflow));
  REQUIRE(ep.queue.size() == 4);
  // FIFO order, overflow absent.
  for (uint32_t i = 0; i < 4; ++i) CHECK(ep.queue[i].data_id == i);
}

TEST_CASE("separate destinations get separate episodes and queues") {
  RecoveryManager m = make_manager();
  RecoveryManager::Episode& a = m.open_episode(3);
  RecoveryManager::Episode& b = m.open_episode(5);
  Packet pkt;
  pkt.data_id = 1;
  m.enqueue_packet(a, pkt);
  CHECK(a.queue.size() == 1);
  CHECK(b.queue.empty());
  CHECK(m.episodes().size() == 2);
}
