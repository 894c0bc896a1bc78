#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wsn/powerctl.hpp"
#include "wsn/rng.hpp"

using wsn::AdjustStatus;
using wsn::NodeId;
using wsn::PowerControlState;
using wsn::RadioParams;

namespace {

PowerControlState default_state() {
  PowerControlState st;
  st.target_rx_power_dbm = -78.0;
  st.default_tx_power_dbm = 15.0;
  return st;
}

}  // namespace

// ---------------------------------------------------------------------------
// Target received power.

TEST_CASE("target received power from the error-rate budget") {
  RadioParams radio;  // 2 MHz bandwidth, 10 dB noise figure
  // noise floor -100.9649 plus the 12.598 dB SNR a 1e-5 error rate needs
  // (both computed with 30-digit arithmetic), plus the margin.
  CHECK(std::fabs(wsn::target_rx_power(radio, 1e-5, 0.0).value -
                  -88.366728934100874) < 1e-9);
  CHECK(std::fabs(wsn::target_rx_power(radio, 1e-5, 3.0).value -
                  -85.366728934100874) < 1e-9);
}

TEST_CASE("target received power collapses to the noise floor at loose targets") {
  RadioParams radio;
  // A coin-flip error rate needs no excess SNR: target = floor + margin.
  CHECK(std::fabs(wsn::target_rx_power(radio, 0.5, 2.0).value -
                  (wsn::noise_floor_dbm(radio) + 2.0)) < 1e-12);
}

TEST_CASE("more bits per symbol demand a higher target") {
  RadioParams radio;
  const double two = wsn::target_rx_power(radio, 1e-5, 0.0, 2).value;
  const double four = wsn::target_rx_power(radio, 1e-5, 0.0, 4).value;
  CHECK(std::fabs((four - two) - 10.0 * std::log10(2.0)) < 1e-12);
  CHECK_THROWS_AS(wsn::target_rx_power(radio, 1e-5, 0.0, 0), std::domain_error);
}

// ---------------------------------------------------------------------------
// Feedback smoothing.

TEST_CASE("first feedback sample initializes the average directly") {
  PowerControlState st = default_state();
  wsn::record_feedback(st, 4, -70.0);
  REQUIRE(st.links.count(4) == 1);
  CHECK(st.links[4].has_feedback);
  CHECK(st.links[4].rssi_ewma_dbm == doctest::Approx(-70.0).epsilon(1e-15));
  // A fresh link starts at the (clamped) default power.
  CHECK(st.links[4].tx_power_dbm == doctest::Approx(15.0).epsilon(1e-15));
}

TEST_CASE("feedback smoothing follows the configured blend") {
  PowerControlState st = default_state();
  st.cfg.ewma_alpha = 0.25;
  wsn::record_feedback(st, 9, -80.0);
  wsn::record_feedback(st, 9, -72.0);
  // 0.25*(-72) + 0.75*(-80) = -78
  CHECK(st.links[9].rssi_ewma_dbm == doctest::Approx(-78.0).epsilon(1e-12));
  wsn::record_feedback(st, 9, -78.0);
  CHECK(st.links[9].rssi_ewma_dbm == doctest::Approx(-78.0).epsilon(1e-12));
  wsn::record_feedback(st, 9, -70.0);
  CHECK(st.links[9].rssi_ewma_dbm == doctest::Approx(-76.0).epsilon(1e-12));
}

TEST_CASE("smoothed value converges geometrically to a constant input") {
  PowerControlState st = default_state();
  wsn::record_feedback(st, 2, -90.0);
  for (int i = 0; i < 60; ++i) wsn::record_feedback(st, 2, -75.0);
  CHECK(std::fabs(st.links[2].rssi_ewma_dbm - -75.0) < 1e-6);
}

// ---------------------------------------------------------------------------
// Control steps.

TEST_CASE("no feedback means no adjustment") {
  PowerControlState st = default_state();
  CHECK(wsn::adjust_tx_power(st, 7) == AdjustStatus::NoFeedback);
  st.links[7];  // present but silent
  CHECK(wsn::adjust_tx_power(st, 7) == AdjustStatus::NoFeedback);
}

TEST_CASE("weak feedback raises power by one step") {
  PowerControlState st = default_state();
  wsn::record_feedback(st, 3, -85.0);  // 7 dB below target
  st.links[3].tx_power_dbm = 10.0;
  CHECK(wsn::adjust_tx_power(st, 3) == AdjustStatus::Raised);
  CHECK(st.links[3].tx_power_dbm == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("strong feedback lowers power by one step") {
  PowerControlState st = default_state();
  wsn::record_feedback(st, 3, -60.0);  // 18 dB above target
  st.links[3].tx_power_dbm = 10.0;
  CHECK(wsn::adjust_tx_power(st, 3) == AdjustStatus::Lowered);
  CHECK(st.links[3].tx_power_dbm == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("feedback inside the dead band holds power") {
  PowerControlState st = default_state();
  st.cfg.deadband_db = 0.5;
  for (double rssi : {-78.0, -78.4, -77.6, -78.5, -77.5}) {
    PowerControlState fresh = default_state();
    wsn::record_feedback(fresh, 1, rssi);
    fresh.links[1].tx_power_dbm = 10.0;
    CHECK(wsn::adjust_tx_power(fresh, 1) == AdjustStatus::Unchanged);
    CHECK(fresh.links[1].tx_power_dbm == doctest::Approx(10.0).epsilon(1e-12));
  }
}

TEST_CASE("a raise clamps to the maximum and then saturates") {
  PowerControlState st = default_state();
  st.cfg.max_power_dbm = 15.0;
  st.cfg.step_db = 1.0;
  wsn::record_feedback(st, 5, -95.0);
  st.links[5].tx_power_dbm = 14.5;
  CHECK(wsn::adjust_tx_power(st, 5) == AdjustStatus::Raised);
  CHECK(st.links[5].tx_power_dbm == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(wsn::adjust_tx_power(st, 5) == AdjustStatus::SaturatedHigh);
  CHECK(st.links[5].tx_power_dbm == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("a cut clamps to the minimum and then saturates") {
  PowerControlState st = default_state();
  st.cfg.min_power_dbm = -10.0;
  wsn::record_feedback(st, 5, -50.0);
  st.links[5].tx_power_dbm = -9.5;
  CHECK(wsn::adjust_tx_power(st, 5) == AdjustStatus::Lowered);
  CHECK(st.links[5].tx_power_dbm == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(wsn::adjust_tx_power(st, 5) == AdjustStatus::SaturatedLow);
  CHECK(st.links[5].tx_power_dbm == doctest::Approx(-10.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Power selection.

TEST_CASE("unicast power falls back to the clamped default for unknown links") {
  PowerControlState st = default_state();
  st.default_tx_power_dbm = 20.0;
  st.cfg.max_power_dbm = 15.0;
  CHECK(st.current_tx_power(12) == doctest::Approx(15.0).epsilon(1e-12));
  wsn::record_feedback(st, 12, -70.0);
  st.links[12].tx_power_dbm = 8.0;
  CHECK(st.current_tx_power(12) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("broadcast power covers the weakest included link") {
  PowerControlState st = default_state();
  wsn::record_feedback(st, 1, -70.0);
  wsn::record_feedback(st, 2, -70.0);
  wsn::record_feedback(st, 3, -70.0);
  st.links[1].tx_power_dbm = 4.0;
  st.links[2].tx_power_dbm = 11.0;
  st.links[3].tx_power_dbm = 7.0;
  CHECK(st.broadcast_tx_power([](NodeId) { return true; }) ==
        doctest::Approx(11.0).epsilon(1e-12));
  // Excluding the hungriest link lowers the broadcast level.
  CHECK(st.broadcast_tx_power([](NodeId id) { return id != 2; }) ==
        doctest::Approx(7.0).epsilon(1e-12));
  // No qualifying link: fall back to the clamped default.
  CHECK(st.broadcast_tx_power([](NodeId) { return false; }) ==
        doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("links without feedback never steer the broadcast level") {
  PowerControlState st = default_state();
  st.links[8].tx_power_dbm = 14.0;  // allocated but silent
  CHECK(st.broadcast_tx_power([](NodeId) { return true; }) ==
        doctest::Approx(15.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Closed-loop behaviour.

namespace {

/// Simulate the full loop against a fixed-gain link: each round the receiver
/// reports tx + gain and the transmitter takes one control step.  Returns the
/// number of rounds that actually changed the power.
struct LoopRun {
  int changes = 0;
  int quiescent_tail = 0;  // trailing rounds with no change
  AdjustStatus last = AdjustStatus::NoFeedback;
};

LoopRun run_loop(PowerControlState& st, NodeId nb, double gain_db, int rounds) {
  LoopRun out;
  for (int i = 0; i < rounds; ++i) {
    const double tx = st.current_tx_power(nb);
    wsn::record_feedback(st, nb, tx + gain_db);
    const AdjustStatus status = wsn::adjust_tx_power(st, nb);
    out.last = status;
    if (status == AdjustStatus::Raised || status == AdjustStatus::Lowered) {
      ++out.changes;
      out.quiescent_tail = 0;
    } else {
      ++out.quiescent_tail;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("the loop settles onto the target band and stays there") {
  wsn::Rng rng(101);
  for (int trial = 0; trial < 150; ++trial) {
    PowerControlState st = default_state();
    // Equilibrium power target - gain must sit inside the control range.
    const double gain_db = rng.uniform(-92.0, -69.0);
    LoopRun run = run_loop(st, 1, gain_db, 120);
    const double final_tx = st.current_tx_power(1);
    const double final_rx = final_tx + gain_db;
    // Parked within one step of the dead band, no oscillation afterwards.
    CHECK(std::fabs(final_rx - st.target_rx_power_dbm) <=
          st.cfg.deadband_db + st.cfg.step_db + 1e-9);
    CHECK(run.quiescent_tail >= 20);
    // Change count is the ramp distance plus bounded smoothing-lag ringing:
    // the lagged average trails the true level by (1/alpha - 1) steps while
    // ramping, so each direction reversal costs at most that overshoot.
    const double equilibrium_tx = st.target_rx_power_dbm - gain_db;
    const double ramp_db =
        std::fabs(st.default_tx_power_dbm - equilibrium_tx) / st.cfg.step_db;
    const double lag_steps = 1.0 / st.cfg.ewma_alpha - 1.0;
    CHECK(run.changes <= static_cast<int>(std::ceil(ramp_db + 4.0 * lag_steps + 2.0)));
  }
}

TEST_CASE("an unreachable target pins the loop at maximum power") {
  PowerControlState st = default_state();
  LoopRun run = run_loop(st, 1, -100.0, 80);  // needs 22 dBm, max is 15
  CHECK(run.last == AdjustStatus::SaturatedHigh);
  CHECK(st.current_tx_power(1) == doctest::Approx(st.cfg.max_power_dbm).epsilon(1e-12));
}

TEST_CASE("an overloud link pins the loop at minimum power") {
  PowerControlState st = default_state();
  LoopRun run = run_loop(st, 1, -60.0, 80);  // -78 target needs -18 dBm, min is -10
  CHECK(run.last == AdjustStatus::SaturatedLow);
  CHECK(st.current_tx_power(1) == doctest::Approx(st.cfg.min_power_dbm).epsilon(1e-12));
}

TEST_CASE("independent links are controlled independently") {
  PowerControlState st = default_state();
  run_loop(st, 1, -80.0, 100);
  run_loop(st, 2, -72.0, 100);
  const double p1 = st.current_tx_power(1);
  const double p2 = st.current_tx_power(2);
  CHECK(std::fabs((p1 - 80.0) - st.target_rx_power_dbm) <=
        st.cfg.deadband_db + st.cfg.step_db + 1e-9);
  CHECK(std::fabs((p2 - 72.0) - st.target_rx_power_dbm) <=
        st.cfg.deadband_db + st.cfg.step_db + 1e-9);
  CHECK(p1 > p2);  // the weaker link needs more power
}

TEST_CASE("clamping respects the configured range") {
  PowerControlState st = default_state();
  st.cfg.min_power_dbm = -5.0;
  st.cfg.max_power_dbm = 12.0;
  CHECK(st.clamp(20.0) == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(st.clamp(-20.0) == doctest::Approx(-5.0).epsilon(1e-15));
  CHECK(st.clamp(3.0) == doctest::Approx(3.0).epsilon(1e-15));
}
