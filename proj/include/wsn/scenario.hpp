#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsn/linkbudget.hpp"
#include "wsn/powerctl.hpp"
#include "wsn/recovery.hpp"
#include "wsn/rng.hpp"
#include "wsn/routing.hpp"

namespace wsn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

/// Constant-bit-rate application workload from the source to the sink.
struct TrafficConfig {
  uint16_t payload_bytes = 70;
  uint32_t packet_count = 200;
  double interval_s = 3.0;
  double start_s = 5.0;  // lets a beacon round seed the power lists first
};

/// Radio energy draws.  The transmit draw is the RF output power plus a
/// fixed electronics overhead; receive is charged per decoded frame; the
/// idle baseline runs for a node's whole lifetime.
struct EnergyConfig {
  double tx_electronics_mw = 20.0;
  double rx_mw = 30.0;
  double idle_mw = 1.0;
  double budget_mwh = 100.0;
};

/// Simplified carrier-sense MAC parameters.
struct MacConfig {
  double slot_s = 20e-6;
  double difs_s = 50e-6;
  uint32_t cw_min = 32;
  uint32_t cw_max = 1024;
  int retry_limit = 7;  // the 8th consecutive busy/collision drops the frame
  size_t header_bytes = 34;
  double rreq_jitter_max_s = 10e-3;  // staggers flood rebroadcasts
  double watch_timeout_s = 0.25;     // umpire deadline for an expected forward
};

/// A scripted symmetric link cut at a point in simulated time.
struct LinkFailure {
  double time_s = 0.0;
  NodeId node_a = 0;
  NodeId node_b = 0;
};

/// Full run configuration: field, radio, workload, energy model, protocol
/// parameters, and test hooks (explicit placements, scripted failures,
/// scripted data-dropping nodes).
struct Scenario {
  double field_width_m = 1000.0;
  double field_height_m = 1000.0;
  uint32_t node_count = 500;
  double sim_time_s = 600.0;
  RadioParams radio;
  double data_rate_bps = 2.0e6;
  int bits_per_symbol = 2;
  PathlossModel model = PathlossModel::TwoRay;
  TrafficConfig traffic;
  double source_sink_distance_m = 350.0;
  NodeId source_node = 0;
  NodeId sink_node = 1;
  uint64_t rng_seed = 1;
  double ber_target = 1e-5;
  double beacon_period_s = 1.0;
  size_t beacon_feedback_cap = 32;

  EnergyConfig energy;
  MacConfig mac;
  PowerControlConfig power;
  bool power_max_follows_tx = true;  // max controlled power = scenario power
  RoutingConfig routing;
  RecoveryConfig recovery;

  bool power_control_enabled = true;
  bool umpiring_enabled = true;
  bool recovery_enabled = true;

  // Test hooks.
  std::vector<Vec2> explicit_positions;  // overrides placement when nonempty
  std::vector<LinkFailure> link_failures;
  std::vector<NodeId> blackhole_nodes;  // route honestly, drop data silently

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Loop bounds actually applied at run time (the configured maximum power
  /// optionally tracks the scenario transmit power).
  PowerControlConfig effective_power_config() const;
};

/// Node placement: source and sink pinned at the configured separation,
/// centered in the field; all other nodes uniform at random.  Deterministic
/// for a given generator state.
std::vector<Vec2> place_nodes(const Scenario& sc, Rng& rng);

}  // namespace wsn
