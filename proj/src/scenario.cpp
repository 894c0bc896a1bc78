#include "wsn/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace wsn {

double distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("scenario: " + what);
  };
  if (!(field_width_m > 0.0) || !(field_height_m > 0.0)) {
    fail("field dimensions must be positive");
  }
  if (node_count < 2) fail("node_count must be at least 2 (source and sink)");
  if (!(sim_time_s > 0.0)) fail("sim_time must be positive");
  if (!(data_rate_bps > 0.0)) fail("data_rate must be positive");
  if (bits_per_symbol <= 0) fail("bits_per_symbol must be positive");
  if (!(radio.frequency_hz > 0.0)) fail("frequency must be positive");
  if (!(radio.antenna_height_tx_m > 0.0) || !(radio.antenna_height_rx_m > 0.0)) {
    fail("antenna heights must be positive");
  }
  if (!(radio.noise_bandwidth_hz > 0.0)) fail("noise bandwidth must be positive");
  if (radio.rx_threshold_dbm < radio.propagation_limit_dbm) {
    fail("rx_threshold must not be below the propagation limit");
  }
  if (!(radio.reference_temp_k > 0.0)) fail("reference temperature must be positive");
  const double diagonal =
      std::hypot(field_width_m, field_height_m);
  if (!(source_sink_distance_m > 0.0) || source_sink_distance_m >= diagonal) {
    fail("source_sink_distance must be positive and inside the field diagonal");
  }
  if (source_node >= node_count) fail("source_node out of range");
  if (sink_node >= node_count) fail("sink_node out of range");
  if (source_node == sink_node) fail("source and sink must differ");
  if (!(traffic.interval_s > 0.0)) fail("traffic interval must be positive");
  if (traffic.start_s < 0.0) fail("traffic start must not be negative");
  if (!(ber_target > 0.0) || !(ber_target <= 0.5)) {
    fail("ber_target must lie in (0, 0.5]");
  }
  if (!(beacon_period_s > 0.0)) fail("beacon period must be positive");
  if (!(power.ewma_alpha > 0.0) || power.ewma_alpha > 1.0) {
    fail("power ewma_alpha must lie in (0, 1]");
  }
  if (!(power.step_db > 0.0)) fail("power step must be positive");
  if (power.min_power_dbm > power.max_power_dbm) {
    fail("min power must not exceed max power");
  }
  if (!(routing.snr_ewma_alpha > 0.0) || routing.snr_ewma_alpha > 1.0) {
    fail("snr ewma_alpha must lie in (0, 1]");
  }
  if (!(routing.route_lifetime_s > 0.0)) fail("route lifetime must be positive");
  if (!(recovery.ewma_alpha > 0.0) || recovery.ewma_alpha > 1.0) {
    fail("recovery ewma_alpha must lie in (0, 1]");
  }
  if (recovery.max_attempts < 1) fail("max_attempts must be at least 1");
  if (!(energy.budget_mwh > 0.0)) fail("energy budget must be positive");
  if (mac.retry_limit < 0) fail("mac retry limit must not be negative");
  if (mac.cw_min == 0 || mac.cw_max < mac.cw_min) fail("invalid contention window");
  if (!(mac.slot_s > 0.0) || !(mac.difs_s >= 0.0)) fail("invalid mac timing");
  if (!explicit_positions.empty() &&
      explicit_positions.size() != node_count) {
    fail("explicit_positions must list one position per node");
  }
  for (const LinkFailure& lf : link_failures) {
    if (lf.node_a >= node_count || lf.node_b >= node_count) {
      fail("link failure names a node out of range");
    }
  }
  for (NodeId id : blackhole_nodes) {
    if (id >= node_count) fail("blackhole node out of range");
  }
}

PowerControlConfig Scenario::effective_power_config() const {
  PowerControlConfig cfg = power;
  if (power_max_follows_tx) cfg.max_power_dbm = radio.tx_power_dbm;
  if (cfg.min_power_dbm > cfg.max_power_dbm) {
    cfg.min_power_dbm = cfg.max_power_dbm;
  }
  return cfg;
}

std::vector<Vec2> place_nodes(const Scenario& sc, Rng& rng) {
  if (sc.node_count < 2) {
    throw std::invalid_argument("place_nodes: need at least source and sink");
  }
  if (!sc.explicit_positions.empty()) {
    if (sc.explicit_positions.size() != sc.node_count) {
      throw std::invalid_argument(
          "place_nodes: explicit position list does not match node_count");
    }
    return sc.explicit_positions;
  }
  std::vector<Vec2> pos(sc.node_count);
  const double cx = sc.field_width_m / 2.0;
  const double cy = sc.field_height_m / 2.0;
  pos[sc.source_node] = {cx - sc.source_sink_distance_m / 2.0, cy};
  pos[sc.sink_node] = {cx + sc.source_sink_distance_m / 2.0, cy};
  for (NodeId i = 0; i < sc.node_count; ++i) {
    if (i == sc.source_node || i == sc.sink_node) continue;
    pos[i] = {rng.uniform(0.0, sc.field_width_m),
              rng.uniform(0.0, sc.field_height_m)};
  }
  return pos;
}

}  // namespace wsn
