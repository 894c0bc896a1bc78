#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsn/token.hpp"

namespace wsn {

/// One delivered application packet, as recorded at the sink.
struct DeliveryRecord {
  uint32_t data_id = 0;
  double send_time_s = 0.0;
  double recv_time_s = 0.0;
  double airtime_sum_s = 0.0;  // summed per-hop airtimes (delay lower bound)
};

struct NodeEnergy {
  double tx_mwh = 0.0;
  double rx_mwh = 0.0;
  double idle_mwh = 0.0;
  bool dead = false;
  double consumed_mwh() const { return tx_mwh + rx_mwh + idle_mwh; }
};

struct EnergyLedger {
  std::vector<NodeEnergy> nodes;
  double initial_budget_mwh = 100.0;
};

enum class EnergyMode { Tx, Rx, Idle };

/// Charge one draw interval to a node's ledger.  Consumption never exceeds
/// the budget: the final charge is truncated at exhaustion and the node is
/// marked dead.  Returns the energy actually charged (mWh).
double account_energy(EnergyLedger& ledger, NodeId node, EnergyMode mode,
                      double power_mw, double duration_s);

/// Delivered fraction; empty when nothing was sent (undefined, not zero).
/// More packets received than sent is a counting bug and throws.
std::optional<double> pdr(uint64_t n_r, uint64_t n_t);

/// Mean of (receive - send) over delivered packets; empty when none.
std::optional<double> mean_end_to_end_delay(
    const std::vector<DeliveryRecord>& deliveries);

struct EnergyTotals {
  double total_mwh = 0.0;
  double per_node_mean_mwh = 0.0;
};

EnergyTotals energy_summary(const EnergyLedger& ledger);

/// One run's aggregated outputs plus the configuration labels that identify
/// it in sweep output.
struct RunMetrics {
  uint32_t node_count = 0;
  double tx_power_dbm = 0.0;
  uint16_t payload_bytes = 0;
  uint64_t seed = 0;
  double sim_time_s = 0.0;
  uint64_t packets_sent = 0;
  uint64_t packets_received = 0;
  std::optional<double> pdr;
  std::optional<double> mean_delay_s;
  double throughput_pps = 0.0;  // delivered packets per second
  double total_energy_mwh = 0.0;
  double mean_energy_per_node_mwh = 0.0;
};

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Fixed column order; optional fields print as "na" when undefined.
std::string metrics_csv_header();
std::string metrics_csv_row(const RunMetrics& m);
RunMetrics parse_metrics_csv_row(const std::string& line);

}  // namespace wsn
