#include "wsn/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace wsn {

double account_energy(EnergyLedger& ledger, NodeId node, EnergyMode mode,
                      double power_mw, double duration_s) {
  if (duration_s < 0.0) {
    throw std::domain_error("account_energy: negative duration");
  }
  if (node >= ledger.nodes.size()) {
    throw std::domain_error("account_energy: node out of range");
  }
  NodeEnergy& e = ledger.nodes[node];
  double charge = power_mw * duration_s / 3600.0;
  const double headroom = ledger.initial_budget_mwh - e.consumed_mwh();
  if (charge >= headroom) {
    charge = headroom > 0.0 ? headroom : 0.0;
    e.dead = true;  // budget exhausted
  }
  switch (mode) {
    case EnergyMode::Tx: e.tx_mwh += charge; break;
    case EnergyMode::Rx: e.rx_mwh += charge; break;
    case EnergyMode::Idle: e.idle_mwh += charge; break;
  }
  return charge;
}

std::optional<double> pdr(uint64_t n_r, uint64_t n_t) {
  if (n_r > n_t) {
    throw std::logic_error("pdr: more packets received than sent");
  }
  if (n_t == 0) return std::nullopt;
  return static_cast<double>(n_r) / static_cast<double>(n_t);
}

std::optional<double> mean_end_to_end_delay(
    const std::vector<DeliveryRecord>& deliveries) {
  if (deliveries.empty()) return std::nullopt;
  double sum = 0.0;
  for (const DeliveryRecord& d : deliveries) {
    sum += d.recv_time_s - d.send_time_s;
  }
  return sum / static_cast<double>(deliveries.size());
}

EnergyTotals energy_summary(const EnergyLedger& ledger) {
  EnergyTotals t;
  for (const NodeEnergy& e : ledger.nodes) t.total_mwh += e.consumed_mwh();
  t.per_node_mean_mwh =
      ledger.nodes.empty() ? 0.0
                           : t.total_mwh / static_cast<double>(ledger.nodes.size());
  return t;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : "na";
}

std::optional<double> parse_optional(const std::string& field) {
  if (field == "na") return std::nullopt;
  return std::strtod(field.c_str(), nullptr);
}

}  // namespace

std::string metrics_csv_header() {
  return "node_count,tx_power_dbm,payload_bytes,seed,sim_time_s,"
         "packets_sent,packets_received,pdr,mean_delay_s,throughput_pps,"
         "total_energy_mwh,mean_energy_per_node_mwh\n";
}

std::string metrics_csv_row(const RunMetrics& m) {
  std::ostringstream out;
  out << m.node_count << ',' << format_double(m.tx_power_dbm) << ','
      << m.payload_bytes << ',' << m.seed << ',' << format_double(m.sim_time_s)
      << ',' << m.packets_sent << ',' << m.packets_received << ','
      << format_optional(m.pdr) << ',' << format_optional(m.mean_delay_s)
      << ',' << format_double(m.throughput_pps) << ','
      << format_double(m.total_energy_mwh) << ','
      << format_double(m.mean_energy_per_node_mwh) << '\n';
  return out.str();
}

RunMetrics parse_metrics_csv_row(const std::string& line_in) {
  std::string line = line_in;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.pop_back();
  }
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  if (fields.size() != 12) {
    throw std::runtime_error("metrics csv: expected 12 fields, got " +
                             std::to_string(fields.size()));
  }
  RunMetrics m;
  m.node_count = static_cast<uint32_t>(std::strtoul(fields[0].c_str(), nullptr, 10));
  m.tx_power_dbm = std::strtod(fields[1].c_str(), nullptr);
  m.payload_bytes = static_cast<uint16_t>(std::strtoul(fields[2].c_str(), nullptr, 10));
  m.seed = std::strtoull(fields[3].c_str(), nullptr, 10);
  m.sim_time_s = std::strtod(fields[4].c_str(), nullptr);
  m.packets_sent = std::strtoull(fields[5].c_str(), nullptr, 10);
  m.packets_received = std::strtoull(fields[6].c_str(), nullptr, 10);
  m.pdr = parse_optional(fields[7]);
  m.mean_delay_s = parse_optional(fields[8]);
  m.throughput_pps = std::strtod(fields[9].c_str(), nullptr);
  m.total_energy_mwh = std::strtod(fields[10].c_str(), nullptr);
  m.mean_energy_per_node_mwh = std::strtod(fields[11].c_str(), nullptr);
  return m;
}

}  // namespace wsn
