#include "wsn/sweep.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "wsn/simulator.hpp"

namespace wsn {

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::NodeCount: return "node_count";
    case SweepAxis::TxPower: return "tx_power_dbm";
    case SweepAxis::Payload: return "payload_bytes";
  }
  return "?";
}

Scenario apply_axis(const Scenario& base, SweepAxis axis, double value) {
  Scenario sc = base;
  switch (axis) {
    case SweepAxis::NodeCount:
      sc.node_count = static_cast<uint32_t>(value);
      break;
    case SweepAxis::TxPower:
      sc.radio.tx_power_dbm = value;
      break;
    case SweepAxis::Payload:
      sc.traffic.payload_bytes = static_cast<uint16_t>(value);
      break;
  }
  return sc;
}

SweepResult run_sweep(const Scenario& base, SweepAxis axis,
                      const std::vector<double>& values,
                      const std::vector<uint64_t>& seeds,
                      unsigned max_parallel) {
  if (values.empty()) throw std::invalid_argument("sweep: no axis values");
  if (seeds.empty()) throw std::invalid_argument("sweep: no seeds");
  {
    std::set<uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) {
      throw std::invalid_argument("sweep: duplicate seeds");
    }
  }

  // Build and validate every scenario up front: a bad grid point must fail
  // fast, not hours into a sweep.
  std::vector<Scenario> grid;
  grid.reserve(values.size() * seeds.size());
  for (double v : values) {
    for (uint64_t seed : seeds) {
      Scenario sc = apply_axis(base, axis, v);
      sc.rng_seed = seed;
      sc.validate();
      grid.push_back(std::move(sc));
    }
  }

  unsigned workers = max_parallel != 0 ? max_parallel
                                       : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;

  SweepResult result;
  result.axis = axis;
  result.runs.resize(grid.size());

  // Windowed fan-out: at most `workers` futures in flight, results written
  // by index so output order is independent of completion order.
  size_t next = 0;
  std::vector<std::pair<size_t, std::future<RunMetrics>>> inflight;
  while (next < grid.size() || !inflight.empty()) {
    while (next < grid.size() && inflight.size() < workers) {
      const size_t idx = next++;
      inflight.emplace_back(idx, std::async(std::launch::async, [&grid, idx] {
                              return run_scenario(grid[idx]);
                            }));
    }
    auto& [idx, fut] = inflight.front();
    result.runs[idx].metrics = fut.get();
    inflight.erase(inflight.begin());
  }

  for (size_t i = 0; i < grid.size(); ++i) {
    const size_t vi = i / seeds.size();
    const size_t si = i % seeds.size();
    result.runs[i].value = values[vi];
    result.runs[i].seed = seeds[si];
  }
  return result;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

}  // namespace

std::vector<AggregateRow> aggregate_sweep(const SweepResult& result) {
  std::vector<AggregateRow> rows;
  size_t i = 0;
  while (i < result.runs.size()) {
    const double value = result.runs[i].value;
    std::vector<double> pdrs, delays, tputs, totals, pernode;
    bool pdr_ok = true, delay_ok = true;
    size_t count = 0;
    for (; i < result.runs.size() && result.runs[i].value == value; ++i) {
      const RunMetrics& m = result.runs[i].metrics;
      ++count;
      if (m.pdr.has_value()) pdrs.push_back(*m.pdr); else pdr_ok = false;
      if (m.mean_delay_s.has_value()) delays.push_back(*m.mean_delay_s);
      else delay_ok = false;
      tputs.push_back(m.throughput_pps);
      totals.push_back(m.total_energy_mwh);
      pernode.push_back(m.mean_energy_per_node_mwh);
    }
    AggregateRow row;
    row.value = value;
    row.runs = count;
    row.pdr_defined = pdr_ok && !pdrs.empty();
    if (row.pdr_defined) {
      const MeanStd ms = mean_std(pdrs);
      row.pdr_mean = ms.mean;
      row.pdr_stddev = ms.stddev;
    }
    row.delay_defined = delay_ok && !delays.empty();
    if (row.delay_defined) {
      const MeanStd ms = mean_std(delays);
      row.delay_mean = ms.mean;
      row.delay_stddev = ms.stddev;
    }
    const MeanStd t = mean_std(tputs);
    row.throughput_mean = t.mean;
    row.throughput_stddev = t.stddev;
    const MeanStd e = mean_std(totals);
    row.total_energy_mean = e.mean;
    row.total_energy_stddev = e.stddev;
    const MeanStd p = mean_std(pernode);
    row.node_energy_mean = p.mean;
    row.node_energy_stddev = p.stddev;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = metrics_csv_header();
  for (const SweepPoint& run : result.runs) {
    out += metrics_csv_row(run.metrics);
  }
  return out;
}

std::string aggregate_csv(const SweepResult& result) {
  std::ostringstream out;
  out << to_string(result.axis)
      << ",runs,pdr_mean,pdr_stddev,delay_mean_s,delay_stddev_s,"
         "throughput_pps_mean,throughput_pps_stddev,total_energy_mwh_mean,"
         "total_energy_mwh_stddev,node_energy_mwh_mean,node_energy_mwh_stddev"
         "\n";
  for (const AggregateRow& row : aggregate_sweep(result)) {
    out << format_double(row.value) << ',' << row.runs << ',';
    if (row.pdr_defined) {
      out << format_double(row.pdr_mean) << ',' << format_double(row.pdr_stddev);
    } else {
      out << "na,na";
    }
    out << ',';
    if (row.delay_defined) {
      out << format_double(row.delay_mean) << ','
          << format_double(row.delay_stddev);
    } else {
      out << "na,na";
    }
    out << ',' << format_double(row.throughput_mean) << ','
        << format_double(row.throughput_stddev) << ','
        << format_double(row.total_energy_mean) << ','
        << format_double(row.total_energy_stddev) << ','
        << format_double(row.node_energy_mean) << ','
        << format_double(row.node_energy_stddev) << '\n';
  }
  return out.str();
}

double paired_t_statistic(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired_t_statistic: size mismatch");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("paired_t_statistic: need at least 2 pairs");
  }
  std::vector<double> d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const MeanStd ms = mean_std(d);
  if (ms.stddev == 0.0) {
    if (ms.mean == 0.0) return 0.0;
    return ms.mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
  }
  return ms.mean / (ms.stddev / std::sqrt(static_cast<double>(d.size())));
}

}  // namespace wsn
