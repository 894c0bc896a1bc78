#pragma once

#include <string>
#include <vector>

#include "wsn/metrics.hpp"
#include "wsn/scenario.hpp"

namespace wsn {

/// The scenario dimension a sweep varies.
enum class SweepAxis { NodeCount, TxPower, Payload };

const char* to_string(SweepAxis axis);

/// Apply one axis value to a copy of the base scenario.
Scenario apply_axis(const Scenario& base, SweepAxis axis, double value);

struct SweepPoint {
  double value = 0.0;
  uint64_t seed = 0;
  RunMetrics metrics;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::NodeCount;
  std::vector<SweepPoint> runs;  // ordered by (value index, seed index)
};

/// Run the full (values x seeds) grid.  Every scenario is validated before
/// any run starts; duplicate seeds are rejected (they would silently weight
/// one sample twice in the paired statistics).  Runs execute in parallel up
/// to `max_parallel` (0 = hardware concurrency), but the result order is
/// fixed by the input order, not completion order.
SweepResult run_sweep(const Scenario& base, SweepAxis axis,
                      const std::vector<double>& values,
                      const std::vector<uint64_t>& seeds,
                      unsigned max_parallel = 0);

/// Mean and sample standard deviation per axis value, across seeds.
struct AggregateRow {
  double value = 0.0;
  size_t runs = 0;
  double pdr_mean = 0.0, pdr_stddev = 0.0;
  bool pdr_defined = false;
  double delay_mean = 0.0, delay_stddev = 0.0;
  bool delay_defined = false;
  double throughput_mean = 0.0, throughput_stddev = 0.0;
  double total_energy_mean = 0.0, total_energy_stddev = 0.0;
  double node_energy_mean = 0.0, node_energy_stddev = 0.0;
};

std::vector<AggregateRow> aggregate_sweep(const SweepResult& result);

/// Per-run CSV: the metrics header plus one row per run.
std::string sweep_csv(const SweepResult& result);
/// Aggregate CSV: one row per axis value.
std::string aggregate_csv(const SweepResult& result);

/// Paired one-sample t statistic for the differences a[i] - b[i]:
/// mean(d) / (stddev(d) / sqrt(n)).  Requires equal sizes and n >= 2; a zero
/// spread with a zero mean yields 0, a zero spread with nonzero mean yields
/// +/- infinity.
double paired_t_statistic(const std::vector<double>& a,
                          const std::vector<double>& b);

}  // namespace wsn
