#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wsn/config.hpp"
#include "wsn/linkbudget.hpp"
#include "wsn/metrics.hpp"
#include "wsn/simulator.hpp"
#include "wsn/sweep.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string tok;
  std::istringstream in(text);
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    size_t pos = 0;
    out.push_back(std::stod(tok, &pos));
    if (pos != tok.size()) {
      throw std::invalid_argument("bad number in list: '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  // Either an inclusive range "1..10" or a comma list "1,2,7".
  const size_t dots = text.find("..");
  std::vector<uint64_t> out;
  if (dots != std::string::npos) {
    const uint64_t lo = std::stoull(text.substr(0, dots));
    const uint64_t hi = std::stoull(text.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seed range is backwards");
    for (uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  for (double v : parse_double_list(text)) {
    out.push_back(static_cast<uint64_t>(v));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
}

void print_kv(const char* key, double value) {
  std::cout << key << ' ' << wsn::format_double(value) << '\n';
}

wsn::PathlossModel model_from_name(const std::string& name) {
  if (name == "two-ray") return wsn::PathlossModel::TwoRay;
  if (name == "free-space") return wsn::PathlossModel::FreeSpace;
  throw std::invalid_argument("unknown pathloss model: " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wireless sensor network simulator and RF link-budget tool"};
  app.require_subcommand(1);

  // ----- run -----
  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  std::string run_config, run_out, run_trace;
  uint64_t run_seed = 0;
  run_cmd->add_option("--config", run_config, "Scenario config file")
      ->required();
  auto* seed_opt =
      run_cmd->add_option("--seed", run_seed, "Override the config seed");
  run_cmd->add_option("--out", run_out, "Metrics CSV path (default stdout)");
  run_cmd->add_option("--trace", run_trace, "Write the event trace here");

  // ----- sweep -----
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run a (values x seeds) scenario grid");
  std::string sweep_config, axis_name = "nodes", values_text, seeds_text = "1";
  std::string sweep_out, sweep_summary;
  unsigned sweep_jobs = 0;
  sweep_cmd->add_option("--config", sweep_config, "Base scenario config file")
      ->required();
  sweep_cmd
      ->add_option("--axis", axis_name,
                   "Swept dimension: nodes, power, or payload")
      ->check(CLI::IsMember({"nodes", "power", "payload"}));
  sweep_cmd
      ->add_option("--values", values_text, "Comma-separated axis values")
      ->required();
  sweep_cmd->add_option("--seeds", seeds_text,
                        "Seeds: '1..10' or comma list (default 1)");
  sweep_cmd->add_option("--out", sweep_out,
                        "Per-run metrics CSV path (default stdout)");
  sweep_cmd->add_option("--summary-out", sweep_summary,
                        "Aggregate (mean/stddev) CSV path");
  sweep_cmd->add_option("--jobs", sweep_jobs,
                        "Max parallel runs (default: hardware threads)");

  // ----- linkbudget -----
  auto* lb = app.add_subcommand("linkbudget", "RF link-budget calculations");
  lb->require_subcommand(1);
  double lb_tx_power = 15.0, lb_rx_threshold = -81.0, lb_height = 1.5;
  double lb_gain_db = 0.0, lb_frequency = 2.4e9, lb_distance = 100.0;
  double lb_ber = 1e-5, lb_bandwidth = 2.0e6, lb_noise_figure = 10.0;
  double lb_snr_min = 10.0, lb_data_rate = 2.0e6;
  int lb_bits = 2;
  std::string lb_model = "two-ray";
  auto add_radio_opts = [&](CLI::App* cmd, bool with_distance) {
    cmd->add_option("--tx-power", lb_tx_power, "Transmit power (dBm)");
    cmd->add_option("--height", lb_height, "Antenna height, both ends (m)");
    cmd->add_option("--gain", lb_gain_db, "Antenna gain, both ends (dB)");
    cmd->add_option("--frequency", lb_frequency, "Carrier frequency (Hz)");
    cmd->add_option("--model", lb_model, "two-ray or free-space")
        ->check(CLI::IsMember({"two-ray", "free-space"}));
    if (with_distance) {
      cmd->add_option("--distance", lb_distance, "Link distance (m)")
          ->required();
    }
  };
  auto radio_from_opts = [&]() {
    wsn::RadioParams r;
    r.tx_power_dbm = lb_tx_power;
    r.antenna_height_tx_m = lb_height;
    r.antenna_height_rx_m = lb_height;
    r.antenna_gain_tx_db = lb_gain_db;
    r.antenna_gain_rx_db = lb_gain_db;
    r.frequency_hz = lb_frequency;
    r.rx_threshold_dbm = lb_rx_threshold;
    r.noise_bandwidth_hz = lb_bandwidth;
    r.noise_figure_db = lb_noise_figure;
    return r;
  };

  auto* lb_range = lb->add_subcommand(
      "range", "Maximum decode range for a transmit power and threshold");
  add_radio_opts(lb_range, false);
  lb_range->add_option("--rx-threshold", lb_rx_threshold,
                       "Receiver threshold (dBm)");

  auto* lb_rx = lb->add_subcommand("rx", "Received power at a distance");
  add_radio_opts(lb_rx, true);

  auto* lb_ebn0 =
      lb->add_subcommand("ebn0", "Required Eb/N0 for a target bit error rate");
  lb_ebn0->add_option("--ber", lb_ber, "Target bit error rate")->required();

  auto* lb_txpower = lb->add_subcommand(
      "txpower", "Weakest transmit power that meets a BER target");
  add_radio_opts(lb_txpower, true);
  lb_txpower->add_option("--ber", lb_ber, "Target bit error rate");
  lb_txpower->add_option("--data-rate", lb_data_rate, "Bit rate (b/s)");
  lb_txpower->add_option("--bits-per-symbol", lb_bits, "Modulation density");
  lb_txpower->add_option("--noise-figure", lb_noise_figure,
                         "Receiver noise figure (dB)");

  auto* lb_mds = lb->add_subcommand(
      "mds", "Minimum detectable signal and receiver noise floor");
  lb_mds->add_option("--bandwidth", lb_bandwidth, "Noise bandwidth (Hz)");
  lb_mds->add_option("--noise-figure", lb_noise_figure,
                     "Receiver noise figure (dB)");
  lb_mds->add_option("--snr-min", lb_snr_min, "Minimum workable SNR (dB)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      wsn::Scenario sc = wsn::parse_config_file(run_config);
      if (seed_opt->count() > 0) sc.rng_seed = run_seed;
      sc.validate();
      const bool want_trace = !run_trace.empty();
      wsn::Simulator sim(sc, want_trace);
      const wsn::RunMetrics m = sim.run();
      if (want_trace) write_text(run_trace, sim.trace());
      write_text(run_out, wsn::metrics_csv_header() + wsn::metrics_csv_row(m));
      return 0;
    }

    if (sweep_cmd->parsed()) {
      const wsn::Scenario base = wsn::parse_config_file(sweep_config);
      wsn::SweepAxis axis = wsn::SweepAxis::NodeCount;
      if (axis_name == "power") axis = wsn::SweepAxis::TxPower;
      if (axis_name == "payload") axis = wsn::SweepAxis::Payload;
      const std::vector<double> values = parse_double_list(values_text);
      const std::vector<uint64_t> seeds = parse_seed_list(seeds_text);
      const wsn::SweepResult result =
          wsn::run_sweep(base, axis, values, seeds, sweep_jobs);
      write_text(sweep_out, wsn::sweep_csv(result));
      if (!sweep_summary.empty()) {
        write_text(sweep_summary, wsn::aggregate_csv(result));
      }
      return 0;
    }

    if (lb_range->parsed()) {
      const wsn::RadioParams r = radio_from_opts();
      const auto range = wsn::max_range(r, model_from_name(lb_model));
      if (range.has_value()) {
        print_kv("max_range_m", *range);
      } else {
        std::cout << "max_range_m na\n";
      }
      return 0;
    }
    if (lb_rx->parsed()) {
      const wsn::RadioParams r = radio_from_opts();
      const wsn::PowerMw rx =
          wsn::rx_power(r, lb_distance, model_from_name(lb_model));
      print_kv("rx_power_mw", rx.value);
      print_kv("rx_power_dbm", wsn::to_dbm(rx.value));
      return 0;
    }
    if (lb_ebn0->parsed()) {
      const double ebn0 = wsn::required_ebn0(lb_ber);
      print_kv("ebn0_linear", ebn0);
      print_kv("ebn0_db", 10.0 * std::log10(ebn0));
      return 0;
    }
    if (lb_txpower->parsed()) {
      const wsn::RadioParams r = radio_from_opts();
      wsn::ModulationParams mod;
      mod.bits_per_symbol = lb_bits;
      mod.data_rate_bps = lb_data_rate;
      mod.symbol_rate_sps = lb_data_rate / lb_bits;
      mod.noise_density_w_per_hz = wsn::noise_density_w_per_hz(r);
      mod.bit_time_s = 1.0 / lb_data_rate;
      wsn::LinkState link;
      link.distance_m = lb_distance;
      // Dimensionless attenuation: received watts per transmitted watt.
      wsn::RadioParams unit = r;
      unit.tx_power_dbm = 0.0;  // 1 mW
      link.attenuation_factor =
          wsn::rx_power(unit, lb_distance, model_from_name(lb_model)).value;
      const double watts = wsn::optimal_tx_power(mod, link, lb_ber);
      print_kv("tx_power_w", watts);
      print_kv("tx_power_dbm", wsn::to_dbm(watts * 1e3));
      return 0;
    }
    if (lb_mds->parsed()) {
      const wsn::RadioParams r = radio_from_opts();
      print_kv("noise_floor_dbm", wsn::noise_floor_dbm(r));
      print_kv("mds_dbm", wsn::minimum_detectable_signal(r, lb_snr_min).value);
      return 0;
    }
  } catch (const wsn::ConfigError& e) {
    // Configuration problems (bad file, bad flag value) exit 1; failures
    // while running a valid configuration exit 2.
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
