#include "wsn/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace wsn {

namespace {

std::string upper(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
}

/// Split the value part into tokens, dropping parenthesized unit
/// annotations ("(dBm)") and trailing commas.
std::vector<std::string> value_tokens(const std::string& rest) {
  std::vector<std::string> out;
  std::string cleaned;
  int depth = 0;
  for (char c : rest) {
    if (c == '(') {
      ++depth;
      continue;
    }
    if (c == ')') {
      if (depth > 0) --depth;
      continue;
    }
    cleaned.push_back(depth > 0 ? ' ' : c);  // annotation content is ignored
  }
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) {
    while (!tok.empty() && (tok.back() == ',' || tok.back() == ';')) {
      tok.pop_back();
    }
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

/// Join number fragments that whitespace split apart ("2.4 e 9", "1 e-5").
std::string join_numeric(const std::vector<std::string>& toks) {
  std::string joined;
  for (const std::string& t : toks) joined += t;
  return joined;
}

double parse_number(const std::vector<std::string>& toks, size_t line_no,
                    const std::string& key) {
  if (toks.empty()) fail(line_no, "missing value for " + key);
  const std::string joined = join_numeric(toks);
  char* end = nullptr;
  const double v = std::strtod(joined.c_str(), &end);
  if (end == joined.c_str() || *end != '\0') {
    fail(line_no, "bad number '" + joined + "' for " + key);
  }
  return v;
}

/// Every number on the raw line, in order (terrain dimensions, failure
/// triples, node lists).  Here parentheses delimit real values, so the
/// string is scanned directly rather than unit-stripped.
std::vector<double> parse_numbers(const std::string& rest, size_t line_no,
                                  const std::string& key) {
  std::vector<double> out;
  const char* p = rest.c_str();
  const char* const stop = p + rest.size();
  while (p < stop) {
    if (std::isdigit(static_cast<unsigned char>(*p)) || *p == '-' ||
        *p == '+' || *p == '.') {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) {
        fail(line_no, "bad number in value for " + key);
      }
      out.push_back(v);
      p = end;
    } else if (*p == '(' || *p == ')' || *p == ',' || *p == ';' ||
               std::isspace(static_cast<unsigned char>(*p))) {
      ++p;
    } else {
      fail(line_no, std::string("unexpected character '") + *p + "' in " +
                        key);
    }
  }
  if (out.empty()) fail(line_no, "missing value for " + key);
  return out;
}

bool parse_flag(const std::vector<std::string>& toks, size_t line_no,
                const std::string& key) {
  if (toks.empty()) fail(line_no, "missing value for " + key);
  const std::string v = upper(toks[0]);
  if (v == "YES" || v == "ON" || v == "TRUE" || v == "1") return true;
  if (v == "NO" || v == "OFF" || v == "FALSE" || v == "0") return false;
  fail(line_no, "bad flag '" + toks[0] + "' for " + key);
}

}  // namespace

Scenario parse_config(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    size_t split = line.find_first_of(" \t=");
    const std::string key = upper(line.substr(0, split));
    std::string rest = split == std::string::npos ? "" : line.substr(split);
    // An optional '=' may separate key and value.
    const size_t eq = rest.find('=');
    if (eq != std::string::npos && rest.find_first_not_of(" \t") == eq) {
      rest.erase(eq, 1);
    }
    rest = trim(rest);
    const std::vector<std::string> toks = value_tokens(rest);
    auto num = [&]() { return parse_number(toks, line_no, key); };
    auto flag = [&]() { return parse_flag(toks, line_no, key); };

    if (key == "SIMULATION-TIME") {
      sc.sim_time_s = num();
    } else if (key == "SEED") {
      sc.rng_seed = static_cast<uint64_t>(num());
    } else if (key == "TERRAIN-DIMENSIONS") {
      const std::vector<double> v = parse_numbers(rest, line_no, key);
      if (v.size() != 2) fail(line_no, "expected two dimensions");
      sc.field_width_m = v[0];
      sc.field_height_m = v[1];
    } else if (key == "NUMBER-OF-NODES") {
      sc.node_count = static_cast<uint32_t>(num());
    } else if (key == "NODE-PLACEMENT") {
      const std::string v = toks.empty() ? "" : upper(toks[0]);
      if (v != "UNIFORM" && v != "RANDOM") {
        fail(line_no, "unsupported placement '" + (toks.empty() ? "" : toks[0]) +
                          "'");
      }
    } else if (key == "PROPAGATION-PATHLOSS") {
      const std::string v = toks.empty() ? "" : upper(toks[0]);
      if (v == "TWO-RAY") {
        sc.model = PathlossModel::TwoRay;
      } else if (v == "FREE-SPACE") {
        sc.model = PathlossModel::FreeSpace;
      } else {
        fail(line_no, "unknown pathloss model '" +
                          (toks.empty() ? "" : toks[0]) + "'");
      }
    } else if (key == "PROPAGATION-LIMIT") {
      sc.radio.propagation_limit_dbm = num();
    } else if (key == "RADIO-FREQUENCY") {
      sc.radio.frequency_hz = num();
    } else if (key == "RADIO-BANDWIDTH") {
      sc.data_rate_bps = num();
    } else if (key == "RADIO-NOISE-BANDWIDTH") {
      sc.radio.noise_bandwidth_hz = num();
    } else if (key == "RADIO-TX-POWER") {
      sc.radio.tx_power_dbm = num();
    } else if (key == "RADIO-RX-THRESHOLD") {
      sc.radio.rx_threshold_dbm = num();
    } else if (key == "RADIO-ANTENNA-GAIN") {
      sc.radio.antenna_gain_tx_db = num();
      sc.radio.antenna_gain_rx_db = sc.radio.antenna_gain_tx_db;
    } else if (key == "RADIO-ANTENNA-HEIGHT") {
      sc.radio.antenna_height_tx_m = num();
      sc.radio.antenna_height_rx_m = sc.radio.antenna_height_tx_m;
    } else if (key == "RADIO-NOISE-FIGURE") {
      sc.radio.noise_figure_db = num();
    } else if (key == "BITS-PER-SYMBOL") {
      sc.bits_per_symbol = static_cast<int>(num());
    } else if (key == "BER-TARGET") {
      sc.ber_target = num();
    } else if (key == "PAYLOAD-BYTES") {
      sc.traffic.payload_bytes = static_cast<uint16_t>(num());
    } else if (key == "PACKET-COUNT") {
      sc.traffic.packet_count = static_cast<uint32_t>(num());
    } else if (key == "PACKET-INTERVAL") {
      sc.traffic.interval_s = num();
    } else if (key == "TRAFFIC-START") {
      sc.traffic.start_s = num();
    } else if (key == "SOURCE-NODE") {
      sc.source_node = static_cast<NodeId>(num());
    } else if (key == "SINK-NODE") {
      sc.sink_node = static_cast<NodeId>(num());
    } else if (key == "SOURCE-SINK-DISTANCE") {
      sc.source_sink_distance_m = num();
    } else if (key == "BEACON-PERIOD") {
      sc.beacon_period_s = num();
    } else if (key == "FEEDBACK-CAP") {
      sc.beacon_feedback_cap = static_cast<size_t>(num());
    } else if (key == "ENERGY-TX-ELECTRONICS") {
      sc.energy.tx_electronics_mw = num();
    } else if (key == "ENERGY-RX") {
      sc.energy.rx_mw = num();
    } else if (key == "ENERGY-IDLE") {
      sc.energy.idle_mw = num();
    } else if (key == "ENERGY-BUDGET") {
      sc.energy.budget_mwh = num();
    } else if (key == "MAC-SLOT") {
      sc.mac.slot_s = num();
    } else if (key == "MAC-DIFS") {
      sc.mac.difs_s = num();
    } else if (key == "MAC-CW-MIN") {
      sc.mac.cw_min = static_cast<uint32_t>(num());
    } else if (key == "MAC-CW-MAX") {
      sc.mac.cw_max = static_cast<uint32_t>(num());
    } else if (key == "MAC-RETRY-LIMIT") {
      sc.mac.retry_limit = static_cast<int>(num());
    } else if (key == "MAC-HEADER-BYTES") {
      sc.mac.header_bytes = static_cast<size_t>(num());
    } else if (key == "RREQ-JITTER") {
      sc.mac.rreq_jitter_max_s = num();
    } else if (key == "WATCH-TIMEOUT") {
      sc.mac.watch_timeout_s = num();
    } else if (key == "POWER-STEP") {
      sc.power.step_db = num();
    } else if (key == "POWER-DEADBAND") {
      sc.power.deadband_db = num();
    } else if (key == "POWER-ALPHA") {
      sc.power.ewma_alpha = num();
    } else if (key == "POWER-MARGIN") {
      sc.power.margin_db = num();
    } else if (key == "POWER-MIN") {
      sc.power.min_power_dbm = num();
    } else if (key == "POWER-MAX") {
      sc.power.max_power_dbm = num();
      sc.power_max_follows_tx = false;
    } else if (key == "POWER-MAX-FOLLOWS-TX") {
      sc.power_max_follows_tx = flag();
    } else if (key == "SNR-THRESHOLD") {
      sc.routing.snr_threshold_db = num();
    } else if (key == "SNR-ALPHA") {
      sc.routing.snr_ewma_alpha = num();
    } else if (key == "ROUTE-LIFETIME") {
      sc.routing.route_lifetime_s = num();
    } else if (key == "RREQ-BUFFER") {
      sc.routing.rreq_buffer_s = num();
    } else if (key == "RREP-WAIT") {
      sc.routing.rrep_wait_s = num();
    } else if (key == "RECOVERY-ALPHA") {
      sc.recovery.ewma_alpha = num();
    } else if (key == "STALE-TIMEOUT") {
      sc.recovery.stale_timeout_s = num();
    } else if (key == "BREAK-MARGIN") {
      sc.recovery.break_margin_db = num();
    } else if (key == "REPAIR-DEADLINE") {
      sc.recovery.repair_deadline_s = num();
    } else if (key == "REPAIR-ENERGY-FRACTION") {
      sc.recovery.repair_energy_fraction = num();
    } else if (key == "MAX-ATTEMPTS") {
      sc.recovery.max_attempts = static_cast<int>(num());
    } else if (key == "REPAIR-QUEUE-CAP") {
      sc.recovery.repair_queue_cap = static_cast<size_t>(num());
    } else if (key == "POWER-CONTROL") {
      sc.power_control_enabled = flag();
    } else if (key == "UMPIRING") {
      sc.umpiring_enabled = flag();
    } else if (key == "RECOVERY") {
      sc.recovery_enabled = flag();
    } else if (key == "BLACKHOLE-NODES") {
      for (double v : parse_numbers(rest, line_no, key)) {
        sc.blackhole_nodes.push_back(static_cast<NodeId>(v));
      }
    } else if (key == "LINK-FAILURE") {
      const std::vector<double> v = parse_numbers(rest, line_no, key);
      if (v.size() != 3) fail(line_no, "expected: time node-a node-b");
      sc.link_failures.push_back({v[0], static_cast<NodeId>(v[1]),
                                  static_cast<NodeId>(v[2])});
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
  }
  return sc;
}

Scenario parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace wsn
