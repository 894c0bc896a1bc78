#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "wsn/specfun.hpp"

namespace wsn {

// Pure, side-effect-free RF math: unit conversions, propagation models,
// receiver sensitivity, QPSK BER inversion, optimal transmit power, and
// closed-form maximum-range solving.  Everything here is a function of its
// arguments only and is safe to call concurrently.

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K (exact, SI 2019)
inline constexpr double kReferenceTempK = 290.0;

/// Transmit/receive power expressed in dBm.
struct PowerDbm {
  double value = 0.0;
};

/// Transmit/receive power expressed in milliwatts.
struct PowerMw {
  double value = 0.0;
};

/// PHY-layer radio description: everything the propagation and sensitivity
/// math needs, in one place.
struct RadioParams {
  double tx_power_dbm = 15.0;
  double antenna_height_tx_m = 1.5;
  double antenna_height_rx_m = 1.5;
  double antenna_gain_tx_db = 0.0;  // stored in dB, applied as linear factors
  double antenna_gain_rx_db = 0.0;
  double frequency_hz = 2.4e9;
  double noise_figure_db = 10.0;
  double noise_bandwidth_hz = 2.0e6;
  double rx_threshold_dbm = -81.0;      // weakest decodable signal
  double propagation_limit_dbm = -111.0;  // weakest sensed signal
  double reference_temp_k = kReferenceTempK;
  double boltzmann_j_per_k = kBoltzmann;
};

/// Channel state between one transmitter/receiver pair.  The attenuation
/// factor is the end-to-end linear power ratio: gain product over loss.
struct LinkState {
  double attenuation_factor = 1.0;
  double antenna_gain_product = 1.0;
  double channel_loss = 1.0;
  double distance_m = 0.0;
};

/// Modulation and noise quantities for the BER/power relations.
struct ModulationParams {
  int bits_per_symbol = 2;  // QPSK
  double data_rate_bps = 2.0e6;
  double symbol_rate_sps = 1.0e6;        // data_rate / bits_per_symbol
  double noise_density_w_per_hz = 0.0;   // N0 at the receiver input
  double energy_per_bit_j = 0.0;
  double bit_time_s = 5.0e-7;            // 1 / data_rate
};

enum class PathlossModel { TwoRay, FreeSpace };

// ---------------------------------------------------------------------------
// Unit conversions.

inline double to_mw(double dbm) {
  if (!std::isfinite(dbm)) throw std::domain_error("to_mw: non-finite dBm");
  return std::pow(10.0, dbm / 10.0);
}

inline double to_dbm(double mw) {
  if (!(mw > 0.0)) throw std::domain_error("to_dbm: power must be positive");
  return 10.0 * std::log10(mw);
}

inline PowerMw dbm_to_mw(PowerDbm p) { return {to_mw(p.value)}; }

inline PowerDbm mw_to_dbm(PowerMw p) { return {to_dbm(p.value)}; }

/// Ratio between two power levels in dB.
inline double decibel_gain(PowerMw p_out, PowerMw p_in) {
  if (!(p_out.value > 0.0) || !(p_in.value > 0.0)) {
    throw std::domain_error("decibel_gain: powers must be positive");
  }
  return 10.0 * std::log10(p_out.value / p_in.value);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// ---------------------------------------------------------------------------
// Propagation models.

/// Ground-reflection model: received power falls with the fourth power of
/// distance and rises with the squared antenna heights.
inline PowerMw two_ray_rx_power(const RadioParams& params, double distance_m) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("two_ray_rx_power: distance must be positive");
  }
  const double pt_mw = to_mw(params.tx_power_dbm);
  const double gains =
      db_to_linear(params.antenna_gain_tx_db + params.antenna_gain_rx_db);
  const double h2 = params.antenna_height_tx_m * params.antenna_height_tx_m *
                    params.antenna_height_rx_m * params.antenna_height_rx_m;
  const double d2 = distance_m * distance_m;
  return {pt_mw * gains * h2 / (d2 * d2)};
}

/// Free-space model: received power falls with the square of distance.
inline PowerMw free_space_rx_power(const RadioParams& params,
                                   double distance_m) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("free_space_rx_power: distance must be positive");
  }
  if (!(params.frequency_hz > 0.0)) {
    throw std::domain_error("free_space_rx_power: frequency must be positive");
  }
  const double pt_mw = to_mw(params.tx_power_dbm);
  const double gains =
      db_to_linear(params.antenna_gain_tx_db + params.antenna_gain_rx_db);
  const double lambda = kSpeedOfLight / params.frequency_hz;
  const double ratio = lambda / (4.0 * M_PI * distance_m);
  return {pt_mw * gains * ratio * ratio};
}

inline PowerMw rx_power(const RadioParams& params, double distance_m,
                        PathlossModel model) {
  return model == PathlossModel::TwoRay
             ? two_ray_rx_power(params, distance_m)
             : free_space_rx_power(params, distance_m);
}

/// Free-space path loss in dB for a quick desk check.
inline double free_space_path_loss_db(double frequency_hz, double distance_m) {
  if (!(frequency_hz > 0.0) || !(distance_m > 0.0)) {
    throw std::domain_error("free_space_path_loss_db: inputs must be positive");
  }
  return 20.0 *
         std::log10(4.0 * M_PI * distance_m * frequency_hz / kSpeedOfLight);
}

/// Distance at which the received power crosses the RX threshold, solved in
/// closed form (fourth root for two-ray, square root for free space).
/// Returns nothing when the configuration cannot reach the threshold.
inline std::optional<double> max_range(const RadioParams& params,
                                       PathlossModel model) {
  const double pt_mw = to_mw(params.tx_power_dbm);
  const double thr_mw = to_mw(params.rx_threshold_dbm);
  const double gains =
      db_to_linear(params.antenna_gain_tx_db + params.antenna_gain_rx_db);
  if (!(pt_mw > 0.0) || !(thr_mw > 0.0)) return std::nullopt;
  double range;
  if (model == PathlossModel::TwoRay) {
    const double h2 = params.antenna_height_tx_m * params.antenna_height_tx_m *
                      params.antenna_height_rx_m * params.antenna_height_rx_m;
    range = std::pow(pt_mw * gains * h2 / thr_mw, 0.25);
  } else {
    const double lambda = kSpeedOfLight / params.frequency_hz;
    range = lambda / (4.0 * M_PI) * std::sqrt(pt_mw * gains / thr_mw);
  }
  if (!std::isfinite(range) || !(range > 0.0)) return std::nullopt;
  return range;
}

// ---------------------------------------------------------------------------
// QPSK error-rate relations.

/// Bit error rate for QPSK at a given linear Eb/N0.
inline double qpsk_ber(double ebn0) {
  if (!(ebn0 >= 0.0)) throw std::domain_error("qpsk_ber: Eb/N0 must be >= 0");
  return 0.5 * erfc(std::sqrt(ebn0));
}

/// Linear Eb/N0 required to hit a target QPSK bit error rate.
inline double required_ebn0(double ber) {
  if (!(ber > 0.0) || !(ber <= 0.5)) {
    throw std::domain_error("required_ebn0: BER must lie in (0, 0.5]");
  }
  const double t = erfc_inv(2.0 * ber);
  return t * t;
}

/// Transmit power (watts) that meets a BER target over a link with a known
/// attenuation factor: symbol rate x bits/symbol x (N0 / attenuation) x
/// required Eb/N0.
inline double optimal_tx_power(const ModulationParams& mod,
                               const LinkState& link, double ber_target) {
  if (!(link.attenuation_factor > 0.0)) {
    throw std::domain_error(
        "optimal_tx_power: attenuation factor must be positive");
  }
  if (!(mod.symbol_rate_sps > 0.0) || mod.bits_per_symbol <= 0 ||
      !(mod.noise_density_w_per_hz > 0.0)) {
    throw std::domain_error("optimal_tx_power: modulation params must be positive");
  }
  return mod.symbol_rate_sps * mod.bits_per_symbol *
         (mod.noise_density_w_per_hz / link.attenuation_factor) *
         required_ebn0(ber_target);
}

// ---------------------------------------------------------------------------
// Receiver sensitivity.

/// Thermal noise density at the reference temperature, in dBm/Hz.  Computed
/// from the Boltzmann constant rather than hard-coding the usual rounded
/// figure so the dB and linear forms agree to full precision.
inline double thermal_noise_dbm_per_hz(const RadioParams& params) {
  if (!(params.reference_temp_k > 0.0)) {
    throw std::domain_error("thermal_noise_dbm_per_hz: temperature must be positive");
  }
  return 10.0 *
         std::log10(params.boltzmann_j_per_k * params.reference_temp_k * 1e3);
}

/// Receiver noise floor over the noise bandwidth (noise figure included).
inline double noise_floor_dbm(const RadioParams& params) {
  if (!(params.noise_bandwidth_hz > 0.0)) {
    throw std::domain_error("noise_floor_dbm: bandwidth must be positive");
  }
  return thermal_noise_dbm_per_hz(params) +
         10.0 * std::log10(params.noise_bandwidth_hz) + params.noise_figure_db;
}

/// Receiver noise density N0 in W/Hz (noise figure included).
inline double noise_density_w_per_hz(const RadioParams& params) {
  return params.boltzmann_j_per_k * params.reference_temp_k *
         db_to_linear(params.noise_figure_db);
}

/// Minimum detectable signal: noise floor plus the minimum workable SNR.
inline PowerDbm minimum_detectable_signal(const RadioParams& params,
                                          double snr_min_db) {
  return {noise_floor_dbm(params) + snr_min_db};
}

/// Usable receiver input span between the strongest and weakest workable
/// signals, as a dB ratio.
inline double receiver_dynamic_range(PowerDbm mas, PowerDbm mds) {
  if (mas.value < mds.value) {
    throw std::domain_error("receiver_dynamic_range: MAS below MDS");
  }
  return mas.value - mds.value;
}

}  // namespace wsn
