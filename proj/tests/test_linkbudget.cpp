#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wsn/linkbudget.hpp"
#include "wsn/rng.hpp"
#include "wsn/specfun.hpp"

using wsn::PathlossModel;
using wsn::PowerDbm;
using wsn::PowerMw;
using wsn::RadioParams;

namespace {

RadioParams default_radio() { return RadioParams{}; }

// Relative-error helper for values whose magnitude varies wildly.
double rel_err(double got, double want) {
  return std::fabs(got - want) / std::fabs(want);
}

}  // namespace

// ---------------------------------------------------------------------------
// Unit conversions.

TEST_CASE("dbm/mw conversions hit known anchor points") {
  // 10^(-8.1) and 10^(1.5), computed with 30-digit arithmetic.
  CHECK(rel_err(wsn::to_mw(-81.0), 7.9432823472428149e-09) < 1e-14);
  CHECK(rel_err(wsn::to_mw(15.0), 31.622776601683793) < 1e-14);
  CHECK(wsn::to_mw(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(wsn::to_dbm(1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(wsn::to_dbm(100.0) == doctest::Approx(20.0).epsilon(1e-15));
}

TEST_CASE("dbm/mw conversions round-trip across the usable span") {
  wsn::Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    const double dbm = rng.uniform(-150.0, 40.0);
    CHECK(std::fabs(wsn::to_dbm(wsn::to_mw(dbm)) - dbm) < 1e-12);
  }
  for (int i = 0; i < 2000; ++i) {
    const double mw = std::pow(10.0, rng.uniform(-15.0, 4.0));
    CHECK(rel_err(wsn::to_mw(wsn::to_dbm(mw)), mw) < 1e-12);
  }
}

TEST_CASE("typed wrappers mirror the raw conversions") {
  CHECK(wsn::dbm_to_mw(PowerDbm{15.0}).value ==
        doctest::Approx(wsn::to_mw(15.0)).epsilon(1e-15));
  CHECK(wsn::mw_to_dbm(PowerMw{2.5}).value ==
        doctest::Approx(wsn::to_dbm(2.5)).epsilon(1e-15));
}

TEST_CASE("conversion domain errors") {
  CHECK_THROWS_AS(wsn::to_mw(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(wsn::to_dbm(0.0), std::domain_error);
  CHECK_THROWS_AS(wsn::to_dbm(-1.0), std::domain_error);
  CHECK_THROWS_AS(wsn::decibel_gain(PowerMw{0.0}, PowerMw{1.0}),
                  std::domain_error);
  CHECK_THROWS_AS(wsn::decibel_gain(PowerMw{1.0}, PowerMw{-2.0}),
                  std::domain_error);
}

TEST_CASE("decibel gain of a 10x power ratio is 10 dB") {
  CHECK(wsn::decibel_gain(PowerMw{10.0}, PowerMw{1.0}) ==
        doctest::Approx(10.0).epsilon(1e-15));
  CHECK(wsn::decibel_gain(PowerMw{1.0}, PowerMw{10.0}) ==
        doctest::Approx(-10.0).epsilon(1e-15));
  CHECK(wsn::db_to_linear(3.0) == doctest::Approx(1.9952623149688795).epsilon(1e-14));
}

// ---------------------------------------------------------------------------
// Propagation models.

TEST_CASE("ground-reflection received power matches a hand value") {
  RadioParams radio = default_radio();  // 15 dBm, h = 1.5 m, unity gains
  // 31.622776_mW * 1.5^4 / 388^4, computed with 30-digit arithmetic.
  const double got = wsn::two_ray_rx_power(radio, 388.0).value;
  CHECK(rel_err(got, 7.0637957620530889e-09) < 1e-13);
}

TEST_CASE("ground-reflection power falls with the fourth power of distance") {
  RadioParams radio = default_radio();
  wsn::Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.uniform(1.0, 2000.0);
    const double near = wsn::two_ray_rx_power(radio, d).value;
    const double far = wsn::two_ray_rx_power(radio, 2.0 * d).value;
    CHECK(rel_err(near / far, 16.0) < 1e-12);
  }
}

TEST_CASE("ground-reflection power scales with squared antenna heights") {
  RadioParams radio = default_radio();
  const double base = wsn::two_ray_rx_power(radio, 100.0).value;
  radio.antenna_height_tx_m *= 2.0;
  radio.antenna_height_rx_m *= 2.0;
  const double raised = wsn::two_ray_rx_power(radio, 100.0).value;
  CHECK(rel_err(raised / base, 16.0) < 1e-12);
}

TEST_CASE("ground-reflection power scales linearly with antenna gains") {
  RadioParams radio = default_radio();
  const double base = wsn::two_ray_rx_power(radio, 250.0).value;
  radio.antenna_gain_tx_db = 3.0;
  radio.antenna_gain_rx_db = 5.0;
  const double with_gain = wsn::two_ray_rx_power(radio, 250.0).value;
  CHECK(rel_err(with_gain / base, wsn::db_to_linear(8.0)) < 1e-12);
}

TEST_CASE("free-space received power falls with the square of distance") {
  RadioParams radio = default_radio();
  wsn::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.uniform(1.0, 5000.0);
    const double near = wsn::free_space_rx_power(radio, d).value;
    const double far = wsn::free_space_rx_power(radio, 2.0 * d).value;
    CHECK(rel_err(near / far, 4.0) < 1e-12);
  }
}

TEST_CASE("free-space path loss matches the textbook value at 100 m, 2.4 GHz") {
  // 20*log10(4*pi*d*f/c), computed with 30-digit arithmetic.
  CHECK(std::fabs(wsn::free_space_path_loss_db(2.4e9, 100.0) -
                  80.052008056115494) < 1e-11);
}

TEST_CASE("free-space rx power at 0 dBm transmit equals the negated path loss") {
  RadioParams radio = default_radio();
  radio.tx_power_dbm = 0.0;
  wsn::Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const double d = rng.uniform(1.0, 3000.0);
    const double rx_dbm = wsn::to_dbm(wsn::free_space_rx_power(radio, d).value);
    const double fspl = wsn::free_space_path_loss_db(radio.frequency_hz, d);
    CHECK(std::fabs(rx_dbm + fspl) < 1e-10);
  }
}

TEST_CASE("model dispatch selects the matching propagation law") {
  RadioParams radio = default_radio();
  CHECK(wsn::rx_power(radio, 200.0, PathlossModel::TwoRay).value ==
        doctest::Approx(wsn::two_ray_rx_power(radio, 200.0).value).epsilon(1e-15));
  CHECK(wsn::rx_power(radio, 200.0, PathlossModel::FreeSpace).value ==
        doctest::Approx(wsn::free_space_rx_power(radio, 200.0).value).epsilon(1e-15));
}

TEST_CASE("propagation domain errors") {
  RadioParams radio = default_radio();
  CHECK_THROWS_AS(wsn::two_ray_rx_power(radio, 0.0), std::domain_error);
  CHECK_THROWS_AS(wsn::two_ray_rx_power(radio, -5.0), std::domain_error);
  CHECK_THROWS_AS(wsn::free_space_rx_power(radio, 0.0), std::domain_error);
  CHECK_THROWS_AS(wsn::free_space_path_loss_db(0.0, 100.0), std::domain_error);
  CHECK_THROWS_AS(wsn::free_space_path_loss_db(2.4e9, 0.0), std::domain_error);
}

// ---------------------------------------------------------------------------
// Maximum range.

TEST_CASE("maximum decodable range at 15 dBm and 10 dBm") {
  RadioParams radio = default_radio();  // threshold -81 dBm
  auto r15 = wsn::max_range(radio, PathlossModel::TwoRay);
  REQUIRE(r15.has_value());
  CHECK(std::fabs(*r15 - 376.78296472643702) < 1e-9);
  CHECK(std::fabs(*r15 - 376.782) < 0.01);

  radio.tx_power_dbm = 10.0;
  auto r10 = wsn::max_range(radio, PathlossModel::TwoRay);
  REQUIRE(r10.has_value());
  CHECK(std::fabs(*r10 - 282.54736342347008) < 1e-9);
  CHECK(std::fabs(*r10 - 282.547) < 0.01);
}

TEST_CASE("maximum range solves a raw power-pair configuration") {
  RadioParams radio = default_radio();
  radio.tx_power_dbm = wsn::to_dbm(31.6227);
  radio.rx_threshold_dbm = wsn::to_dbm(7e-9);
  auto r = wsn::max_range(radio, PathlossModel::TwoRay);
  REQUIRE(r.has_value());
  CHECK(std::fabs(*r - 388.88078617082593) < 1e-9);
  CHECK(std::fabs(*r - 388.0) < 1.0);
}

TEST_CASE("received power at the maximum range equals the threshold") {
  wsn::Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    RadioParams radio = default_radio();
    radio.tx_power_dbm = rng.uniform(-10.0, 25.0);
    radio.rx_threshold_dbm = rng.uniform(-100.0, -60.0);
    radio.antenna_height_tx_m = rng.uniform(0.5, 3.0);
    radio.antenna_height_rx_m = rng.uniform(0.5, 3.0);
    for (PathlossModel model :
         {PathlossModel::TwoRay, PathlossModel::FreeSpace}) {
      auto r = wsn::max_range(radio, model);
      REQUIRE(r.has_value());
      const double at_edge = wsn::rx_power(radio, *r, model).value;
      CHECK(rel_err(at_edge, wsn::to_mw(radio.rx_threshold_dbm)) < 1e-10);
      // Just beyond the edge the signal no longer clears the threshold.
      const double beyond = wsn::rx_power(radio, *r * 1.001, model).value;
      CHECK(beyond < wsn::to_mw(radio.rx_threshold_dbm));
    }
  }
}

TEST_CASE("maximum range grows monotonically with transmit power") {
  RadioParams radio = default_radio();
  double prev = 0.0;
  for (double p = -10.0; p <= 25.0; p += 1.0) {
    radio.tx_power_dbm = p;
    auto r = wsn::max_range(radio, PathlossModel::TwoRay);
    REQUIRE(r.has_value());
    CHECK(*r > prev);
    prev = *r;
  }
}

// ---------------------------------------------------------------------------
// Error-rate relations.

TEST_CASE("local erfc agrees with the standard library") {
  wsn::Rng rng(23);
  for (int i = 0; i < 4000; ++i) {
    const double x = rng.uniform(-6.0, 6.0);
    const double mine = wsn::erfc(x);
    const double ref = std::erfc(x);
    CHECK(rel_err(mine, ref) < 1e-12);
  }
  CHECK(wsn::erfc(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Tail anchor computed with 30-digit arithmetic.
  CHECK(rel_err(wsn::erfc(3.0), 2.2090496998585441e-05) < 1e-12);
  CHECK_THROWS_AS(wsn::erfc(std::nan("")), std::domain_error);
}

TEST_CASE("erfc inverse is a two-sided inverse") {
  wsn::Rng rng(29);
  for (int i = 0; i < 1000; ++i) {
    const double y = std::pow(10.0, rng.uniform(-12.0, 0.3));  // up to ~2
    if (!(y > 0.0) || !(y < 2.0)) continue;
    const double x = wsn::erfc_inv(y);
    CHECK(rel_err(wsn::erfc(x), y) < 1e-11);
  }
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-3.0, 6.0);
    const double y = wsn::erfc(x);
    if (!(y > 0.0) || !(y < 2.0)) continue;
    CHECK(std::fabs(wsn::erfc_inv(y) - x) < 1e-10 * std::max(1.0, std::fabs(x)));
  }
  CHECK(wsn::erfc_inv(1.0) == 0.0);
  CHECK_THROWS_AS(wsn::erfc_inv(0.0), std::domain_error);
  CHECK_THROWS_AS(wsn::erfc_inv(2.0), std::domain_error);
  CHECK_THROWS_AS(wsn::erfc_inv(-0.5), std::domain_error);
}

TEST_CASE("QPSK bit error rate anchors") {
  // erfc(1)/2, computed with 30-digit arithmetic.
  CHECK(rel_err(wsn::qpsk_ber(1.0), 0.078649603525142565) < 1e-13);
  CHECK(wsn::qpsk_ber(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(wsn::qpsk_ber(-1.0), std::domain_error);
}

TEST_CASE("energy-per-bit requirement for a 1e-5 error rate") {
  const double ebn0 = wsn::required_ebn0(1e-5);
  CHECK(rel_err(ebn0, 9.0946467420438307) < 1e-12);
  CHECK(std::fabs(ebn0 - 9.09) < 0.01);
  const double ebn0_db = 10.0 * std::log10(ebn0);
  CHECK(std::fabs(ebn0_db - 9.5878583468476066) < 1e-10);
  // The rounded 10 dB figure is within half a decibel.
  CHECK(std::fabs(ebn0_db - 10.0) < 0.5);
}

TEST_CASE("error rate and its requirement round-trip across nine decades") {
  for (double exp10 = -9.0; exp10 <= -1.0 + 1e-9; exp10 += 0.25) {
    const double ber = std::pow(10.0, exp10);
    const double ebn0 = wsn::required_ebn0(ber);
    CHECK(rel_err(wsn::qpsk_ber(ebn0), ber) < 1e-9);
  }
}

TEST_CASE("error-rate requirement rejects out-of-domain targets") {
  CHECK_THROWS_AS(wsn::required_ebn0(0.0), std::domain_error);
  CHECK_THROWS_AS(wsn::required_ebn0(-1e-5), std::domain_error);
  CHECK_THROWS_AS(wsn::required_ebn0(0.6), std::domain_error);
  // 0.5 is the boundary: no excess energy needed at a coin-flip error rate.
  CHECK(wsn::required_ebn0(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
}

// ---------------------------------------------------------------------------
// Receiver sensitivity.

TEST_CASE("thermal noise density matches the exact physical constants") {
  RadioParams radio = default_radio();
  // 10*log10(k * 290 K * 1e3), computed with 30-digit arithmetic.
  CHECK(std::fabs(wsn::thermal_noise_dbm_per_hz(radio) -
                  -173.97518719422810) < 1e-9);
}

TEST_CASE("noise floor and minimum detectable signal at the default radio") {
  RadioParams radio = default_radio();  // 2 MHz bandwidth, 10 dB noise figure
  CHECK(std::fabs(wsn::noise_floor_dbm(radio) - -100.96488723758829) < 1e-9);
  CHECK(std::fabs(wsn::minimum_detectable_signal(radio, 10.0).value -
                  -90.964887237588292) < 1e-9);
}

TEST_CASE("decibel sensitivity form agrees with the linear form on a grid") {
  // Independent linear computation: MDS_mw = kT*1e3 * F * B * SNR.
  for (double bw : {1e5, 2e6, 1e7, 2.2e7}) {
    for (double nf_db : {0.0, 3.0, 6.0, 10.0}) {
      for (double snr_db : {0.0, 3.0, 10.0, 20.0}) {
        RadioParams radio = default_radio();
        radio.noise_bandwidth_hz = bw;
        radio.noise_figure_db = nf_db;
        const double mds_db =
            wsn::minimum_detectable_signal(radio, snr_db).value;
        const double mds_mw_linear = radio.boltzmann_j_per_k *
                                     radio.reference_temp_k * 1e3 *
                                     wsn::db_to_linear(nf_db) * bw *
                                     wsn::db_to_linear(snr_db);
        CHECK(std::fabs(mds_db - wsn::to_dbm(mds_mw_linear)) < 0.01);
        CHECK(std::fabs(mds_db - wsn::to_dbm(mds_mw_linear)) < 1e-9);
      }
    }
  }
}

TEST_CASE("receiver noise density includes the noise figure") {
  RadioParams radio = default_radio();
  CHECK(rel_err(wsn::noise_density_w_per_hz(radio), 4.0038821e-20) < 1e-9);
  radio.noise_figure_db = 0.0;
  CHECK(rel_err(wsn::noise_density_w_per_hz(radio), 4.0038821e-21) < 1e-9);
}

TEST_CASE("dynamic range is the spread between strongest and weakest signals") {
  CHECK(wsn::receiver_dynamic_range(PowerDbm{-10.0}, PowerDbm{-91.0}) ==
        doctest::Approx(81.0).epsilon(1e-15));
  CHECK_THROWS_AS(
      wsn::receiver_dynamic_range(PowerDbm{-95.0}, PowerDbm{-91.0}),
      std::domain_error);
}

TEST_CASE("sensitivity domain errors") {
  RadioParams radio = default_radio();
  radio.noise_bandwidth_hz = 0.0;
  CHECK_THROWS_AS(wsn::noise_floor_dbm(radio), std::domain_error);
  RadioParams cold = default_radio();
  cold.reference_temp_k = 0.0;
  CHECK_THROWS_AS(wsn::thermal_noise_dbm_per_hz(cold), std::domain_error);
}

// ---------------------------------------------------------------------------
// Optimal transmit power.

TEST_CASE("optimal transmit power reproduces a worked example") {
  wsn::ModulationParams mod;
  mod.bits_per_symbol = 2;
  mod.data_rate_bps = 2.0e6;
  mod.symbol_rate_sps = 1.0e6;
  mod.noise_density_w_per_hz = wsn::noise_density_w_per_hz(default_radio());
  wsn::LinkState link;
  link.attenuation_factor = 1e-10;
  // 1e6 * 2 * (N0 / 1e-10) * 9.0946..., computed with 30-digit arithmetic.
  const double watts = wsn::optimal_tx_power(mod, link, 1e-5);
  CHECK(rel_err(watts, 7.2827786592585222e-03) < 1e-9);
}

TEST_CASE("optimal transmit power scales inversely with attenuation") {
  wsn::ModulationParams mod;
  mod.noise_density_w_per_hz = 4.0e-20;
  wsn::LinkState weak;
  weak.attenuation_factor = 1e-11;
  wsn::LinkState strong;
  strong.attenuation_factor = 1e-9;
  const double p_weak = wsn::optimal_tx_power(mod, weak, 1e-5);
  const double p_strong = wsn::optimal_tx_power(mod, strong, 1e-5);
  CHECK(rel_err(p_weak / p_strong, 100.0) < 1e-12);
}

TEST_CASE("stricter error targets demand more power") {
  wsn::ModulationParams mod;
  mod.noise_density_w_per_hz = 4.0e-20;
  wsn::LinkState link;
  link.attenuation_factor = 1e-10;
  double prev = 0.0;
  for (double exp10 = -1.0; exp10 >= -9.0; exp10 -= 1.0) {
    const double p = wsn::optimal_tx_power(mod, link, std::pow(10.0, exp10));
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("optimal transmit power rejects degenerate inputs") {
  wsn::ModulationParams mod;
  mod.noise_density_w_per_hz = 4.0e-20;
  wsn::LinkState link;
  link.attenuation_factor = 0.0;
  CHECK_THROWS_AS(wsn::optimal_tx_power(mod, link, 1e-5), std::domain_error);
  link.attenuation_factor = 1e-10;
  mod.noise_density_w_per_hz = 0.0;
  CHECK_THROWS_AS(wsn::optimal_tx_power(mod, link, 1e-5), std::domain_error);
  mod.noise_density_w_per_hz = 4.0e-20;
  mod.bits_per_symbol = 0;
  CHECK_THROWS_AS(wsn::optimal_tx_power(mod, link, 1e-5), std::domain_error);
}
