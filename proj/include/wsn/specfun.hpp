#pragma once

#include <cmath>
#include <stdexcept>

namespace wsn {

// Complementary error function and its inverse, implemented locally so the
// numeric results do not depend on any particular libm.  erfc is evaluated
// through the regularized incomplete gamma function Q(1/2, x^2): a power
// series near zero and a continued fraction elsewhere, both iterated to
// machine precision.  The standard-library erfc is used only as an
// independent cross-check in the test suite.

namespace detail {

inline constexpr double kLogSqrtPi = 0.57236494292470008707171367567653;

/// Regularized lower incomplete gamma P(1/2, y) via power series, y < 1.5.
inline double gamma_p_half_series(double y) {
  double ap = 0.5;
  double sum = 2.0;  // 1/a with a = 1/2
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= y / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-y + 0.5 * std::log(y) - kLogSqrtPi);
}

/// Regularized upper incomplete gamma Q(1/2, y) via continued fraction,
/// y >= 1.5 (Lentz's method).
inline double gamma_q_half_cf(double y) {
  const double eps = 1e-17;
  const double fpmin = 1e-300;
  double b = y + 0.5;  // y + 1 - a
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - 0.5);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return std::exp(-y + 0.5 * std::log(y) - kLogSqrtPi) * h;
}

}  // namespace detail

/// Complementary error function, accurate to better than 1e-12 relative over
/// the domain used by link-budget math (|x| <= ~27; underflows to 0 beyond).
inline double erfc(double x) {
  if (std::isnan(x)) throw std::domain_error("erfc: non-finite argument");
  const double ax = std::fabs(x);
  double tail;  // erfc(|x|)
  if (ax == 0.0) {
    tail = 1.0;
  } else {
    const double y = ax * ax;
    tail = y < 1.5 ? 1.0 - detail::gamma_p_half_series(y)
                   : detail::gamma_q_half_cf(y);
  }
  return x < 0.0 ? 2.0 - tail : tail;
}

/// Inverse complementary error function on (0, 2).
///
/// Bracketed bisection on the strictly decreasing erfc, then a few Newton
/// polish steps.  Monotonicity makes the bracket search total: erfc(0) = 1
/// and erfc underflows to 0 well before x = 30.
inline double erfc_inv(double y) {
  if (!(y > 0.0) || !(y < 2.0)) {
    throw std::domain_error("erfc_inv: argument must lie in (0, 2)");
  }
  if (y == 1.0) return 0.0;
  if (y > 1.0) return -erfc_inv(2.0 - y);

  double lo = 0.0;
  double hi = 1.0;
  while (erfc(hi) > y) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 90; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (erfc(mid) > y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  // Newton refinement; d/dx erfc(x) = -2/sqrt(pi) * exp(-x^2).
  for (int i = 0; i < 3; ++i) {
    const double deriv = -1.1283791670955126 * std::exp(-x * x);
    if (deriv == 0.0) break;
    const double step = (erfc(x) - y) / deriv;
    if (!std::isfinite(step)) break;
    const double next = x - step;
    if (next > lo && next < hi) x = next;
  }
  return x;
}

}  // namespace wsn
