#ifndef QUALGATE_SPECIAL_HPP_
#define QUALGATE_SPECIAL_HPP_

// Regularized incomplete beta function and the Student-t distribution built
// on it.

#include <cmath>
#include <limits>
#include <string>

#include "qualgate/errors.hpp"

namespace qualgate::special {

namespace detail {

// Continued fraction for I_x(a,b), modified Lentz's method. Converges fast
// for x < (a+1)/(a+b+2); callers use the symmetry relation otherwise.
inline double incbeta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    // even step
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    // odd step
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge (a=" +
                     std::to_string(a) + ", b=" + std::to_string(b) +
                     ", x=" + std::to_string(x) + ")");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incbeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw NumericError("incbeta requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericError("incbeta requires x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::incbeta_cf(a, b, x) / a;
  return 1.0 - front * detail::incbeta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided tail P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
inline double t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw NumericError("t distribution requires dof > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return incbeta(dof / 2.0, 0.5, x);
}

/// Student-t CDF.
inline double t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw NumericError("t distribution requires dof > 0");
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * t_two_sided_p(t, dof);
  return t > 0.0 ? 1.0 - tail : tail;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace qualgate::special

#endif  // QUALGATE_SPECIAL_HPP_
