#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ising/errors.hpp"

namespace ising {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log(1 + e^x) without overflow.
inline double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// 1 / (1 + e^{-x}), stable at both tails.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log cosh(x), linear tail for large |x|.
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094172321;
}

inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& v) {
  return log_sum_exp(std::span<const double>(v));
}

inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (!std::isfinite(a)) return a;
  return a + std::log1p(std::exp(b - a));
}

// Scaled complementary error function e^{x^2} erfc(x), x >= 0.
// Direct product below the erfc underflow region, asymptotic series above.
inline double erfcx(double x) {
  if (x < 20.0) return std::exp(x * x) * std::erfc(x);
  // erfcx(x) ~ 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k
  const double inv2x2 = 1.0 / (2.0 * x * x);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) * inv2x2;
    sum += term;
  }
  return sum / (x * 1.7724538509055160272981674833411);
}

// log(Phi(b) - Phi(a)) for a < b, standard normal CDF, stable far in
// either tail (|a|, |b| up to ~1e4 standardized units).
inline double log_normal_cdf_diff(double a, double b) {
  if (!(a < b)) return -std::numeric_limits<double>::infinity();
  constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
  if (b <= -8.0) {
    // Mirror into the right tail.
    const double na = -b, nb = -a;
    const double scaled =
        erfcx(na * kInvSqrt2) -
        ((nb > 1e8) ? 0.0
                    : std::exp(-0.5 * (nb * nb - na * na)) * erfcx(nb * kInvSqrt2));
    return -0.5 * na * na + std::log(0.5 * scaled);
  }
  if (a >= 8.0) {
    const double scaled =
        erfcx(a * kInvSqrt2) -
        ((b > 1e8) ? 0.0
                   : std::exp(-0.5 * (b * b - a * a)) * erfcx(b * kInvSqrt2));
    return -0.5 * a * a + std::log(0.5 * scaled);
  }
  const double lo = std::max(a, -38.0), hi = std::min(b, 38.0);
  const double diff = 0.5 * (std::erf(hi * kInvSqrt2) - std::erf(lo * kInvSqrt2));
  if (diff <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(diff);
}

// log of  integral_{lo}^{hi} exp(a t - (n/2) t^2) dt.
// Complete the square: Gaussian with mean a/n, variance 1/n.
inline double log_gauss_interval(double a, double lo, double hi, double n) {
  if (!(n > 0.0)) throw InvalidInputError("log_gauss_interval: n must be > 0");
  const double mean = a / n;
  const double sd = 1.0 / std::sqrt(n);
  const double alpha = (lo - mean) / sd;
  const double beta = (hi - mean) / sd;
  return 0.5 * a * a / n + std::log(sd) + 0.5 * kLog2Pi +
         log_normal_cdf_diff(alpha, beta);
}

// Recursive adaptive Simpson quadrature.
namespace detail {
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}
inline double adapt(const std::function<double(double)>& f, double a, double b,
                    double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0) return left + right;
  if (std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int max_depth = 40) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return detail::adapt(f, a, b, fa, fm, fb, detail::simpson(f, a, b, fa, fm, fb),
                       tol, max_depth);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw InvalidInputError("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  if (v.size() % 2 == 1) return v[k];
  return 0.5 * (v[k - 1] + v[k]);
}

}  // namespace ising
