#pragma once

// Reference computations that share no code with the library.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

inline double bisect(double lo, double hi, const auto& f) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double beta_pdf(double z, double a, double b) {
  return std::exp((a - 1) * std::log(z) + (b - 1) * std::log1p(-z) - log_beta_fn(a, b));
}

/// Integral of g against the Beta(a, b) density. The quadrature passes the
/// distance to the nearer endpoint, which keeps 1 - z exact near 1.
inline double beta_expect(double a, double b, const auto& g) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double lb = log_beta_fn(a, b);
  auto f = [&](double z, double zc) {
    const double lo = zc < 0 ? -zc : z;
    const double hi = zc > 0 ? zc : 1.0 - z;
    return g(z) * std::exp((a - 1) * std::log(lo) + (b - 1) * std::log(hi) - lb);
  };
  return ts.integrate(f, 0.0, 1.0, 1e-13);
}

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / x.size() -
                             static_cast<double>(j) / y.size()));
  }
  return d;
}

/// 1% critical value of the two-sample KS statistic.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

}  // namespace oracle
