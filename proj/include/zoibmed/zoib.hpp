#pragma once

// Zero-one inflated beta (ZOIB) distribution on [0, 1]:
//   P(Z = 0) = alpha,  P(Z = 1 | Z != 0) = gamma,
//   Z | Z in (0, 1) ~ Beta(mu * phi, (1 - mu) * phi).

#include "zoibmed/rng.hpp"

namespace zoibmed {

class ZoibParams {
 public:
  /// Validating constructor: alpha, gamma in [0, 1), mu in (0, 1), phi > 0.
  ZoibParams(double alpha, double gamma, double mu, double phi);

  /// Skips validation. Lets tests build degenerate laws (alpha = 1 etc.);
  /// regression links never produce them.
  static ZoibParams unchecked(double alpha, double gamma, double mu,
                              double phi) noexcept;

  double alpha() const noexcept { return alpha_; }
  double gamma() const noexcept { return gamma_; }
  double mu() const noexcept { return mu_; }
  double phi() const noexcept { return phi_; }

  double shape_a() const noexcept { return mu_ * phi_; }
  double shape_b() const noexcept { return (1.0 - mu_) * phi_; }

  /// Probability mass at 1: (1 - alpha) * gamma.
  double mass_one() const noexcept { return (1.0 - alpha_) * gamma_; }
  /// Probability of the open interior: (1 - alpha) * (1 - gamma).
  double mass_interior() const noexcept {
    return (1.0 - alpha_) * (1.0 - gamma_);
  }

 private:
  ZoibParams() = default;
  double alpha_ = 0.0;
  double gamma_ = 0.0;
  double mu_ = 0.5;
  double phi_ = 1.0;
};

/// (1 - alpha) gamma + (1 - alpha)(1 - gamma) mu.
double zoib_mean(const ZoibParams& p) noexcept;

/// Point mass at z = 0 and z = 1, interior density elsewhere. Throws
/// DomainError outside [0, 1].
double zoib_density(double z, const ZoibParams& p);

/// Right-continuous CDF. Throws DomainError outside [0, 1].
double zoib_cdf(double z, const ZoibParams& p);

/// Generalized inverse inf{z : F(z) >= u} for u in (0, 1). Branches on the
/// strict comparisons u < alpha (-> 0) and u > 1 - (1 - alpha) gamma (-> 1).
double zoib_quantile(double u, const ZoibParams& p);

/// zoib_quantile with log B(mu phi, (1 - mu) phi) precomputed by the caller.
double zoib_quantile(double u, const ZoibParams& p, double log_beta_ab);

/// Probability-integral-transform draw: one uniform through zoib_quantile.
double zoib_sample(RandomStream& rng, const ZoibParams& p);

/// log zoib_density. Returns -inf on a zero-probability point mass.
double zoib_loglik(double z, const ZoibParams& p);

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double x, double a, double b);

/// log of the Beta(a, b) density at x in (0, 1).
double beta_log_pdf(double x, double a, double b);

/// Inverse of the regularized incomplete beta function, solved to
/// |I_x(a, b) - u| < 1e-10 (or to adjacent doubles when the CDF is steeper
/// than that resolution). Throws ConvergenceError carrying the last bracket.
double beta_quantile(double u, double a, double b);

/// Same as beta_quantile with log B(a, b) supplied by the caller; used by
/// the g-formula loops where (a, b) repeat across draws.
double beta_quantile(double u, double a, double b, double log_beta_ab);

namespace detail {
inline constexpr double kBetaQuantileTol = 1e-10;
inline constexpr int kBetaQuantileMaxIter = 200;
inline constexpr double kInteriorEps = 1e-12;
}  // namespace detail

}  // namespace zoibmed
