#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zoibmed/model.hpp"

namespace zoibmed {

namespace detail {
/// Relative rounding resolution of objective values; steps whose predicted
/// gain is below it are taken without a value comparison.
inline constexpr double kObjectiveResolution = 1e-12;
}  // namespace detail

struct FitOptions {
  double gradient_tol = 1e-8;  // sup-norm of the penalized score
  int max_iterations = 500;
  /// Unpenalized logistic fits whose coefficients exceed this sup-norm are
  /// reported as separated.
  double separation_bound = 30.0;
  bool record_trace = false;
};

/// Value, gradient and (optionally) Hessian of a penalized log-likelihood.
/// The ridge term -(penalty / 2) * ||beta||^2 skips intercepts.
struct Objective {
  double value = 0.0;
  double loglik = 0.0;  // unpenalized part of `value`
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Logistic (or quasi-binomial, for responses in [0, 1]) log-likelihood
/// sum_i y_i eta_i - log(1 + exp(eta_i)).
Objective logistic_objective(const Eigen::VectorXd& coef,
                             const Eigen::VectorXd& response,
                             const Eigen::MatrixXd& design, double penalty,
                             bool with_hessian);

/// Beta log-likelihood in the mean/precision parameterization;
/// coef = [beta_mu; beta_phi], both of the design's width.
Objective beta_objective(const Eigen::VectorXd& coef,
                         const Eigen::VectorXd& response,
                         const Eigen::MatrixXd& design, double penalty,
                         bool with_hessian);

struct ComponentFit {
  Eigen::VectorXd coef;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Penalized log-likelihood at every accepted iterate (record_trace only).
  std::vector<double> trace;
  std::string warning;
};

/// Penalized logistic MLE. A class with zero (or all) events triggers the
/// degenerate-class rule: intercept logit(0.5 / (n + 1)) (or its mirror),
/// slopes 0, and a warning. Throws SeparationError when an unpenalized fit
/// diverges.
ComponentFit fit_component_binary(const Eigen::VectorXd& indicator,
                                  const Eigen::MatrixXd& design, double penalty,
                                  const FitOptions& options = {});

struct BetaComponentFit {
  Eigen::VectorXd mu;
  Eigen::VectorXd phi;
  ComponentFit info;  // info.coef = [mu; phi]
};

/// Joint MLE of (beta_mu, beta_phi) on interior responses. Requires at least
/// width + 2 rows; throws ConvergenceError after max_iterations.
BetaComponentFit fit_component_beta(const Eigen::VectorXd& interior_values,
                                    const Eigen::MatrixXd& design,
                                    double penalty,
                                    const FitOptions& options = {});

struct ComponentReport {
  std::string name;  // e.g. "mediator.alpha" or "outcome.mu[arm 1]"
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  double gradient_norm = 0.0;
  std::string warning;
};

struct FittedModels {
  ModelSpec spec;
  CoefficientSet coefficients;
  std::size_t num_covariates = 0;
  double loglik = 0.0;  // sum of component log-likelihoods
  bool converged = false;
  std::vector<ComponentReport> components;
};

/// Fits the four mediator and four outcome components (eight per arm for
/// heterogeneous specs). Component errors are rethrown with the component
/// label prepended.
FittedModels fit_all(const Dataset& dataset, const ModelSpec& spec,
                     const FitOptions& options = {});

/// Observed-data log-likelihood sum_i log f(M_i | A_i, X_i) + log f(Y_i | ...)
/// evaluated through the ZOIB density.
double observed_loglik(const FittedModels& models, const Dataset& dataset);

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
  bool stratify_by_arm = false;
  unsigned threads = 1;
  /// Test hook: every replicate uses rows 0..N-1 in order.
  bool identity_resample = false;
  /// Fraction of failed replicates tolerated before bootstrap_fit throws.
  double max_failure_fraction = 0.05;
};

struct BootstrapReplicate {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<FittedModels> fit;
  std::string failure;  // reason when fit is empty
};

struct BootstrapEnsemble {
  std::vector<BootstrapReplicate> replicates;
  std::size_t failures() const;
  std::vector<const FittedModels*> successful() const;
};

/// Row indices of one with-replacement resample of size N.
std::vector<std::size_t> bootstrap_rows(const std::vector<int>& treatment,
                                        bool stratify_by_arm,
                                        RandomStream& rng);

BootstrapEnsemble bootstrap_fit(const Dataset& dataset, const ModelSpec& spec,
                                const BootstrapOptions& options,
                                const FitOptions& fit_options = {});

// ---------------------------------------------------------------------------
// Pilot regressions for calibrating the sensitivity parameter

enum class SensitivityScale { kLogit, kLinear };

struct LambdaRange {
  double lo = 0.0;
  double hi = 0.0;
  double mediator_coefficient = 0.0;
};

/// Logit scale: quasi-binomial regression of Y on (1, X, A, M), range
/// [-2|b_M|, 2|b_M|]. Linear scale: OLS, range [-|b_M|, |b_M|].
LambdaRange pilot_lambda_range(const Dataset& dataset, SensitivityScale scale);

}  // namespace zoibmed
