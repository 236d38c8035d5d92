#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "zoibmed/fit.hpp"
#include "zoibmed/gformula.hpp"

namespace zoibmed {

/// Unidentified departure from sequential ignorability. `lambda` shifts the
/// outcome mean by lambda * (M(a) - m) on the logit or linear scale; `rho` is
/// the Gaussian-copula correlation of (M(0), M(1)) and is used on the logit
/// scale only.
struct SensitivityParams {
  double lambda = 0.0;
  double rho = 0.95;

  /// Throws DomainError unless rho is in [0, 1] and lambda is finite.
  void validate() const;
};

/// (Phi(Z0), Phi(Z1)) for a standard bivariate normal with correlation rho.
/// Uses one normal pair; rho = 1 returns two identical uniforms.
std::pair<double, double> copula_uniforms(double rho, RandomStream& rng);

/// (M*(0), M*(1)) through each arm's generalized-inverse CDF.
std::pair<double, double> sample_copula_mediators(const ZoibParams& arm0,
                                                  const ZoibParams& arm1,
                                                  double rho,
                                                  RandomStream& rng);

struct SensitivityEstimates {
  EffectEstimates effects;
  SensitivityScale scale = SensitivityScale::kLinear;
  SensitivityParams params;
  /// Weighted means of the simulated mediators per arm.
  std::array<double, 2> mediator_mean{};
  /// Logit scale: conditional means clamped away from {0, 1}.
  std::size_t clamped = 0;
  /// Linear scale: simulated outcome means outside [0, 1] (kept as is).
  std::size_t range_violations = 0;
};

/// Logit-scale sensitivity: copula mediators, then
/// Y*{a, M*(a')} = expit(logit E + lambda (M*(a) - M*(a'))), E being the
/// outcome conditional mean at arm a and mediator M*(a').
SensitivityEstimates estimate_effects_logit(const FittedModels& models,
                                            const Dataset& dataset,
                                            const SensitivityParams& sens,
                                            const MonteCarloConfig& cfg);

/// Linear-scale sensitivity: one shared uniform per draw, then
/// Y*{a, M*(a')} = E + lambda (M*(a) - M*(a')). No clipping.
SensitivityEstimates estimate_effects_linear(const FittedModels& models,
                                             const Dataset& dataset,
                                             double lambda,
                                             const MonteCarloConfig& cfg);

/// One row per lambda, all with the same seed (common random numbers).
std::vector<SensitivityEstimates> sensitivity_grid(
    const FittedModels& models, const Dataset& dataset,
    std::span<const double> lambdas, double rho, SensitivityScale scale,
    const MonteCarloConfig& cfg);

/// Same grid with explicit weights and cell-stream seed. At lambda = 0 the
/// linear rows equal estimate_average_effects(models, dataset, weights, K,
/// cell_seed) bit for bit.
std::vector<SensitivityEstimates> sensitivity_grid(
    const FittedModels& models, const Dataset& dataset,
    std::span<const double> lambdas, double rho, SensitivityScale scale,
    const WeightVector& weights, int K, std::uint64_t cell_seed,
    unsigned threads = 1);

/// expit(logit(clamp(mean)) + shift), with mean clamped to
/// [1e-12, 1 - 1e-12]. `clamped` is set when the clamp was active.
double shift_logit_mean(double mean, double shift, bool* clamped = nullptr) noexcept;

inline constexpr double kLogitMeanClamp = 1e-12;

}  // namespace zoibmed
