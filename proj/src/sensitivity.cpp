#include "zoibmed/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "engine.hpp"
#include "zoibmed/error.hpp"

namespace zoibmed {

void SensitivityParams::validate() const {
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
}

namespace {

double normal_cdf_open(double z) {
  const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
  constexpr double lo = 0x1p-60;
  return std::clamp(u, lo, 1.0 - 0x1p-53);
}

}  // namespace

std::pair<double, double> copula_uniforms(double rho, RandomStream& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  const auto [n1, n2] = rng.normal_pair();
  const double z0 = n1;
  const double z1 = rho * n1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * n2;
  const double u0 = normal_cdf_open(z0);
  return {u0, rho == 1.0 ? u0 : normal_cdf_open(z1)};
}

std::pair<double, double> sample_copula_mediators(const ZoibParams& arm0,
                                                  const ZoibParams& arm1,
                                                  double rho, RandomStream& rng) {
  const auto [u0, u1] = copula_uniforms(rho, rng);
  return {zoib_quantile(u0, arm0), zoib_quantile(u1, arm1)};
}

double shift_logit_mean(double mean, double shift, bool* clamped) noexcept {
  const double c = std::clamp(mean, kLogitMeanClamp, 1.0 - kLogitMeanClamp);
  if (clamped) *clamped = (c != mean);
  // expit(logit(c) + shift) in odds form, which skips the rounding of the
  // logit round trip.
  const double r = std::exp(shift);
  if (!std::isfinite(r)) return expit(logit(c) + shift);
  const double up = c * r;
  return up / ((1.0 - c) + up);
}

namespace {

SensitivityEstimates run(const FittedModels& models, const Dataset& dataset,
                         const WeightVector& weights, int K, std::uint64_t cell_seed,
                         unsigned threads, SensitivityScale scale,
                         const SensitivityParams& sens) {
  sens.validate();
  if (K < 1) throw DomainError("K must be at least 1");
  detail::MeanPolicy policy;
  policy.lambda = sens.lambda;
  if (scale == SensitivityScale::kLogit) {
    policy.mediators = detail::MeanPolicy::Mediators::kCopula;
    policy.rho = sens.rho;
    policy.outcome = detail::MeanPolicy::Outcome::kLogitShift;
  } else {
    policy.mediators = detail::MeanPolicy::Mediators::kShared;
    policy.outcome = detail::MeanPolicy::Outcome::kLinearShift;
  }
  const detail::MeanRun r =
      detail::simulate_means(models, dataset, weights, K, cell_seed, threads, policy);
  SensitivityEstimates out;
  out.effects = EffectEstimates::from_potential(r.potential);
  out.effects.flavor = EffectFlavor::kAverage;
  out.effects.K = K;
  out.effects.seed = cell_seed;
  out.effects.mc_se = r.mc_se;
  out.scale = scale;
  out.params = sens;
  out.mediator_mean = r.mediator_mean;
  out.clamped = r.clamped;
  out.range_violations = r.range_violations;
  return out;
}

SensitivityEstimates run(const FittedModels& models, const Dataset& dataset,
                         const MonteCarloConfig& cfg, SensitivityScale scale,
                         const SensitivityParams& sens) {
  SensitivityEstimates out =
      run(models, dataset, config_weights(dataset.size(), cfg), cfg.K,
          derive_seed(cfg.master_seed, stream_tag::kCells), cfg.threads, scale, sens);
  out.effects.seed = cfg.master_seed;
  return out;
}

}  // namespace

SensitivityEstimates estimate_effects_logit(const FittedModels& models,
                                            const Dataset& dataset,
                                            const SensitivityParams& sens,
                                            const MonteCarloConfig& cfg) {
  return run(models, dataset, cfg, SensitivityScale::kLogit, sens);
}

SensitivityEstimates estimate_effects_linear(const FittedModels& models,
                                             const Dataset& dataset,
                                             double lambda,
                                             const MonteCarloConfig& cfg) {
  SensitivityParams sens;
  sens.lambda = lambda;
  sens.rho = 1.0;
  return run(models, dataset, cfg, SensitivityScale::kLinear, sens);
}

std::vector<SensitivityEstimates> sensitivity_grid(
    const FittedModels& models, const Dataset& dataset,
    std::span<const double> lambdas, double rho, SensitivityScale scale,
    const WeightVector& weights, int K, std::uint64_t cell_seed, unsigned threads) {
  if (lambdas.empty()) throw DomainError("sensitivity grid needs at least one lambda");
  std::vector<SensitivityEstimates> rows;
  rows.reserve(lambdas.size());
  for (double lambda : lambdas) {
    SensitivityParams sens{lambda, scale == SensitivityScale::kLogit ? rho : 1.0};
    rows.push_back(run(models, dataset, weights, K, cell_seed, threads, scale, sens));
  }
  return rows;
}

std::vector<SensitivityEstimates> sensitivity_grid(
    const FittedModels& models, const Dataset& dataset,
    std::span<const double> lambdas, double rho, SensitivityScale scale,
    const MonteCarloConfig& cfg) {
  auto rows = sensitivity_grid(models, dataset, lambdas, rho, scale,
                               config_weights(dataset.size(), cfg), cfg.K,
                               derive_seed(cfg.master_seed, stream_tag::kCells),
                               cfg.threads);
  for (auto& r : rows) r.effects.seed = cfg.master_seed;
  return rows;
}

}  // namespace zoibmed
