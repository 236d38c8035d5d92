#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "zoibmed/fit.hpp"
#include "zoibmed/model.hpp"
#include "zoibmed/rng.hpp"

namespace zoibmed {

enum class EffectFlavor { kAverage, kQuantile };

/// Indices into EffectEstimates::values().
enum EffectIndex : std::size_t { kDelta0 = 0, kDelta1, kZeta0, kZeta1, kTau };
inline constexpr std::array<std::string_view, 5> kEffectNames = {
    "delta(0)", "delta(1)", "zeta(0)", "zeta(1)", "tau"};

/// Natural indirect (delta), natural direct (zeta) and total (tau) effects on
/// the unit outcome scale. All five are differences of the same four
/// potential-outcome summaries S[a][a'] (mean or quantile of Y{a, M(a')}):
///   delta(a) = S[a][1] - S[a][0],  zeta(a) = S[1][a] - S[0][a],
///   tau = S[1][1] - S[0][0].
struct EffectEstimates {
  double delta0 = 0.0;
  double delta1 = 0.0;
  double zeta0 = 0.0;
  double zeta1 = 0.0;
  double tau = 0.0;
  EffectFlavor flavor = EffectFlavor::kAverage;
  double q = std::numeric_limits<double>::quiet_NaN();  // quantile flavor only
  int K = 0;
  std::uint64_t seed = 0;
  /// Potential-outcome summaries S[a][a'].
  std::array<std::array<double, 2>, 2> potential{};
  /// Within-run Monte Carlo standard errors (average flavor; NaN otherwise).
  std::array<double, 5> mc_se{};

  std::array<double, 5> values() const noexcept {
    return {delta0, delta1, zeta0, zeta1, tau};
  }
  static EffectEstimates from_potential(
      const std::array<std::array<double, 2>, 2>& s);
};

/// Covariate distribution weights: nonnegative, summing to one.
class WeightVector {
 public:
  static WeightVector uniform(std::size_t n);
  /// Validates nonnegativity and unit sum (to 1e-12).
  explicit WeightVector(std::vector<double> omega);

  std::size_t size() const noexcept { return omega_.size(); }
  double operator[](std::size_t i) const noexcept { return omega_[i]; }
  const std::vector<double>& values() const noexcept { return omega_; }

 private:
  WeightVector() = default;
  std::vector<double> omega_;
};

/// Flat Dirichlet draw by normalizing unit exponentials.
WeightVector sample_dirichlet_weights(std::size_t n, RandomStream& rng);

enum class Coupling {
  kComonotone,   // one U for both mediator arms, one V for all four outcomes
  kIndependent,  // fresh uniforms for every potential value
};

struct MonteCarloConfig {
  int K = 10;
  bool use_dirichlet_weights = false;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  Coupling coupling = Coupling::kComonotone;  // quantile estimator only
};

/// Weights implied by the config (uniform, or a Dirichlet draw from the
/// master seed's weight stream).
WeightVector config_weights(std::size_t n, const MonteCarloConfig& cfg);

/// Monte Carlo g-formula for average effects. For each unit i and draw k a
/// single uniform gives M*(0) and M*(1) through the mediator quantile
/// functions, and every Y*{a, M*(a')} is replaced by its conditional mean.
EffectEstimates estimate_average_effects(const FittedModels& models,
                                         const Dataset& dataset,
                                         const MonteCarloConfig& cfg);

/// Same, with explicit weights and cell-stream seed (used for reruns that
/// hold the weights fixed).
EffectEstimates estimate_average_effects(const FittedModels& models,
                                         const Dataset& dataset,
                                         const WeightVector& weights, int K,
                                         std::uint64_t cell_seed,
                                         unsigned threads = 1);

/// Monte Carlo g-formula for quantile effects. K * N covariate rows are drawn
/// with probabilities omega; each cell draws (U, V) and maps them through the
/// mediator and outcome quantile functions. Effects are differences of
/// inverse-CDF (type 1) empirical quantiles of the four pooled samples.
EffectEstimates estimate_quantile_effects(const FittedModels& models,
                                          const Dataset& dataset, double q,
                                          const MonteCarloConfig& cfg);

EffectEstimates estimate_quantile_effects(const FittedModels& models,
                                          const Dataset& dataset, double q,
                                          const WeightVector& weights, int K,
                                          std::uint64_t cell_seed,
                                          unsigned threads = 1,
                                          Coupling coupling = Coupling::kComonotone);

/// Inverse-CDF empirical quantile: smallest sample value x with
/// F_n(x) >= q. Sorts `sample` in place.
double empirical_quantile(std::vector<double>& sample, double q);

/// Standard deviation of each effect over R reruns with fresh cell streams
/// and the weights held fixed. Pass q for the quantile flavor.
std::array<double, 5> mc_error_estimate(const FittedModels& models,
                                        const Dataset& dataset,
                                        const MonteCarloConfig& cfg,
                                        std::size_t R,
                                        std::optional<double> q = std::nullopt);

}  // namespace zoibmed
