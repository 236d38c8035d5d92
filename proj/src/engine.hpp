#pragma once

// Shared inner loops of the Monte Carlo g-formula estimators.

#include <array>
#include <cstdint>

#include "zoibmed/fit.hpp"
#include "zoibmed/gformula.hpp"

namespace zoibmed::detail {

/// Mediator law of one covariate row at one arm, with log B(a, b) cached.
struct MediatorLaw {
  ZoibParams params;
  double log_beta;
  double draw(double u) const;
};

/// Outcome linear predictors of one covariate row, split into the part that
/// does not depend on the mediator and the mediator slope.
struct OutcomeLaw {
  std::array<std::array<double, 4>, 2> base{};   // [arm][component]
  std::array<std::array<double, 4>, 2> slope{};  // [arm][component]

  ZoibParams params(int a, double m) const;
  double mean(int a, double m) const;
};

struct UnitLaws {
  std::array<MediatorLaw, 2> mediator;
  OutcomeLaw outcome;
};

UnitLaws unit_laws(const FittedModels& models, std::span<const double> x);

struct MeanPolicy {
  enum class Mediators { kShared, kCopula };
  enum class Outcome { kMean, kLogitShift, kLinearShift };
  Mediators mediators = Mediators::kShared;
  double rho = 1.0;
  Outcome outcome = Outcome::kMean;
  double lambda = 0.0;
};

struct MeanRun {
  std::array<std::array<double, 2>, 2> potential{};  // S[a][a']
  std::array<double, 5> mc_se{};
  std::array<double, 2> mediator_mean{};
  std::size_t clamped = 0;
  std::size_t range_violations = 0;
};

MeanRun simulate_means(const FittedModels& models, const Dataset& dataset,
                       const WeightVector& weights, int K,
                       std::uint64_t cell_seed, unsigned threads,
                       const MeanPolicy& policy);

}  // namespace zoibmed::detail
