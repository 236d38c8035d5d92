#pragma once

// Point estimates plus nonparametric-bootstrap uncertainty for any
// functional of the fitted models.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "zoibmed/fit.hpp"
#include "zoibmed/gformula.hpp"

namespace zoibmed {

/// Type-7 (linear interpolation) sample quantile of sorted data.
double percentile_sorted(std::span<const double> sorted, double p);

/// One row of an effect table.
struct IntervalSummary {
  double estimate = 0.0;
  double sd = 0.0;          // bootstrap standard deviation (n - 1 divisor)
  double lower = 0.0;       // equal-tailed percentile bounds
  double upper = 0.0;
  double z = 0.0;           // estimate / sd
  double p_value = 1.0;     // two-sided, normal approximation
  double normal_lower = 0.0;
  double normal_upper = 0.0;
};

IntervalSummary summarize_replicates(double estimate,
                                     std::span<const double> replicates,
                                     double level = 0.95);

/// Maps a fit to a vector of estimates. `weights` and `cell_seed` are
/// supplied by the driver so point and replicate evaluations use
/// distinct, reproducible streams.
using Evaluator = std::function<std::vector<double>(
    const FittedModels& models, const Dataset& dataset,
    const WeightVector& weights, std::uint64_t cell_seed)>;

struct InferenceOptions {
  ModelSpec spec;
  FitOptions fit;
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool stratify_by_arm = false;
  /// Replicate evaluations integrate over a fresh Dirichlet draw on the
  /// observed covariate rows; otherwise uniform weights.
  bool dirichlet_weights = true;
  double level = 0.95;
};

struct InferenceResult {
  FittedModels fitted;
  std::vector<double> point;
  std::vector<std::vector<double>> replicates;  // successful replicates only
  std::vector<std::size_t> replicate_index;
  std::vector<std::string> failures;
  std::vector<IntervalSummary> summary;
};

/// Weights and cell seed of the point evaluation.
WeightVector point_weights(std::size_t n);
std::uint64_t point_cell_seed(std::uint64_t seed);

InferenceResult run_inference(const Dataset& dataset,
                              const InferenceOptions& options,
                              const Evaluator& evaluate);

/// Evaluator for the five average effects at K draws per row.
Evaluator average_effects_evaluator(int K);

}  // namespace zoibmed
