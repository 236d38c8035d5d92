#pragma once

// Simulation studies from known ZOIB coefficients: data generation, true
// effects by large Monte Carlo integration, and operating characteristics
// (bias, RMSE, coverage, interval length).

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zoibmed/fit.hpp"
#include "zoibmed/gformula.hpp"
#include "zoibmed/serialize.hpp"
#include "zoibmed/table.hpp"

namespace zoibmed {

struct ScenarioSpec {
  ModelSpec spec;  // homogeneous: the treatment column carries xi
  CoefficientSet true_coefficients;
  double xi_m_multiplier = 1.0;
  double xi_y_multiplier = 1.0;
  std::size_t N = 899;
  std::size_t reps = 200;
  std::size_t truth_mc_size = 90799;
};

/// "Scenario 1" ... "Scenario 5" for the multiplier pairs (0,1), (1,0),
/// (0,10), (10,0), (1,1); a descriptive label otherwise.
std::string scenario_label(double xi_m_multiplier, double xi_y_multiplier);

/// True coefficients with the treatment coefficient of every mediator
/// component scaled by xi_m and every outcome component by xi_y.
CoefficientSet scenario_coefficients(const ScenarioSpec& spec);

/// N rows: covariates resampled from the pool, A ~ Bernoulli(1/2),
/// M and Y drawn from the scenario's ZOIB laws.
Dataset generate_dataset(const ScenarioSpec& spec, const RowMatrix& pool,
                         RandomStream& rng);

struct TruthResult {
  EffectEstimates effects;  // includes per-effect MC standard errors
  int K = 0;
};

/// Average effects at the scenario coefficients, uniform weights over the
/// pool, K = ceil(truth_mc_size / pool rows) draws per row.
TruthResult compute_truth(const ScenarioSpec& spec, const RowMatrix& pool,
                          std::uint64_t seed, unsigned threads = 1);

struct EstimatorConfig {
  std::size_t B = 200;
  int K = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  FitOptions fit;
  double level = 0.95;
};

struct ReplicateOutcome {
  std::size_t index = 0;
  bool ok = false;
  std::string failure;
  std::array<double, 5> estimate{};
  std::array<double, 5> lower{};
  std::array<double, 5> upper{};
};

struct MetricsRow {
  std::string effect;
  double truth = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double length = 0.0;
  std::size_t reps = 0;
};

/// Aggregates successful replicates. Sums run over sorted values, so the
/// result does not depend on replicate order.
std::vector<MetricsRow> aggregate_metrics(const std::array<double, 5>& truth,
                                          std::span<const ReplicateOutcome> reps);

/// One generated dataset: point estimate and percentile intervals.
ReplicateOutcome run_replicate(const ScenarioSpec& spec, const RowMatrix& pool,
                               const EstimatorConfig& cfg, std::size_t index);

struct ScenarioResult {
  std::string label;
  TruthResult truth;
  std::vector<ReplicateOutcome> replicates;
  std::vector<MetricsRow> metrics;
  std::size_t failures = 0;
};

/// Generates spec.reps datasets and aggregates. Throws when more than 5%
/// of replicates fail.
ScenarioResult run_scenario(const ScenarioSpec& spec, const RowMatrix& pool,
                            const EstimatorConfig& cfg);

/// Columns: scenario, N, effect, truth, bias, rmse, coverage, length, reps.
/// `percent` multiplies truth, bias, rmse and length by 100.
Table metrics_table(const ScenarioResult& result, std::size_t N, bool percent);

// ---------------------------------------------------------------------------
// Bundled synthetic covariate pool with the JOBS II column schema

inline constexpr std::size_t kPoolRows = 899;
inline constexpr std::uint64_t kPoolSeed = 20240517;

/// Columns: econ_hard, depress1, age, sex, nonwhite, income, educ, occp,
/// marital, treat, job_seek, depress2. job_seek and depress2 lie on [1, 5].
Table make_synthetic_pool(std::uint64_t seed = kPoolSeed, std::size_t n = kPoolRows);

/// Covariates used by the reference model.
inline const std::vector<std::string>& reference_covariates() {
  static const std::vector<std::string> names = {"econ_hard", "depress1", "age",
                                                 "sex", "nonwhite"};
  return names;
}

/// Homogeneous fit of job_seek (mediator) and depress2 (outcome) on the
/// reference covariates of the pool.
ModelFile fit_reference_model(const Table& pool);

/// Pool covariates standardized with the model's record.
RowMatrix reference_pool_covariates(const Table& pool, const ModelFile& model);

}  // namespace zoibmed
