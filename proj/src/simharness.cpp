#include "zoibmed/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zoibmed/error.hpp"
#include "zoibmed/inference.hpp"
#include "zoibmed/ingest.hpp"

namespace zoibmed {

std::string scenario_label(double xm, double xy) {
  struct Known {
    double m, y;
    const char* label;
  };
  static constexpr Known known[] = {{0, 1, "Scenario 1"},
                                    {1, 0, "Scenario 2"},
                                    {0, 10, "Scenario 3"},
                                    {10, 0, "Scenario 4"},
                                    {1, 1, "Scenario 5"}};
  for (const auto& k : known)
    if (k.m == xm && k.y == xy) return k.label;
  std::ostringstream os;
  os << "xi_m x" << xm << ", xi_y x" << xy;
  return os.str();
}

CoefficientSet scenario_coefficients(const ScenarioSpec& spec) {
  if (spec.spec.heterogeneous)
    throw DomainError("scenarios scale the treatment column of a homogeneous model");
  CoefficientSet c = spec.true_coefficients;
  const auto p = static_cast<std::size_t>(c.mediator.banks[0].alpha.size()) - 2;
  const auto t = static_cast<Eigen::Index>(treatment_column(p));
  for (std::size_t comp = 0; comp < 4; ++comp) {
    c.mediator.banks[0].component(comp)[t] *= spec.xi_m_multiplier;
    c.outcome.banks[0].component(comp)[t] *= spec.xi_y_multiplier;
  }
  c.mediator.banks[1] = c.mediator.banks[0];
  c.outcome.banks[1] = c.outcome.banks[0];
  return c;
}

Dataset generate_dataset(const ScenarioSpec& spec, const RowMatrix& pool,
                         RandomStream& rng) {
  if (pool.rows() == 0) throw DomainError("covariate pool is empty");
  const CoefficientSet coef = scenario_coefficients(spec);
  const std::size_t p = static_cast<std::size_t>(pool.cols());
  const std::size_t n = spec.N;
  RowMatrix x(static_cast<Eigen::Index>(n), pool.cols());
  std::vector<int> a(n);
  Eigen::VectorXd m(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r) = pool.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pool.rows()))));
    a[i] = rng.uniform() < 0.5 ? 1 : 0;
    std::span<const double> xi(x.data() + i * p, p);
    m[r] = zoib_sample(rng, predict_mediator(spec.spec, coef, xi, a[i]));
    y[r] = zoib_sample(rng, predict_outcome(spec.spec, coef, xi, a[i], m[r]));
  }
  return Dataset(std::move(x), std::move(a), std::move(m), std::move(y));
}

namespace {

// Covariate rows only; treatment, mediator and outcome are placeholders.
Dataset covariate_frame(const RowMatrix& pool) {
  const auto n = static_cast<std::size_t>(pool.rows());
  if (n < 2) throw DomainError("covariate pool needs at least two rows");
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<int>(i % 2);
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(pool.rows(), 0.5);
  return Dataset(pool, std::move(a), half, half);
}

FittedModels truth_models(const ScenarioSpec& spec, std::size_t p) {
  FittedModels f;
  f.spec = spec.spec;
  f.coefficients = scenario_coefficients(spec);
  f.num_covariates = p;
  f.converged = true;
  return f;
}

}  // namespace

TruthResult compute_truth(const ScenarioSpec& spec, const RowMatrix& pool,
                          std::uint64_t seed, unsigned threads) {
  if (spec.truth_mc_size < 10000) throw DomainError("truth_mc_size must be at least 10^4");
  const Dataset frame = covariate_frame(pool);
  const auto rows = static_cast<std::size_t>(pool.rows());
  TruthResult t;
  t.K = static_cast<int>((spec.truth_mc_size + rows - 1) / rows);
  t.effects = estimate_average_effects(truth_models(spec, static_cast<std::size_t>(pool.cols())),
                                       frame, WeightVector::uniform(rows), t.K,
                                       derive_seed(seed, stream_tag::kTruth), threads);
  return t;
}

std::vector<MetricsRow> aggregate_metrics(const std::array<double, 5>& truth,
                                          std::span<const ReplicateOutcome> reps) {
  std::vector<const ReplicateOutcome*> ok;
  for (const auto& r : reps)
    if (r.ok) ok.push_back(&r);
  if (ok.empty()) throw DomainError("no successful replicates to aggregate");
  const double n = static_cast<double>(ok.size());

  auto sorted_sum = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };

  std::vector<MetricsRow> rows;
  for (std::size_t e = 0; e < 5; ++e) {
    std::vector<double> dev, len;
    std::size_t covered = 0;
    for (const auto* r : ok) {
      dev.push_back(r->estimate[e] - truth[e]);
      len.push_back(r->upper[e] - r->lower[e]);
      if (r->lower[e] <= truth[e] && truth[e] <= r->upper[e]) ++covered;
    }
    MetricsRow m;
    m.effect = std::string(kEffectNames[e]);
    m.truth = truth[e];
    m.reps = ok.size();
    m.bias = sorted_sum(dev) / n;
    std::vector<double> sq;
    for (double d : dev) sq.push_back((d - m.bias) * (d - m.bias));
    const double var = sorted_sum(sq) / n;
    m.rmse = std::max(std::abs(m.bias), std::sqrt(m.bias * m.bias + var));
    m.coverage = static_cast<double>(covered) / n;
    m.length = sorted_sum(len) / n;
    rows.push_back(m);
  }
  return rows;
}

ReplicateOutcome run_replicate(const ScenarioSpec& spec, const RowMatrix& pool,
                               const EstimatorConfig& cfg, std::size_t index) {
  ReplicateOutcome out;
  out.index = index;
  const std::uint64_t seed = derive_seed(cfg.seed, stream_tag::kGenerate, index);
  try {
    RandomStream rng(seed);
    const Dataset data = generate_dataset(spec, pool, rng);
    InferenceOptions opt;
    opt.spec = spec.spec;
    opt.fit = cfg.fit;
    opt.replicates = cfg.B;
    opt.seed = derive_seed(seed, stream_tag::kBootstrap);
    opt.threads = 1;
    opt.level = cfg.level;
    const InferenceResult res = run_inference(data, opt, average_effects_evaluator(cfg.K));
    for (std::size_t e = 0; e < 5; ++e) {
      out.estimate[e] = res.summary[e].estimate;
      out.lower[e] = res.summary[e].lower;
      out.upper[e] = res.summary[e].upper;
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const RowMatrix& pool,
                            const EstimatorConfig& cfg) {
  if (spec.reps < 2) throw DomainError("a scenario needs at least two replicates");
  ScenarioResult res;
  res.label = scenario_label(spec.xi_m_multiplier, spec.xi_y_multiplier);
  res.truth = compute_truth(spec, pool, cfg.seed, cfg.threads);
  res.replicates.resize(spec.reps);
  parallel_for(spec.reps, cfg.threads, [&](std::size_t r) {
    res.replicates[r] = run_replicate(spec, pool, cfg, r);
  });
  for (const auto& r : res.replicates)
    if (!r.ok) ++res.failures;
  if (static_cast<double>(res.failures) > 0.05 * static_cast<double>(spec.reps)) {
    std::ostringstream os;
    os << res.label << ": " << res.failures << " of " << spec.reps << " replicates failed";
    for (const auto& r : res.replicates)
      if (!r.ok) {
        os << "; first (replicate " << r.index << "): " << r.failure;
        break;
      }
    throw std::runtime_error(os.str());
  }
  res.metrics = aggregate_metrics(res.truth.effects.values(), res.replicates);
  return res;
}

Table metrics_table(const ScenarioResult& result, std::size_t N, bool percent) {
  Table t({"scenario", "N", "effect", "truth", "bias", "rmse", "coverage", "length", "reps"});
  const double s = percent ? 100.0 : 1.0;
  for (const auto& m : result.metrics)
    t.add_row({result.label, static_cast<long long>(N), m.effect, m.truth * s, m.bias * s,
               m.rmse * s, m.coverage, m.length * s, static_cast<long long>(m.reps)});
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic pool

namespace {

double rounded(double v, double per_unit) { return std::round(v * per_unit) / per_unit; }

int categorical(RandomStream& rng, std::span<const double> probs) {
  double u = rng.uniform();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (u < probs[k]) return static_cast<int>(k) + 1;
    u -= probs[k];
  }
  return static_cast<int>(probs.size());
}

// Maps a unit-scale draw to [1, 5] at four decimals, keeping interior
// values off the endpoints.
double to_five_point(double z) {
  if (z == 0.0) return 1.0;
  if (z == 1.0) return 5.0;
  return std::clamp(rounded(1.0 + 4.0 * z, 1e4), 1.0001, 4.9999);
}

}  // namespace

Table make_synthetic_pool(std::uint64_t seed, std::size_t n) {
  static constexpr double income_p[] = {0.15, 0.25, 0.25, 0.2, 0.15};
  static constexpr double educ_p[] = {0.05, 0.35, 0.3, 0.2, 0.1};
  static constexpr double occp_p[] = {0.2, 0.15, 0.15, 0.15, 0.1, 0.15, 0.1};
  static constexpr double marital_p[] = {0.45, 0.2, 0.2, 0.1, 0.05};

  Table t({"econ_hard", "depress1", "age", "sex", "nonwhite", "income", "educ", "occp",
           "marital", "treat", "job_seek", "depress2"});
  RandomStream rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double econ = rounded(1.0 + 4.0 * beta_quantile(rng.uniform(), 2.0, 3.0), 1e3);
    const double dep1 = rounded(1.0 + 4.0 * beta_quantile(rng.uniform(), 1.5, 4.5), 1e3);
    const double age = std::round(17.0 + 63.0 * beta_quantile(rng.uniform(), 2.5, 4.0));
    const int sex = rng.uniform() < 0.54 ? 1 : 0;
    const int nonwhite = rng.uniform() < 0.2 ? 1 : 0;
    const int income = categorical(rng, income_p);
    const int educ = categorical(rng, educ_p);
    const int occp = categorical(rng, occp_p);
    const int marital = categorical(rng, marital_p);
    const int treat = rng.uniform() < 0.67 ? 1 : 0;

    const double ze = (econ - 2.6) / 0.8;
    const double zd = (dep1 - 2.0) / 0.7;
    const double za = (age - 40.0) / 11.0;

    const ZoibParams med(expit(-3.0 - 0.3 * treat + 0.3 * zd),
                         expit(-1.5 + 0.35 * treat - 0.1 * ze),
                         expit(0.5 + 0.3 * treat + 0.15 * ze - 0.2 * zd + 0.05 * za),
                         std::exp(1.5 + 0.1 * treat));
    const double m = zoib_sample(rng, med);
    const double job_seek = to_five_point(m);
    const double mu = (job_seek - 1.0) / 4.0;

    const ZoibParams out(expit(-2.0 - 0.6 * zd + 0.8 * mu + 0.2 * treat),
                         expit(-3.0 + 0.5 * zd - 0.3 * treat),
                         expit(-1.0 + 0.45 * zd + 0.15 * ze - 0.5 * mu - 0.1 * treat + 0.1 * sex),
                         std::exp(2.0 + 0.2 * zd));
    const double depress2 = to_five_point(zoib_sample(rng, out));

    t.add_row({econ, dep1, age, static_cast<long long>(sex), static_cast<long long>(nonwhite),
               static_cast<long long>(income), static_cast<long long>(educ),
               static_cast<long long>(occp), static_cast<long long>(marital),
               static_cast<long long>(treat), job_seek, depress2});
  }
  return t;
}

ModelFile fit_reference_model(const Table& pool) {
  IngestOptions opt;
  opt.roles.outcome = "depress2";
  opt.roles.mediator = "job_seek";
  opt.roles.treatment = "treat";
  opt.roles.covariates = reference_covariates();
  opt.bounds["depress2"] = {1.0, 5.0};
  opt.bounds["job_seek"] = {1.0, 5.0};
  const Ingested in = ingest_table(pool, opt);
  ModelFile model;
  model.spec = ModelSpec{};
  model.coefficients = fit_all(in.dataset, model.spec).coefficients;
  model.covariates = in.dataset.column_names();
  model.standardization = in.dataset.standardization();
  return model;
}

RowMatrix reference_pool_covariates(const Table& pool, const ModelFile& model) {
  const auto& cols = model.standardization.columns;
  RowMatrix x(static_cast<Eigen::Index>(pool.rows()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < pool.rows(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pool.number(r, cols[c]);
  return apply_standardization(x, model.standardization);
}

}  // namespace zoibmed
