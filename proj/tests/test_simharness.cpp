#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "zoibmed/error.hpp"
#include "zoibmed/simharness.hpp"

using namespace zoibmed;

namespace {

ScenarioSpec base_scenario(double xm, double xy, std::size_t n = 899) {
  ScenarioSpec s = fixture::scenario(fixture::simple_coefficients(2, 0.7, 0.5, 1.3), n);
  s.xi_m_multiplier = xm;
  s.xi_y_multiplier = xy;
  s.truth_mc_size = 20000;
  return s;
}

ReplicateOutcome rep(double est, double lo, double hi) {
  ReplicateOutcome r;
  r.ok = true;
  r.estimate.fill(est);
  r.lower.fill(lo);
  r.upper.fill(hi);
  return r;
}

}  // namespace

TEST_SUITE("simharness") {

TEST_CASE("scenario labels") {
  CHECK(scenario_label(0, 1) == "Scenario 1");
  CHECK(scenario_label(1, 0) == "Scenario 2");
  CHECK(scenario_label(0, 10) == "Scenario 3");
  CHECK(scenario_label(10, 0) == "Scenario 4");
  CHECK(scenario_label(1, 1) == "Scenario 5");
  CHECK(scenario_label(2, 0.5) == "xi_m x2, xi_y x0.5");
}

TEST_CASE("scenario multipliers touch only the treatment column") {
  const ScenarioSpec s = base_scenario(10, 0);
  const CoefficientSet c = scenario_coefficients(s);
  const auto& orig = s.true_coefficients;
  for (std::size_t comp = 0; comp < 4; ++comp) {
    const auto& m = c.mediator.banks[0].component(comp);
    const auto& m0 = orig.mediator.banks[0].component(comp);
    const auto& y = c.outcome.banks[0].component(comp);
    const auto& y0 = orig.outcome.banks[0].component(comp);
    CHECK(m[3] == 10 * m0[3]);
    CHECK(y[3] == 0.0);
    CHECK(y[4] == y0[4]);
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(m[j] == m0[j]);
      CHECK(y[j] == y0[j]);
    }
  }
  ScenarioSpec het = s;
  het.spec.heterogeneous = true;
  CHECK_THROWS_AS(scenario_coefficients(het), DomainError);
}

TEST_CASE("generated mediator ignores treatment when its coefficient is zero") {
  const ScenarioSpec s = base_scenario(0, 1, 6000);
  const auto pool = fixture::normal_pool(500, 2, 1);
  RandomStream rng(2);
  const Dataset d = generate_dataset(s, pool, rng);
  CHECK(d.size() == 6000);
  std::vector<double> m0, m1;
  for (std::size_t i = 0; i < d.size(); ++i)
    (d.treatment()[i] ? m1 : m0).push_back(d.mediator()[static_cast<Eigen::Index>(i)]);
  CHECK(std::abs(static_cast<double>(m1.size()) / 6000.0 - 0.5) < 0.03);
  CHECK(oracle::ks_statistic(m0, m1) < oracle::ks_critical_1pct(m0.size(), m1.size()));

  // With the multiplier restored the arms separate.
  const ScenarioSpec t = base_scenario(1, 1, 6000);
  RandomStream rng2(2);
  const Dataset e = generate_dataset(t, pool, rng2);
  std::vector<double> e0, e1;
  for (std::size_t i = 0; i < e.size(); ++i)
    (e.treatment()[i] ? e1 : e0).push_back(e.mediator()[static_cast<Eigen::Index>(i)]);
  CHECK(oracle::ks_statistic(e0, e1) > oracle::ks_critical_1pct(e0.size(), e1.size()));
}

TEST_CASE("generated boundary frequencies match the model") {
  const ScenarioSpec s = base_scenario(1, 1, 8000);
  const CoefficientSet c = scenario_coefficients(s);
  const auto pool = fixture::normal_pool(400, 2, 3);
  RandomStream rng(4);
  const Dataset d = generate_dataset(s, pool, rng);
  double expect_zero = 0, expect_one = 0, zeros = 0, ones = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const ZoibParams p = predict_outcome(s.spec, c, d.covariate_row(i), d.treatment()[i], d.mediator()[k]);
    expect_zero += p.alpha();
    expect_one += p.mass_one();
    zeros += d.outcome()[k] == 0.0;
    ones += d.outcome()[k] == 1.0;
  }
  const double n = static_cast<double>(d.size());
  const double se0 = std::sqrt(expect_zero / n * (1 - expect_zero / n) / n);
  const double se1 = std::sqrt(expect_one / n * (1 - expect_one / n) / n);
  CHECK(std::abs(zeros - expect_zero) / n < 4 * se0);
  CHECK(std::abs(ones - expect_one) / n < 4 * se1);
}

TEST_CASE("truth has exact zeros where the scenario removes a path") {
  const auto pool = fixture::normal_pool(300, 2, 5);
  const TruthResult s1 = compute_truth(base_scenario(0, 1), pool, 1);
  CHECK(s1.effects.delta0 == 0.0);
  CHECK(s1.effects.delta1 == 0.0);
  CHECK(s1.effects.zeta0 != 0.0);
  CHECK(s1.K == 67);
  const TruthResult none = compute_truth(base_scenario(0, 0), pool, 1);
  for (double v : none.effects.values()) CHECK(v == 0.0);
  ScenarioSpec small = base_scenario(1, 1);
  small.truth_mc_size = 500;
  CHECK_THROWS_AS(compute_truth(small, pool, 1), DomainError);
}

TEST_CASE("independent truth runs agree within Monte Carlo error") {
  const auto pool = fixture::normal_pool(300, 2, 6);
  const ScenarioSpec s = base_scenario(1, 1);
  const TruthResult a = compute_truth(s, pool, 10), b = compute_truth(s, pool, 11);
  const TruthResult a3 = compute_truth(s, pool, 10, 3);
  CHECK(a.effects.values() == a3.effects.values());
  for (std::size_t e = 0; e < 5; ++e) {
    const double se = std::hypot(a.effects.mc_se[e], b.effects.mc_se[e]);
    CHECK(se > 0.0);
    CHECK(std::abs(a.effects.values()[e] - b.effects.values()[e]) < 5.0 * se);
  }
}

TEST_CASE("metrics at the truth") {
  std::array<double, 5> truth = {0.1, 0.2, -0.3, 0.0, 0.05};
  std::vector<ReplicateOutcome> reps;
  for (int i = 0; i < 7; ++i) {
    ReplicateOutcome r;
    r.ok = true;
    r.estimate = truth;
    r.lower = truth;
    r.upper = truth;
    reps.push_back(r);
  }
  const auto rows = aggregate_metrics(truth, reps);
  REQUIRE(rows.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) {
    CHECK(rows[e].effect == std::string(kEffectNames[e]));
    CHECK(rows[e].bias == 0.0);
    CHECK(rows[e].rmse == 0.0);
    CHECK(rows[e].coverage == 1.0);
    CHECK(rows[e].length == 0.0);
    CHECK(rows[e].reps == 7);
  }
}

TEST_CASE("metrics arithmetic") {
  const std::array<double, 5> truth{};
  std::vector<ReplicateOutcome> reps = {rep(0.1, -0.1, 0.3), rep(-0.3, -0.5, -0.1),
                                        rep(0.5, 0.0, 1.0), rep(0.2, 0.2, 0.4)};
  ReplicateOutcome failed = rep(100, 100, 100);
  failed.ok = false;
  reps.push_back(failed);
  const auto rows = aggregate_metrics(truth, reps);
  const auto& m = rows[0];
  CHECK(m.reps == 4);
  CHECK(m.bias == doctest::Approx(0.125));
  const double mse = (0.01 + 0.09 + 0.25 + 0.04) / 4.0;
  CHECK(m.rmse == doctest::Approx(std::sqrt(mse)));
  CHECK(m.rmse >= std::abs(m.bias));
  CHECK(m.coverage == 0.5);  // 0 lies on the closed bound of the third interval
  CHECK(m.length == doctest::Approx((0.4 + 0.4 + 1.0 + 0.2) / 4.0));

  std::vector<ReplicateOutcome> shuffled = {reps[3], failed, reps[0], reps[2], reps[1]};
  const auto again = aggregate_metrics(truth, shuffled);
  for (std::size_t e = 0; e < 5; ++e) {
    CHECK(again[e].bias == rows[e].bias);
    CHECK(again[e].rmse == rows[e].rmse);
    CHECK(again[e].coverage == rows[e].coverage);
    CHECK(again[e].length == rows[e].length);
  }
  std::vector<ReplicateOutcome> none = {failed};
  CHECK_THROWS_AS(aggregate_metrics(truth, none), DomainError);
}

TEST_CASE("metrics table") {
  ScenarioResult r;
  r.label = "Scenario 5";
  r.metrics = aggregate_metrics({0.01, 0.02, 0.03, 0.04, 0.05},
                                std::vector<ReplicateOutcome>{rep(0.02, 0.0, 0.04), rep(0.03, 0.01, 0.05)});
  const Table plain = metrics_table(r, 899, false);
  const Table pct = metrics_table(r, 899, true);
  REQUIRE(plain.rows() == 5);
  CHECK(plain.header() == std::vector<std::string>{"scenario", "N", "effect", "truth", "bias",
                                                    "rmse", "coverage", "length", "reps"});
  CHECK(plain.at(0, "scenario") == "Scenario 5");
  CHECK(plain.at(4, "effect") == "tau");
  CHECK(plain.at(0, "N") == "899");
  CHECK(pct.number(0, "truth") == doctest::Approx(100 * plain.number(0, "truth")));
  CHECK(pct.number(0, "length") == doctest::Approx(100 * plain.number(0, "length")));
  CHECK(pct.number(0, "coverage") == plain.number(0, "coverage"));
}

TEST_CASE("one replicate runs end to end and is reproducible") {
  ScenarioSpec s = base_scenario(1, 1, 300);
  const auto pool = fixture::normal_pool(300, 2, 7);
  EstimatorConfig cfg;
  cfg.B = 6;
  cfg.K = 2;
  cfg.seed = 42;
  const ReplicateOutcome a = run_replicate(s, pool, cfg, 3);
  const ReplicateOutcome b = run_replicate(s, pool, cfg, 3);
  REQUIRE(a.ok);
  CHECK(a.index == 3);
  CHECK(a.estimate == b.estimate);
  CHECK(a.lower == b.lower);
  for (std::size_t e = 0; e < 5; ++e) CHECK(a.lower[e] <= a.upper[e]);
  const ReplicateOutcome c = run_replicate(s, pool, cfg, 4);
  CHECK(c.estimate != a.estimate);
}

TEST_CASE("synthetic pool and reference model") {
  const Table pool = make_synthetic_pool(kPoolSeed, 120);
  CHECK(pool.rows() == 120);
  for (const char* col : {"econ_hard", "depress1", "age", "sex", "nonwhite", "income", "educ",
                          "occp", "marital", "treat", "job_seek", "depress2"})
    CHECK(pool.has_column(col));
  CHECK(pool.to_csv() == make_synthetic_pool(kPoolSeed, 120).to_csv());
  for (std::size_t r = 0; r < pool.rows(); ++r) {
    const double js = pool.number(r, "job_seek");
    CHECK(js >= 1.0);
    CHECK(js <= 5.0);
    const double t = pool.number(r, "treat");
    CHECK((t == 0.0 || t == 1.0));
  }
  const Table full = make_synthetic_pool();
  const ModelFile model = fit_reference_model(full);
  CHECK(model.covariates == reference_covariates());
  const RowMatrix x = reference_pool_covariates(full, model);
  CHECK(x.rows() == static_cast<Eigen::Index>(kPoolRows));
  CHECK(x.cols() == 5);
  CHECK(std::abs(x.col(0).mean()) < 1e-12);
}

}  // TEST_SUITE
