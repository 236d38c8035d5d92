#include "zoibmed/selfcheck.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <sstream>

#include "zoibmed/gformula.hpp"
#include "zoibmed/sensitivity.hpp"
#include "zoibmed/simharness.hpp"
#include "zoibmed/table.hpp"

namespace zoibmed {

double gradient_fd_error(const std::function<double(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& at, const Eigen::VectorXd& gradient,
                         double h) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Eigen::VectorXd up = at, down = at;
    up[j] += h;
    down[j] -= h;
    const double fd = (f(up) - f(down)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - gradient[j]));
  }
  const double norm = gradient.cwiseAbs().maxCoeff();
  return norm > 0.0 ? worst / norm : worst;
}

double ulps_apart(double a, double b, double scale) {
  const double ulp = std::nextafter(std::abs(scale), INFINITY) - std::abs(scale);
  if (ulp == 0.0 || !std::isfinite(ulp)) return a == b ? 0.0 : INFINITY;
  return std::abs(a - b) / ulp;
}

namespace {

struct Suite {
  std::vector<CheckResult> results;
  void add(std::string name, bool ok, std::string detail = {}) {
    results.push_back({std::move(name), ok, std::move(detail)});
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

ZoibParams random_params(RandomStream& rng) {
  return ZoibParams(0.3 * rng.uniform(), 0.3 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                    0.5 + 20.0 * rng.uniform());
}

void check_distribution(Suite& s, RandomStream& rng, bool quick) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  double worst_norm = 0.0, worst_mean = 0.0;
  bool quantile_ok = true;
  const int grid = quick ? 500 : 10000;
  for (int t = 0; t < 20; ++t) {
    const ZoibParams p = random_params(rng);
    const double interior = (1 - p.alpha()) * (1 - p.gamma());
    const double lb = std::lgamma(p.shape_a()) + std::lgamma(p.shape_b()) -
                      std::lgamma(p.shape_a() + p.shape_b());
    // zc is the signed distance to the nearer endpoint, exact where 1 - z is not.
    auto pdf = [&](double z, double zc) {
      const double lo = zc < 0 ? -zc : z;
      const double hi = zc > 0 ? zc : 1.0 - z;
      return std::exp((p.shape_a() - 1) * std::log(lo) + (p.shape_b() - 1) * std::log(hi) - lb);
    };
    const double mass = integrator.integrate(pdf, 0.0, 1.0, 1e-13);
    const double m1 = integrator.integrate(
        [&](double z, double zc) { return z * pdf(z, zc); }, 0.0, 1.0, 1e-13);
    worst_norm = std::max(worst_norm,
                          std::abs(p.alpha() + p.mass_one() + interior * mass - 1.0));
    worst_mean = std::max(worst_mean, std::abs(p.mass_one() + interior * m1 - zoib_mean(p)));
    for (int g = 1; g < grid && quantile_ok; ++g) {
      const double u = static_cast<double>(g) / grid;
      const double z = zoib_quantile(u, p);
      if (zoib_cdf(z, p) < u - 1e-10) quantile_ok = false;
    }
  }
  s.add("zoib normalization", worst_norm < 1e-8, "max error " + fmt(worst_norm));
  s.add("zoib mean formula", worst_mean < 1e-8, "max error " + fmt(worst_mean));
  s.add("zoib quantile inverts cdf", quantile_ok);
}

void check_gradients(Suite& s, RandomStream& rng) {
  const Eigen::Index n = 60, w = 3;
  Eigen::MatrixXd x(n, w);
  Eigen::VectorXd bin(n), frac(n), interior(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = 2.0 * rng.uniform() - 1.0;
    x(i, 2) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    bin[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    interior[i] = 0.02 + 0.96 * rng.uniform();
  }
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd b(w), bb(2 * w);
    for (auto& v : b) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : bb) v = 2.0 * rng.uniform() - 1.0;
    const double pen = t % 2 ? 0.5 : 0.0;
    auto fl = [&](const Eigen::VectorXd& c) {
      return logistic_objective(c, bin, x, pen, false).value;
    };
    auto fb = [&](const Eigen::VectorXd& c) {
      return beta_objective(c, interior, x, pen, false).value;
    };
    worst = std::max(worst, gradient_fd_error(fl, b, logistic_objective(b, bin, x, pen, false).gradient));
    worst = std::max(worst, gradient_fd_error(fb, bb, beta_objective(bb, interior, x, pen, false).gradient));
  }
  s.add("analytic gradients match finite differences", worst < 1e-6,
        "max relative error " + fmt(worst));
}

void check_estimators(Suite& s, const Dataset& data, const ModelSpec& spec,
                      std::uint64_t seed, bool quick) {
  const FittedModels fit = fit_all(data, spec);
  const double ll = observed_loglik(fit, data);
  s.add("likelihood factorizes over components",
        std::abs(ll - fit.loglik) <= 1e-9 * std::max(1.0, std::abs(ll)),
        "difference " + fmt(ll - fit.loglik));

  bool all_converged = true;
  for (const auto& c : fit.components) all_converged = all_converged && c.converged;
  s.add("every component converged", all_converged);

  const int K = quick ? 2 : 10;
  const WeightVector w = WeightVector::uniform(data.size());
  const std::uint64_t cell = derive_seed(seed, stream_tag::kCells);
  auto decomposition = [](const EffectEstimates& e) {
    const double scale = std::max({std::abs(e.potential[0][0]), std::abs(e.potential[0][1]),
                                   std::abs(e.potential[1][0]), std::abs(e.potential[1][1]),
                                   std::abs(e.tau)});
    return std::max(ulps_apart(e.delta1 + e.zeta0, e.tau, scale),
                    ulps_apart(e.delta0 + e.zeta1, e.tau, scale));
  };
  const EffectEstimates avg = estimate_average_effects(fit, data, w, K, cell);
  s.add("average effects decompose (<= 4 ulps)", decomposition(avg) <= 4.0,
        fmt(decomposition(avg)) + " ulps");
  const EffectEstimates qe = estimate_quantile_effects(fit, data, 0.5, w, K, cell);
  s.add("quantile effects decompose (<= 4 ulps)", decomposition(qe) <= 4.0,
        fmt(decomposition(qe)) + " ulps");

  const EffectEstimates threaded = estimate_average_effects(fit, data, w, K, cell, 3);
  s.add("effects do not depend on thread count",
        threaded.values() == avg.values() && threaded.potential == avg.potential);

  const double lambdas[] = {-0.5, 0.0, 0.5};
  const auto grid = sensitivity_grid(fit, data, lambdas, 1.0, SensitivityScale::kLinear, w, K, cell);
  s.add("linear sensitivity at lambda 0 equals the average estimator",
        grid[1].effects.values() == avg.values());
  bool tau_const = true, shift_ok = true;
  for (const auto& g : grid) {
    const double scale = std::max(std::abs(avg.potential[1][1]), std::abs(avg.potential[0][0]));
    tau_const = tau_const && ulps_apart(g.effects.tau, avg.tau, scale) <= 4.0;
    const double dm = g.mediator_mean[1] - g.mediator_mean[0];
    const double expect = avg.delta0 - g.params.lambda * dm;
    shift_ok = shift_ok && std::abs(g.effects.delta0 - expect) <= 1e-12;
  }
  s.add("linear sensitivity keeps tau fixed", tau_const);
  s.add("linear sensitivity shifts delta by -lambda (M1 - M0)", shift_ok);

  BootstrapOptions boot;
  boot.replicates = 1;
  boot.identity_resample = true;
  boot.max_failure_fraction = 1.0;
  const BootstrapEnsemble ens = bootstrap_fit(data, spec, boot);
  bool same = ens.replicates[0].fit.has_value();
  if (same)
    for (int a : {0, 1})
      for (std::size_t c = 0; c < 4; ++c) {
        same = same && ens.replicates[0].fit->coefficients.mediator.for_arm(a).component(c) ==
                           fit.coefficients.mediator.for_arm(a).component(c);
        same = same && ens.replicates[0].fit->coefficients.outcome.for_arm(a).component(c) ==
                           fit.coefficients.outcome.for_arm(a).component(c);
      }
  s.add("identity bootstrap reproduces the fit", same);

  const FittedModels refit = fit_all(data, spec);
  bool bitwise = true;
  for (int a : {0, 1})
    for (std::size_t c = 0; c < 4; ++c)
      bitwise = bitwise &&
                refit.coefficients.outcome.for_arm(a).component(c) ==
                    fit.coefficients.outcome.for_arm(a).component(c) &&
                refit.coefficients.mediator.for_arm(a).component(c) ==
                    fit.coefficients.mediator.for_arm(a).component(c);
  s.add("refit after sensitivity runs is bit-identical", bitwise);

  Table t({"effect", "value"});
  const auto v = avg.values();
  for (std::size_t e = 0; e < 5; ++e) t.add_row({std::string(kEffectNames[e]), v[e]});
  const std::string csv = t.to_csv();
  const Table back = Table::parse_csv(csv);
  bool numbers = true;
  for (std::size_t e = 0; e < 5; ++e) numbers = numbers && back.number(e, "value") == v[e];
  s.add("tables round-trip through CSV", back.to_csv() == csv && numbers);
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const Dataset* dataset, const ModelSpec& spec,
                                       std::uint64_t seed, bool quick) {
  Suite s;
  RandomStream rng(derive_seed(seed, stream_tag::kGenerate));
  try {
    check_distribution(s, rng, quick);
    check_gradients(s, rng);
    if (dataset) {
      check_estimators(s, *dataset, spec, seed, quick);
    } else {
      const Table pool = make_synthetic_pool();
      const ModelFile model = fit_reference_model(pool);
      ScenarioSpec sc;
      sc.true_coefficients = model.coefficients;
      sc.N = quick ? 300 : 899;
      const Dataset data = generate_dataset(sc, reference_pool_covariates(pool, model), rng);
      check_estimators(s, data, ModelSpec{}, seed, quick);
    }
  } catch (const std::exception& e) {
    s.add("suite ran without errors", false, e.what());
  }
  return s.results;
}

}  // namespace zoibmed
