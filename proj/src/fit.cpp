#include "zoibmed/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "special.hpp"
#include "zoibmed/error.hpp"

namespace zoibmed {

namespace {

double softplus(double t) noexcept {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sup_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Ridge term on every coefficient except the intercepts at `intercepts`.
void add_ridge(Objective& obj, const Eigen::VectorXd& coef, double penalty,
               std::initializer_list<Eigen::Index> intercepts,
               bool with_hessian) {
  if (penalty == 0.0) return;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (std::find(intercepts.begin(), intercepts.end(), j) != intercepts.end())
      continue;
    obj.value -= 0.5 * penalty * coef[j] * coef[j];
    obj.gradient[j] -= penalty * coef[j];
    if (with_hessian) obj.hessian(j, j) -= penalty;
  }
}

// Damped Newton ascent. The Hessian is shifted toward a multiple of the
// identity until the negated Hessian factors, and a halving line search only
// accepts steps that do not decrease the objective.
template <class F>
ComponentFit newton_maximize(F&& objective, Eigen::VectorXd x,
                             const FitOptions& options, bool check_separation,
                             const char* what) {
  ComponentFit fit;
  Objective obj = objective(x, true);
  if (!std::isfinite(obj.value))
    throw ConvergenceError(std::string(what) + ": non-finite log-likelihood at the start");

  const auto n = x.size();
  for (;;) {
    if (options.record_trace) fit.trace.push_back(obj.value);
    fit.gradient_norm = sup_norm(obj.gradient);
    if (fit.gradient_norm < options.gradient_tol) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= options.max_iterations) break;

    const Eigen::MatrixXd neg = -obj.hessian;
    const double scale = std::max(1.0, neg.diagonal().cwiseAbs().maxCoeff());
    Eigen::VectorXd step;
    bool exact_newton = false;
    for (double shift = 0.0;; shift = shift == 0.0 ? 1e-10 * scale : shift * 10.0) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg + shift * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(obj.gradient);
        if (step.allFinite()) {
          exact_newton = shift == 0.0;
          break;
        }
      }
      if (shift > 1e12 * scale) {
        step = obj.gradient / scale;  // steepest ascent as a last resort
        break;
      }
    }

    // Near the optimum the gain of a Newton step falls below the rounding
    // error of the objective, so value comparisons stop being informative.
    // Take the full step when the quadratic model says the gain is that small.
    const bool tiny = exact_newton &&
                      0.5 * step.dot(obj.gradient) <=
                          detail::kObjectiveResolution * std::max(1.0, std::abs(obj.value));
    bool accepted = false;
    if (tiny) {
      Eigen::VectorXd trial = x + step;
      if (std::isfinite(objective(trial, false).value)) {
        x = std::move(trial);
        accepted = true;
      }
    }
    for (double t = 1.0; !accepted && t > 1e-14; t *= 0.5) {
      Eigen::VectorXd trial = x + t * step;
      Objective next = objective(trial, false);
      if (std::isfinite(next.value) && next.value >= obj.value) {
        x = std::move(trial);
        accepted = true;
      }
    }
    if (!accepted) break;
    ++fit.iterations;
    obj = objective(x, true);
    if (check_separation && sup_norm(x) > options.separation_bound) {
      std::ostringstream os;
      os << what << ": coefficients exceed " << options.separation_bound
         << " in magnitude; the classes look separated. Refit with a small "
            "ridge penalty (finite prior sd).";
      throw SeparationError(os.str());
    }
  }
  fit.coef = std::move(x);
  fit.penalized_loglik = obj.value;
  fit.loglik = obj.loglik;
  fit.gradient_norm = sup_norm(obj.gradient);
  return fit;
}

template <class Fn>
auto labeled(const std::string& label, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const SeparationError& e) {
    throw SeparationError(label + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(label + ": " + e.what(), e.bracket_lo(), e.bracket_hi());
  } catch (const DataError& e) {
    throw DataError(label + ": " + e.what(), e.row());
  } catch (const DomainError& e) {
    throw DomainError(label + ": " + e.what());
  }
}

}  // namespace

Objective logistic_objective(const Eigen::VectorXd& coef,
                             const Eigen::VectorXd& response,
                             const Eigen::MatrixXd& design, double penalty,
                             bool with_hessian) {
  const Eigen::VectorXd eta = design * coef;
  const auto n = design.rows();
  Objective obj;
  Eigen::VectorXd resid(n);
  Eigen::VectorXd w(with_hessian ? n : 0);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = expit(eta[i]);
    ll += response[i] * eta[i] - softplus(eta[i]);
    resid[i] = response[i] - p;
    if (with_hessian) w[i] = p * (1.0 - p);
  }
  obj.loglik = ll;
  obj.value = ll;
  obj.gradient = design.transpose() * resid;
  if (with_hessian)
    obj.hessian = -(design.transpose() * w.asDiagonal() * design);
  add_ridge(obj, coef, penalty, {0}, with_hessian);
  return obj;
}

Objective beta_objective(const Eigen::VectorXd& coef,
                         const Eigen::VectorXd& response,
                         const Eigen::MatrixXd& design, double penalty,
                         bool with_hessian) {
  const auto width = design.cols();
  const auto n = design.rows();
  const Eigen::VectorXd eta_mu = design * coef.head(width);
  const Eigen::VectorXd eta_phi = design * coef.tail(width);

  Objective obj;
  Eigen::VectorXd g_mu(n), g_phi(n);
  Eigen::VectorXd h_mm(with_hessian ? n : 0), h_mp(with_hessian ? n : 0),
      h_pp(with_hessian ? n : 0);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = response[i];
    const double log_y = std::log(y);
    const double log_1my = std::log1p(-y);
    const double mu = expit(eta_mu[i]);
    const double phi = std::exp(eta_phi[i]);
    const double p = mu * phi;
    const double q = (1.0 - mu) * phi;
    if (!(p > 0.0 && q > 0.0 && std::isfinite(phi))) {
      // Shapes under- or overflowed: outside the usable parameter region.
      obj.value = obj.loglik = -std::numeric_limits<double>::infinity();
      obj.gradient = Eigen::VectorXd::Zero(2 * width);
      if (with_hessian) obj.hessian = Eigen::MatrixXd::Zero(2 * width, 2 * width);
      return obj;
    }
    ll += special::lgamma(phi) - special::lgamma(p) - special::lgamma(q) +
          (p - 1.0) * log_y + (q - 1.0) * log_1my;

    const double psi_p = special::digamma(p);
    const double psi_q = special::digamma(q);
    const double psi_phi = special::digamma(phi);
    const double ystar = log_y - log_1my;
    const double mustar = psi_p - psi_q;
    const double dmu = mu * (1.0 - mu);  // d mu / d eta_mu

    const double dl_dmu = phi * (ystar - mustar);
    const double dl_dphi = mu * (ystar - mustar) + log_1my - psi_q + psi_phi;
    g_mu[i] = dl_dmu * dmu;
    g_phi[i] = dl_dphi * phi;

    if (with_hessian) {
      const double tri_p = special::trigamma(p);
      const double tri_q = special::trigamma(q);
      const double tri_phi = special::trigamma(phi);
      const double d2_mumu = -phi * phi * (tri_p + tri_q);
      const double d2_muphi = (ystar - mustar) + phi * (-tri_p * mu + tri_q * (1.0 - mu));
      const double d2_phiphi =
          tri_phi - mu * mu * tri_p - (1.0 - mu) * (1.0 - mu) * tri_q;
      h_mm[i] = d2_mumu * dmu * dmu + dl_dmu * dmu * (1.0 - 2.0 * mu);
      h_mp[i] = d2_muphi * dmu * phi;
      h_pp[i] = d2_phiphi * phi * phi + dl_dphi * phi;
    }
  }
  obj.loglik = ll;
  obj.value = ll;
  obj.gradient.resize(2 * width);
  obj.gradient.head(width) = design.transpose() * g_mu;
  obj.gradient.tail(width) = design.transpose() * g_phi;
  if (with_hessian) {
    obj.hessian.resize(2 * width, 2 * width);
    obj.hessian.topLeftCorner(width, width) =
        design.transpose() * h_mm.asDiagonal() * design;
    obj.hessian.topRightCorner(width, width) =
        design.transpose() * h_mp.asDiagonal() * design;
    obj.hessian.bottomLeftCorner(width, width) =
        obj.hessian.topRightCorner(width, width).transpose();
    obj.hessian.bottomRightCorner(width, width) =
        design.transpose() * h_pp.asDiagonal() * design;
  }
  add_ridge(obj, coef, penalty, {0, width}, with_hessian);
  return obj;
}

ComponentFit fit_component_binary(const Eigen::VectorXd& indicator,
                                  const Eigen::MatrixXd& design, double penalty,
                                  const FitOptions& options) {
  if (indicator.size() != design.rows())
    throw DataError("fit_component_binary: response and design row counts differ");
  if (penalty < 0.0) throw DomainError("fit_component_binary: negative penalty");
  const auto n = design.rows();
  const auto width = design.cols();
  const double events = indicator.sum();

  if (events == 0.0 || events == static_cast<double>(n)) {
    ComponentFit fit;
    fit.coef = Eigen::VectorXd::Zero(width);
    const double nn = static_cast<double>(n);
    fit.coef[0] = events == 0.0 ? logit(0.5 / (nn + 1.0)) : logit((nn + 0.5) / (nn + 1.0));
    const Objective obj = logistic_objective(fit.coef, indicator, design, penalty, false);
    fit.loglik = obj.loglik;
    fit.penalized_loglik = obj.value;
    fit.gradient_norm = sup_norm(obj.gradient);
    fit.converged = true;
    fit.warning = events == 0.0
                      ? "no events among " + std::to_string(n) +
                            " rows; intercept fixed at logit(0.5 / (n + 1))"
                      : "all " + std::to_string(n) +
                            " rows are events; intercept fixed at logit((n + 0.5) / (n + 1))";
    if (options.record_trace) fit.trace.push_back(obj.value);
    return fit;
  }

  Eigen::VectorXd start = Eigen::VectorXd::Zero(width);
  start[0] = logit(events / static_cast<double>(n));
  auto f = [&](const Eigen::VectorXd& b, bool h) {
    return logistic_objective(b, indicator, design, penalty, h);
  };
  return newton_maximize(f, std::move(start), options, penalty == 0.0,
                         "logistic fit");
}

BetaComponentFit fit_component_beta(const Eigen::VectorXd& interior_values,
                                    const Eigen::MatrixXd& design,
                                    double penalty,
                                    const FitOptions& options) {
  const auto n = design.rows();
  const auto width = design.cols();
  if (interior_values.size() != n)
    throw DataError("fit_component_beta: response and design row counts differ");
  if (n < width + 2) {
    std::ostringstream os;
    os << "fit_component_beta: " << n << " interior observations for " << width
       << " columns; need at least " << width + 2;
    throw DataError(os.str());
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(interior_values[i] > 0.0 && interior_values[i] < 1.0))
      throw DataError("fit_component_beta: response not in the open interval (0, 1)",
                      static_cast<std::size_t>(i));
  if (penalty < 0.0) throw DomainError("fit_component_beta: negative penalty");

  const double mean = interior_values.mean();
  const double var =
      (interior_values.array() - mean).square().sum() / static_cast<double>(n - 1);
  double phi0 = mean * (1.0 - mean) / var - 1.0;
  if (!(phi0 > 0.0) || !std::isfinite(phi0)) phi0 = 1.0;

  Eigen::VectorXd start = Eigen::VectorXd::Zero(2 * width);
  start[0] = logit(mean);
  start[width] = std::log(phi0);
  auto f = [&](const Eigen::VectorXd& b, bool h) {
    return beta_objective(b, interior_values, design, penalty, h);
  };
  ComponentFit info =
      newton_maximize(f, std::move(start), options, false, "beta fit");
  if (!info.converged) {
    std::ostringstream os;
    os << "beta fit did not converge after " << info.iterations
       << " iterations; |gradient| = " << info.gradient_norm;
    if (!info.trace.empty()) {
      os << "; trace:";
      for (double v : info.trace) os << ' ' << v;
    }
    throw ConvergenceError(os.str());
  }
  BetaComponentFit out;
  out.mu = info.coef.head(width);
  out.phi = info.coef.tail(width);
  out.info = std::move(info);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ComponentReport report(std::string name, const ComponentFit& f) {
  return {std::move(name), f.iterations, f.converged, f.loglik, f.gradient_norm,
          f.warning};
}

struct SubmodelFitResult {
  LinkCoefficients coefficients;
  std::vector<ComponentReport> reports;
};

SubmodelFitResult fit_submodel(const Dataset& data, const ModelSpec& spec,
                               Submodel which,
                               const std::vector<std::size_t>& rows,
                               const std::string& prefix,
                               const FitOptions& options) {
  const bool outcome = which == Submodel::kOutcome;
  const auto& z = outcome ? data.outcome() : data.mediator();
  const auto width = static_cast<Eigen::Index>(
      design_width(spec, data.num_covariates(), which));
  const double penalty = spec.ridge_penalty();

  auto design_row = [&](std::size_t i) {
    const auto m = outcome ? std::optional<double>(data.mediator()[static_cast<Eigen::Index>(i)])
                           : std::nullopt;
    return build_design(spec, data.covariate_row(i), data.treatment()[i], m);
  };

  std::vector<std::size_t> nonzero, interior;
  Eigen::MatrixXd x_all(static_cast<Eigen::Index>(rows.size()), width);
  Eigen::VectorXd is_zero(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    const double v = z[static_cast<Eigen::Index>(i)];
    x_all.row(static_cast<Eigen::Index>(r)) = design_row(i).transpose();
    is_zero[static_cast<Eigen::Index>(r)] = v == 0.0 ? 1.0 : 0.0;
    if (v != 0.0) nonzero.push_back(r);
    if (v != 0.0 && v != 1.0) interior.push_back(r);
  }

  SubmodelFitResult out;
  out.coefficients = LinkCoefficients::zeros(static_cast<std::size_t>(width));

  const ComponentFit alpha = labeled(prefix + "alpha", [&] {
    return fit_component_binary(is_zero, x_all, penalty, options);
  });
  out.coefficients.alpha = alpha.coef;
  out.reports.push_back(report(prefix + "alpha", alpha));

  Eigen::MatrixXd x_nz(static_cast<Eigen::Index>(nonzero.size()), width);
  Eigen::VectorXd is_one(static_cast<Eigen::Index>(nonzero.size()));
  for (std::size_t r = 0; r < nonzero.size(); ++r) {
    x_nz.row(static_cast<Eigen::Index>(r)) = x_all.row(static_cast<Eigen::Index>(nonzero[r]));
    is_one[static_cast<Eigen::Index>(r)] =
        z[static_cast<Eigen::Index>(rows[nonzero[r]])] == 1.0 ? 1.0 : 0.0;
  }
  const ComponentFit gamma = labeled(prefix + "gamma", [&] {
    return fit_component_binary(is_one, x_nz, penalty, options);
  });
  out.coefficients.gamma = gamma.coef;
  out.reports.push_back(report(prefix + "gamma", gamma));

  Eigen::MatrixXd x_in(static_cast<Eigen::Index>(interior.size()), width);
  Eigen::VectorXd y_in(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t r = 0; r < interior.size(); ++r) {
    x_in.row(static_cast<Eigen::Index>(r)) = x_all.row(static_cast<Eigen::Index>(interior[r]));
    y_in[static_cast<Eigen::Index>(r)] = z[static_cast<Eigen::Index>(rows[interior[r]])];
  }
  const BetaComponentFit beta = labeled(prefix + "beta", [&] {
    return fit_component_beta(y_in, x_in, penalty, options);
  });
  out.coefficients.mu = beta.mu;
  out.coefficients.phi = beta.phi;
  out.reports.push_back(report(prefix + "mu/phi", beta.info));
  return out;
}

}  // namespace

FittedModels fit_all(const Dataset& dataset, const ModelSpec& spec,
                     const FitOptions& options) {
  FittedModels fm;
  fm.spec = spec;
  fm.num_covariates = dataset.num_covariates();
  fm.coefficients.mediator.heterogeneous = spec.heterogeneous;
  fm.coefficients.outcome.heterogeneous = spec.heterogeneous;

  std::vector<std::vector<std::size_t>> banks;
  if (spec.heterogeneous) {
    banks.resize(2);
    for (std::size_t i = 0; i < dataset.size(); ++i)
      banks[static_cast<std::size_t>(dataset.treatment()[i])].push_back(i);
  } else {
    banks.resize(1);
    for (std::size_t i = 0; i < dataset.size(); ++i) banks[0].push_back(i);
  }

  for (Submodel which : {Submodel::kMediator, Submodel::kOutcome}) {
    auto& target = which == Submodel::kMediator ? fm.coefficients.mediator
                                                : fm.coefficients.outcome;
    const std::string base = which == Submodel::kMediator ? "mediator." : "outcome.";
    for (std::size_t b = 0; b < banks.size(); ++b) {
      const std::string prefix =
          spec.heterogeneous ? base + "arm" + std::to_string(b) + "." : base;
      auto result = fit_submodel(dataset, spec, which, banks[b], prefix, options);
      target.banks[b] = std::move(result.coefficients);
      for (auto& r : result.reports) fm.components.push_back(std::move(r));
    }
  }
  fm.converged = true;
  for (const auto& r : fm.components) {
    fm.loglik += r.loglik;
    fm.converged = fm.converged && r.converged;
  }
  return fm;
}

double observed_loglik(const FittedModels& models, const Dataset& dataset) {
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto x = dataset.covariate_row(i);
    const int a = dataset.treatment()[i];
    const double m = dataset.mediator()[static_cast<Eigen::Index>(i)];
    const double y = dataset.outcome()[static_cast<Eigen::Index>(i)];
    total += zoib_loglik(m, predict_mediator(models.spec, models.coefficients, x, a));
    total += zoib_loglik(y, predict_outcome(models.spec, models.coefficients, x, a, m));
  }
  return total;
}

// ---------------------------------------------------------------------------

std::size_t BootstrapEnsemble::failures() const {
  return static_cast<std::size_t>(std::count_if(
      replicates.begin(), replicates.end(), [](const auto& r) { return !r.fit; }));
}

std::vector<const FittedModels*> BootstrapEnsemble::successful() const {
  std::vector<const FittedModels*> out;
  for (const auto& r : replicates)
    if (r.fit) out.push_back(&*r.fit);
  return out;
}

std::vector<std::size_t> bootstrap_rows(const std::vector<int>& treatment,
                                        bool stratify_by_arm,
                                        RandomStream& rng) {
  const std::size_t n = treatment.size();
  std::vector<std::size_t> rows(n);
  if (!stratify_by_arm) {
    for (auto& r : rows) r = rng.index(n);
    return rows;
  }
  std::array<std::vector<std::size_t>, 2> arms;
  for (std::size_t i = 0; i < n; ++i)
    arms[static_cast<std::size_t>(treatment[i])].push_back(i);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pool = arms[static_cast<std::size_t>(treatment[i])];
    rows[i] = pool[rng.index(pool.size())];
  }
  return rows;
}

BootstrapEnsemble bootstrap_fit(const Dataset& dataset, const ModelSpec& spec,
                                const BootstrapOptions& options,
                                const FitOptions& fit_options) {
  if (options.replicates == 0)
    throw DomainError("bootstrap_fit: need at least one replicate");
  BootstrapEnsemble ens;
  ens.replicates.resize(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t b) {
    auto& rep = ens.replicates[b];
    rep.index = b;
    rep.seed = derive_seed(options.seed, stream_tag::kBootstrap, b);
    try {
      std::vector<std::size_t> rows;
      if (options.identity_resample) {
        rows.resize(dataset.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      } else {
        RandomStream rng(rep.seed);
        rows = bootstrap_rows(dataset.treatment(), options.stratify_by_arm, rng);
      }
      rep.fit = fit_all(dataset.subset(rows), spec, fit_options);
    } catch (const std::exception& e) {
      rep.failure = e.what();
    }
  });
  const std::size_t failed = ens.failures();
  if (static_cast<double>(failed) >
      options.max_failure_fraction * static_cast<double>(options.replicates)) {
    std::ostringstream os;
    os << "bootstrap_fit: " << failed << " of " << options.replicates
       << " replicates failed";
    for (const auto& r : ens.replicates)
      if (!r.fit) {
        os << "; first failure (replicate " << r.index << "): " << r.failure;
        break;
      }
    throw std::runtime_error(os.str());
  }
  return ens;
}

// ---------------------------------------------------------------------------

LambdaRange pilot_lambda_range(const Dataset& dataset, SensitivityScale scale) {
  const ModelSpec pilot{};  // homogeneous (1, X, A, M)
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto width = static_cast<Eigen::Index>(
      design_width(pilot, dataset.num_covariates(), Submodel::kOutcome));
  Eigen::MatrixXd x(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x.row(i) = build_design(pilot, dataset.covariate_row(k), dataset.treatment()[k],
                            dataset.mediator()[i])
                   .transpose();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < width)
    throw DataError("pilot regression design is rank deficient");

  const auto& y = dataset.outcome();
  Eigen::VectorXd coef;
  if (scale == SensitivityScale::kLinear) {
    coef = qr.solve(y);
  } else {
    const double ybar = y.mean();
    if (!(ybar > 0.0 && ybar < 1.0))
      throw DataError("pilot regression: outcome is constant at a boundary");
    Eigen::VectorXd start = Eigen::VectorXd::Zero(width);
    start[0] = logit(ybar);
    auto f = [&](const Eigen::VectorXd& b, bool h) {
      return logistic_objective(b, y, x, 0.0, h);
    };
    const ComponentFit fit = newton_maximize(f, std::move(start), FitOptions{}, false,
                                             "pilot quasi-binomial fit");
    if (!fit.converged)
      throw ConvergenceError("pilot quasi-binomial fit did not converge");
    coef = fit.coef;
  }
  const double b_m = coef[width - 1];
  if (!std::isfinite(b_m)) throw DataError("pilot regression is degenerate");
  const double half = (scale == SensitivityScale::kLogit ? 2.0 : 1.0) * std::abs(b_m);
  return {-half, half, b_m};
}

}  // namespace zoibmed
