#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "special.hpp"
#include "zoibmed/error.hpp"
#include "zoibmed/sensitivity.hpp"

namespace zoibmed::detail {

double MediatorLaw::draw(double u) const {
  return zoib_quantile(u, params, log_beta);
}

ZoibParams OutcomeLaw::params(int a, double m) const {
  std::array<double, 4> eta{};
  for (std::size_t c = 0; c < 4; ++c) {
    const double t = base[static_cast<std::size_t>(a)][c] +
                     slope[static_cast<std::size_t>(a)][c] * m;
    if (!std::isfinite(t))
      throw DomainError(std::string("outcome model: non-finite linear predictor for ") +
                        kComponentNames[c]);
    eta[c] = std::clamp(t, -kLinkClamp, kLinkClamp);
  }
  return ZoibParams(expit(eta[0]), expit(eta[1]), expit(eta[2]), std::exp(eta[3]));
}

double OutcomeLaw::mean(int a, double m) const { return zoib_mean(params(a, m)); }

UnitLaws unit_laws(const FittedModels& models, std::span<const double> x) {
  const auto& spec = models.spec;
  UnitLaws law{{MediatorLaw{ZoibParams::unchecked(0, 0, 0.5, 1), 0.0},
                MediatorLaw{ZoibParams::unchecked(0, 0, 0.5, 1), 0.0}},
               {}};
  const auto mcol = static_cast<Eigen::Index>(mediator_column(spec, x.size()));
  for (int a : {0, 1}) {
    const ZoibParams med = predict_mediator(spec, models.coefficients, x, a);
    law.mediator[static_cast<std::size_t>(a)] =
        MediatorLaw{med, special::log_beta(med.shape_a(), med.shape_b())};

    const Eigen::VectorXd row = build_design(spec, x, a, 0.0);
    const auto& bank = models.coefficients.outcome.for_arm(a);
    for (std::size_t c = 0; c < 4; ++c) {
      const auto& beta = bank.component(c);
      if (beta.size() != row.size())
        throw DomainError("outcome coefficients do not match the design width");
      law.outcome.base[static_cast<std::size_t>(a)][c] = row.dot(beta);
      law.outcome.slope[static_cast<std::size_t>(a)][c] = beta[mcol];
    }
  }
  return law;
}

namespace {

struct UnitAccumulator {
  std::array<std::array<double, 2>, 2> y{};
  std::array<double, 2> m{};
  std::array<double, 5> d_sum{};
  std::array<double, 5> d_sq{};
  std::size_t clamped = 0;
  std::size_t range_violations = 0;
};

}  // namespace

MeanRun simulate_means(const FittedModels& models, const Dataset& dataset,
                       const WeightVector& weights, int K,
                       std::uint64_t cell_seed, unsigned threads,
                       const MeanPolicy& policy) {
  const std::size_t n = dataset.size();
  if (weights.size() != n)
    throw DomainError("weight vector length does not match the dataset");
  if (K < 1) throw DomainError("K must be at least 1");

  std::vector<UnitAccumulator> acc(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const UnitLaws law = unit_laws(models, dataset.covariate_row(i));
    RandomStream rng(derive_seed(cell_seed, stream_tag::kCells, i));
    UnitAccumulator& u = acc[i];
    for (int k = 0; k < K; ++k) {
      double u0, u1;
      if (policy.mediators == MeanPolicy::Mediators::kShared) {
        u0 = u1 = rng.uniform();
      } else {
        std::tie(u0, u1) = copula_uniforms(policy.rho, rng);
      }
      const std::array<double, 2> m = {law.mediator[0].draw(u0),
                                       law.mediator[1].draw(u1)};
      std::array<std::array<double, 2>, 2> y{};
      for (int a : {0, 1}) {
        for (int ap : {0, 1}) {
          const auto sa = static_cast<std::size_t>(a);
          const auto sap = static_cast<std::size_t>(ap);
          const double e = law.outcome.mean(a, m[sap]);
          double v = e;
          switch (policy.outcome) {
            case MeanPolicy::Outcome::kMean:
              break;
            case MeanPolicy::Outcome::kLinearShift:
              v = e + policy.lambda * (m[sa] - m[sap]);
              if (v < 0.0 || v > 1.0) ++u.range_violations;
              break;
            case MeanPolicy::Outcome::kLogitShift: {
              bool clamped = false;
              v = shift_logit_mean(e, policy.lambda * (m[sa] - m[sap]), &clamped);
              if (clamped) ++u.clamped;
              break;
            }
          }
          y[sa][sap] = v;
          u.y[sa][sap] += v;
        }
      }
      u.m[0] += m[0];
      u.m[1] += m[1];
      const std::array<double, 5> d = {y[0][1] - y[0][0], y[1][1] - y[1][0],
                                       y[1][0] - y[0][0], y[1][1] - y[0][1],
                                       y[1][1] - y[0][0]};
      for (std::size_t e = 0; e < 5; ++e) {
        u.d_sum[e] += d[e];
        u.d_sq[e] += d[e] * d[e];
      }
    }
  });

  MeanRun run;
  const double kd = static_cast<double>(K);
  std::array<double, 5> var_sum{};
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    const auto& u = acc[i];
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t ap = 0; ap < 2; ++ap)
        run.potential[a][ap] += w * (u.y[a][ap] / kd);
    run.mediator_mean[0] += w * (u.m[0] / kd);
    run.mediator_mean[1] += w * (u.m[1] / kd);
    run.clamped += u.clamped;
    run.range_violations += u.range_violations;
    if (K > 1) {
      for (std::size_t e = 0; e < 5; ++e) {
        const double mean = u.d_sum[e] / kd;
        const double var = std::max(0.0, (u.d_sq[e] - kd * mean * mean) / (kd - 1.0));
        var_sum[e] += w * w * var / kd;
      }
    }
  }
  for (std::size_t e = 0; e < 5; ++e)
    run.mc_se[e] = K > 1 ? std::sqrt(var_sum[e])
                         : std::numeric_limits<double>::quiet_NaN();
  return run;
}

}  // namespace zoibmed::detail
