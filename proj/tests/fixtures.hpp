#pragma once

#include <cstdint>

#include "zoibmed/fit.hpp"
#include "zoibmed/model.hpp"
#include "zoibmed/rng.hpp"
#include "zoibmed/simharness.hpp"

namespace fixture {

inline zoibmed::RowMatrix normal_pool(std::size_t n, std::size_t p, std::uint64_t seed) {
  zoibmed::RandomStream rng(seed);
  zoibmed::RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal_pair().first;
  return x;
}

// Homogeneous coefficients with p covariates. xi_m is the treatment effect on
// every mediator component, xi_y on every outcome component and beta_m the
// mediator slope in the outcome model.
inline zoibmed::CoefficientSet simple_coefficients(std::size_t p, double xi_m,
                                                   double xi_y, double beta_m) {
  using zoibmed::LinkCoefficients;
  zoibmed::CoefficientSet c;
  auto& m = c.mediator.banks[0];
  auto& y = c.outcome.banks[0];
  m = LinkCoefficients::zeros(p + 2);
  y = LinkCoefficients::zeros(p + 3);
  const double m_icpt[4] = {-1.6, -1.2, 0.1, 1.4};
  const double y_icpt[4] = {-1.8, -1.4, -0.2, 1.6};
  for (std::size_t c_ = 0; c_ < 4; ++c_) {
    m.component(c_)[0] = m_icpt[c_];
    y.component(c_)[0] = y_icpt[c_];
    for (std::size_t j = 0; j < p; ++j) {
      const auto k = static_cast<Eigen::Index>(j + 1);
      m.component(c_)[k] = 0.15 * (j % 2 == 0 ? 1.0 : -1.0);
      y.component(c_)[k] = 0.1 * (j % 3 == 0 ? -1.0 : 1.0);
    }
    m.component(c_)[static_cast<Eigen::Index>(p + 1)] = xi_m;
    y.component(c_)[static_cast<Eigen::Index>(p + 1)] = xi_y;
    y.component(c_)[static_cast<Eigen::Index>(p + 2)] = beta_m;
  }
  return c;
}

inline zoibmed::ScenarioSpec scenario(const zoibmed::CoefficientSet& c, std::size_t n) {
  zoibmed::ScenarioSpec s;
  s.true_coefficients = c;
  s.N = n;
  return s;
}

inline zoibmed::Dataset simulate(const zoibmed::CoefficientSet& c, std::size_t n,
                                 std::size_t p, std::uint64_t seed) {
  const auto pool = normal_pool(std::max<std::size_t>(n, 50), p, seed ^ 0xABCDu);
  zoibmed::RandomStream rng(seed);
  return zoibmed::generate_dataset(scenario(c, n), pool, rng);
}

inline zoibmed::FittedModels as_models(const zoibmed::CoefficientSet& c, std::size_t p) {
  zoibmed::FittedModels fm;
  fm.num_covariates = p;
  fm.coefficients = c;
  fm.converged = true;
  return fm;
}

}  // namespace fixture
