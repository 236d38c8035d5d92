#pragma once

// Invariant suite behind the `check` command.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "zoibmed/fit.hpp"

namespace zoibmed {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the distribution, gradient, likelihood, estimator, sensitivity,
/// determinism and table round-trip checks on `dataset` (or on a generated
/// dataset when null). `quick` shrinks the Monte Carlo sizes.
std::vector<CheckResult> run_selfcheck(const Dataset* dataset, const ModelSpec& spec,
                                       std::uint64_t seed, bool quick);

/// Normwise relative error ||g_fd - g||_inf / ||g||_inf of an analytic
/// gradient against central differences with step h.
double gradient_fd_error(const std::function<double(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& at, const Eigen::VectorXd& gradient,
                         double h = 1e-6);

/// Distance in units in the last place, at the scale of `scale`.
double ulps_apart(double a, double b, double scale);

}  // namespace zoibmed
