#include "zoibmed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "zoibmed/error.hpp"

namespace zoibmed {

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("percentile level must be in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IntervalSummary summarize_replicates(double estimate,
                                     std::span<const double> replicates,
                                     double level) {
  if (replicates.size() < 2) throw DomainError("need at least two replicates");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must be in (0, 1)");
  std::vector<double> sorted(replicates.begin(), replicates.end());
  std::sort(sorted.begin(), sorted.end());

  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= static_cast<double>(sorted.size());
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);

  IntervalSummary s;
  s.estimate = estimate;
  s.sd = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
  const double tail = 0.5 * (1.0 - level);
  s.lower = percentile_sorted(sorted, tail);
  s.upper = percentile_sorted(sorted, 1.0 - tail);
  if (s.sd > 0.0) {
    s.z = estimate / s.sd;
    s.p_value = std::erfc(std::abs(s.z) / std::sqrt(2.0));
  } else {
    s.z = estimate == 0.0 ? 0.0 : std::copysign(INFINITY, estimate);
    s.p_value = estimate == 0.0 ? 1.0 : 0.0;
  }
  // Normal quantile for the requested level via the inverse complementary
  // error function.
  const double zq = std::sqrt(2.0) * boost::math::erfc_inv(2.0 * tail);
  s.normal_lower = estimate - zq * s.sd;
  s.normal_upper = estimate + zq * s.sd;
  return s;
}

WeightVector point_weights(std::size_t n) { return WeightVector::uniform(n); }

std::uint64_t point_cell_seed(std::uint64_t seed) {
  return derive_seed(seed, stream_tag::kPoint);
}

InferenceResult run_inference(const Dataset& dataset,
                              const InferenceOptions& options,
                              const Evaluator& evaluate) {
  if (options.replicates < 2) throw DomainError("need at least two bootstrap replicates");
  InferenceResult out;
  out.fitted = fit_all(dataset, options.spec, options.fit);
  out.point = evaluate(out.fitted, dataset, point_weights(dataset.size()),
                       point_cell_seed(options.seed));

  BootstrapOptions boot;
  boot.replicates = options.replicates;
  boot.seed = options.seed;
  boot.stratify_by_arm = options.stratify_by_arm;
  boot.threads = options.threads;
  const BootstrapEnsemble ens = bootstrap_fit(dataset, options.spec, boot, options.fit);

  std::vector<std::vector<double>> values(ens.replicates.size());
  std::vector<std::string> errors(ens.replicates.size());
  parallel_for(ens.replicates.size(), options.threads, [&](std::size_t b) {
    const auto& rep = ens.replicates[b];
    if (!rep.fit) {
      errors[b] = rep.failure;
      return;
    }
    try {
      const std::uint64_t s = derive_seed(options.seed, stream_tag::kReplicate, b);
      RandomStream rng(derive_seed(s, stream_tag::kWeights));
      const WeightVector w = options.dirichlet_weights
                                 ? sample_dirichlet_weights(dataset.size(), rng)
                                 : WeightVector::uniform(dataset.size());
      values[b] = evaluate(*rep.fit, dataset, w, derive_seed(s, stream_tag::kCells));
    } catch (const std::exception& e) {
      errors[b] = e.what();
    }
  });

  for (std::size_t b = 0; b < values.size(); ++b) {
    if (!errors[b].empty() || values[b].size() != out.point.size()) {
      std::ostringstream os;
      os << "replicate " << b << ": "
         << (errors[b].empty() ? std::string("evaluator size mismatch") : errors[b]);
      out.failures.push_back(os.str());
      continue;
    }
    out.replicates.push_back(std::move(values[b]));
    out.replicate_index.push_back(b);
  }
  if (static_cast<double>(out.failures.size()) >
      boot.max_failure_fraction * static_cast<double>(options.replicates)) {
    std::ostringstream os;
    os << out.failures.size() << " of " << options.replicates
       << " bootstrap replicates failed; first: " << out.failures.front();
    throw std::runtime_error(os.str());
  }

  std::vector<double> column(out.replicates.size());
  for (std::size_t j = 0; j < out.point.size(); ++j) {
    for (std::size_t b = 0; b < out.replicates.size(); ++b)
      column[b] = out.replicates[b][j];
    out.summary.push_back(summarize_replicates(out.point[j], column, options.level));
  }
  return out;
}

Evaluator average_effects_evaluator(int K) {
  return [K](const FittedModels& models, const Dataset& dataset,
             const WeightVector& weights, std::uint64_t cell_seed) {
    const auto v =
        estimate_average_effects(models, dataset, weights, K, cell_seed).values();
    return std::vector<double>(v.begin(), v.end());
  };
}

}  // namespace zoibmed
