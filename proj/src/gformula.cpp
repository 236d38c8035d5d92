#include "zoibmed/gformula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "engine.hpp"
#include "zoibmed/error.hpp"

namespace zoibmed {

EffectEstimates EffectEstimates::from_potential(
    const std::array<std::array<double, 2>, 2>& s) {
  EffectEstimates e;
  e.potential = s;
  e.delta0 = s[0][1] - s[0][0];
  e.delta1 = s[1][1] - s[1][0];
  e.zeta0 = s[1][0] - s[0][0];
  e.zeta1 = s[1][1] - s[0][1];
  e.tau = s[1][1] - s[0][0];
  e.mc_se.fill(std::numeric_limits<double>::quiet_NaN());
  return e;
}

WeightVector WeightVector::uniform(std::size_t n) {
  if (n == 0) throw DomainError("weight vector must be nonempty");
  WeightVector w;
  w.omega_.assign(n, 1.0 / static_cast<double>(n));
  return w;
}

WeightVector::WeightVector(std::vector<double> omega) : omega_(std::move(omega)) {
  if (omega_.empty()) throw DomainError("weight vector must be nonempty");
  double total = 0.0;
  for (double w : omega_) {
    if (!std::isfinite(w) || w < 0.0)
      throw DomainError("weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("weights must sum to one");
}

WeightVector sample_dirichlet_weights(std::size_t n, RandomStream& rng) {
  if (n == 0) throw DomainError("weight vector must be nonempty");
  std::vector<double> g(n);
  for (auto& v : g) v = rng.exponential();
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  for (auto& v : g) v /= total;
  // Renormalize once more so the sum check holds to rounding.
  const double again = std::accumulate(g.begin(), g.end(), 0.0);
  for (auto& v : g) v /= again;
  return WeightVector(std::move(g));
}

WeightVector config_weights(std::size_t n, const MonteCarloConfig& cfg) {
  if (!cfg.use_dirichlet_weights) return WeightVector::uniform(n);
  RandomStream rng(derive_seed(cfg.master_seed, stream_tag::kWeights));
  return sample_dirichlet_weights(n, rng);
}

namespace {

std::uint64_t cell_seed_of(const MonteCarloConfig& cfg) {
  return derive_seed(cfg.master_seed, stream_tag::kCells);
}

void check_k(int K) {
  if (K < 1) throw DomainError("K must be at least 1");
}

}  // namespace

EffectEstimates estimate_average_effects(const FittedModels& models,
                                         const Dataset& dataset,
                                         const WeightVector& weights, int K,
                                         std::uint64_t cell_seed,
                                         unsigned threads) {
  check_k(K);
  const detail::MeanRun run =
      detail::simulate_means(models, dataset, weights, K, cell_seed, threads, {});
  EffectEstimates e = EffectEstimates::from_potential(run.potential);
  e.flavor = EffectFlavor::kAverage;
  e.K = K;
  e.seed = cell_seed;
  e.mc_se = run.mc_se;
  return e;
}

EffectEstimates estimate_average_effects(const FittedModels& models,
                                         const Dataset& dataset,
                                         const MonteCarloConfig& cfg) {
  EffectEstimates e =
      estimate_average_effects(models, dataset, config_weights(dataset.size(), cfg),
                               cfg.K, cell_seed_of(cfg), cfg.threads);
  e.seed = cfg.master_seed;
  return e;
}

double empirical_quantile(std::vector<double>& sample, double q) {
  if (sample.empty()) throw DomainError("empirical quantile of an empty sample");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must be in (0, 1)");
  const double n = static_cast<double>(sample.size());
  auto k = static_cast<std::size_t>(std::ceil(n * q));
  if (k < 1) k = 1;
  if (k > sample.size()) k = sample.size();
  auto it = sample.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(sample.begin(), it, sample.end());
  return *it;
}

EffectEstimates estimate_quantile_effects(const FittedModels& models,
                                          const Dataset& dataset, double q,
                                          const WeightVector& weights, int K,
                                          std::uint64_t cell_seed,
                                          unsigned threads, Coupling coupling) {
  check_k(K);
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must be in (0, 1)");
  const std::size_t n = dataset.size();
  if (weights.size() != n)
    throw DomainError("weight vector length does not match the dataset");

  std::vector<double> cumulative(n);
  std::partial_sum(weights.values().begin(), weights.values().end(),
                   cumulative.begin());
  const double total = cumulative.back();

  const std::size_t cells = n * static_cast<std::size_t>(K);
  std::array<std::array<std::vector<double>, 2>, 2> pooled;
  for (auto& row : pooled)
    for (auto& v : row) v.assign(cells, 0.0);

  parallel_for(n, threads, [&](std::size_t i) {
    RandomStream rng(derive_seed(cell_seed, stream_tag::kCells, i));
    for (int k = 0; k < K; ++k) {
      const double pick = rng.uniform() * total;
      auto pos = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
          cumulative.begin());
      if (pos >= n) pos = n - 1;
      while (weights[pos] == 0.0 && pos > 0) --pos;
      const detail::UnitLaws law = detail::unit_laws(models, dataset.covariate_row(pos));

      std::array<double, 2> m{};
      std::array<std::array<double, 2>, 2> v{};
      if (coupling == Coupling::kComonotone) {
        const double u = rng.uniform();
        m = {law.mediator[0].draw(u), law.mediator[1].draw(u)};
        const double w = rng.uniform();
        for (auto& row : v) row = {w, w};
      } else {
        const double u0 = rng.uniform();
        const double u1 = rng.uniform();
        m = {law.mediator[0].draw(u0), law.mediator[1].draw(u1)};
        for (auto& row : v)
          for (auto& x : row) x = rng.uniform();
      }
      const std::size_t slot = i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k);
      for (int a : {0, 1})
        for (int ap : {0, 1}) {
          const auto sa = static_cast<std::size_t>(a);
          const auto sap = static_cast<std::size_t>(ap);
          pooled[sa][sap][slot] = zoib_quantile(v[sa][sap], law.outcome.params(a, m[sap]));
        }
    }
  });

  std::array<std::array<double, 2>, 2> s{};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t ap = 0; ap < 2; ++ap) s[a][ap] = empirical_quantile(pooled[a][ap], q);

  EffectEstimates e = EffectEstimates::from_potential(s);
  e.flavor = EffectFlavor::kQuantile;
  e.q = q;
  e.K = K;
  e.seed = cell_seed;
  return e;
}

EffectEstimates estimate_quantile_effects(const FittedModels& models,
                                          const Dataset& dataset, double q,
                                          const MonteCarloConfig& cfg) {
  EffectEstimates e = estimate_quantile_effects(
      models, dataset, q, config_weights(dataset.size(), cfg), cfg.K,
      cell_seed_of(cfg), cfg.threads, cfg.coupling);
  e.seed = cfg.master_seed;
  return e;
}

std::array<double, 5> mc_error_estimate(const FittedModels& models,
                                        const Dataset& dataset,
                                        const MonteCarloConfig& cfg,
                                        std::size_t R, std::optional<double> q) {
  if (R < 2) throw DomainError("need at least two reruns");
  const WeightVector weights = config_weights(dataset.size(), cfg);
  std::vector<std::array<double, 5>> runs(R);
  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, stream_tag::kRerun, r);
    const EffectEstimates e =
        q ? estimate_quantile_effects(models, dataset, *q, weights, cfg.K, seed,
                                      cfg.threads, cfg.coupling)
          : estimate_average_effects(models, dataset, weights, cfg.K, seed, cfg.threads);
    runs[r] = e.values();
  }
  std::array<double, 5> sd{};
  const double rd = static_cast<double>(R);
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (const auto& v : runs) mean += v[j];
    mean /= rd;
    double ss = 0.0;
    for (const auto& v : runs) ss += (v[j] - mean) * (v[j] - mean);
    sd[j] = std::sqrt(ss / (rd - 1.0));
  }
  return sd;
}

}  // namespace zoibmed
