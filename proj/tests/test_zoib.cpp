#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "zoibmed/error.hpp"
#include "zoibmed/zoib.hpp"

using namespace zoibmed;

TEST_SUITE("zoib") {

TEST_CASE("mean formula") {
  CHECK(zoib_mean(ZoibParams(0, 0, 0.7, 5)) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(zoib_mean(ZoibParams::unchecked(1, 0.3, 0.5, 2)) == 0.0);
  // 0.9 * 0.2 + 0.9 * 0.8 * 0.5
  CHECK(zoib_mean(ZoibParams(0.1, 0.2, 0.5, 3)) == doctest::Approx(0.54).epsilon(1e-14));
}

TEST_CASE("density and point masses") {
  CHECK(zoib_density(0.0, ZoibParams(0.3, 0.2, 0.5, 2)) == doctest::Approx(0.3));
  CHECK(zoib_density(0.5, ZoibParams(0, 0, 0.5, 2)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(zoib_density(1.0, ZoibParams(0.1, 0.25, 0.5, 2)) == doctest::Approx(0.225));
  CHECK_THROWS_AS(zoib_density(1.2, ZoibParams(0.1, 0.25, 0.5, 2)), DomainError);
  CHECK_THROWS_AS(zoib_density(-0.1, ZoibParams(0.1, 0.25, 0.5, 2)), DomainError);
}

TEST_CASE("cdf") {
  const ZoibParams p(0.1, 0.25, 0.4, 3);
  CHECK(zoib_cdf(0.0, p) == doctest::Approx(0.1));
  CHECK(zoib_cdf(std::nextafter(1.0, 0.0), p) == doctest::Approx(1.0 - 0.9 * 0.25));
  CHECK(zoib_cdf(1.0, p) == 1.0);
  CHECK(zoib_cdf(0.5, ZoibParams(0, 0, 0.5, 2)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(zoib_cdf(1.5, p), DomainError);
}

TEST_CASE("quantile branches") {
  CHECK(zoib_quantile(0.05, ZoibParams(0.1, 0.3, 0.5, 2)) == 0.0);
  CHECK(zoib_quantile(0.95, ZoibParams(0.1, 0.5, 0.5, 2)) == 1.0);
  CHECK(zoib_quantile(0.3, ZoibParams(0, 0, 0.5, 2)) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK_THROWS_AS(zoib_quantile(0.0, ZoibParams(0.1, 0.3, 0.5, 2)), DomainError);
  CHECK_THROWS_AS(zoib_quantile(1.0, ZoibParams(0.1, 0.3, 0.5, 2)), DomainError);
  // u exactly at F(0) = alpha: the infimum is still 0.
  CHECK(zoib_quantile(0.25, ZoibParams(0.25, 0.0, 0.5, 2)) == 0.0);
  CHECK(zoib_quantile(std::nextafter(0.25, 1.0), ZoibParams(0.25, 0.0, 0.5, 2)) > 0.0);
}

TEST_CASE("beta quantile against an independent bisection") {
  CHECK(beta_quantile(0.5, 1, 1) == doctest::Approx(0.5).epsilon(1e-10));
  const double root = oracle::bisect(0.0, 1.0, [](double t) { return 3 * t * t - 2 * t * t * t - 0.25; });
  CHECK(root == doctest::Approx(0.3264).epsilon(1e-4));
  CHECK(beta_quantile(0.25, 2, 2) == doctest::Approx(root).epsilon(1e-9));
  for (double q : {0.01, 0.2, 0.37, 0.5, 0.8}) {
    for (double a : {0.3, 1.0, 2.5, 40.0})
      CHECK(beta_quantile(q, a, a) == doctest::Approx(1.0 - beta_quantile(1.0 - q, a, a)).epsilon(1e-8));
  }
}

TEST_CASE("beta quantile meets the cdf tolerance over a wide shape range") {
  RandomStream rng(11);
  for (int t = 0; t < 400; ++t) {
    const double a = std::exp(-3.0 + 8.0 * rng.uniform());
    const double b = std::exp(-3.0 + 8.0 * rng.uniform());
    const double u = rng.uniform();
    const double x = beta_quantile(u, a, b);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    const double err = std::abs(beta_cdf(x, a, b) - u);
    if (err >= detail::kBetaQuantileTol) {
      // Only allowed when the cdf jumps by more than the tolerance between
      // adjacent doubles.
      const double lo = beta_cdf(std::nextafter(x, 0.0), a, b);
      const double hi = beta_cdf(std::nextafter(x, 1.0), a, b);
      CHECK((lo <= u + 1e-10 && u <= hi + 1e-10));
    }
  }
}

TEST_CASE("loglik decomposes into Bernoulli and beta parts") {
  const ZoibParams p(0.3, 0.2, 0.6, 4);
  CHECK(zoib_loglik(0.0, p) == doctest::Approx(std::log(0.3)));
  CHECK(zoib_loglik(0.0, ZoibParams(0, 0.2, 0.6, 4)) == -std::numeric_limits<double>::infinity());
  CHECK(zoib_loglik(0.5, ZoibParams(0, 0, 0.5, 2)) == doctest::Approx(0.0));
  const double z = 0.37;
  const double expect = std::log(0.7) + std::log(0.8) + std::log(oracle::beta_pdf(z, 2.4, 1.6));
  CHECK(zoib_loglik(z, p) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(zoib_loglik(1.0, p) == doctest::Approx(std::log(0.7 * 0.2)));
}

TEST_CASE("normalization and mean by quadrature") {
  RandomStream rng(3);
  for (int t = 0; t < 20; ++t) {
    const ZoibParams p(0.4 * rng.uniform(), 0.4 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                       0.3 + 30 * rng.uniform());
    const double mass = oracle::beta_expect(p.shape_a(), p.shape_b(), [](double) { return 1.0; });
    const double m1 = oracle::beta_expect(p.shape_a(), p.shape_b(), [](double z) { return z; });
    CHECK(std::abs(p.alpha() + p.mass_one() + p.mass_interior() * mass - 1.0) < 1e-8);
    CHECK(std::abs(p.mass_one() + p.mass_interior() * m1 - zoib_mean(p)) < 1e-8);
  }
}

TEST_CASE("sampler reproduces mean and boundary frequencies") {
  RandomStream rng(5);
  const ZoibParams p(0.1, 0.2, 0.5, 3);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = zoib_sample(rng, p);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.54) < 0.002);
  CHECK(std::abs(mean - 0.54) < 4 * se);

  const ZoibParams q(0.1, 0.25, 0.5, 3);
  int ones = 0, zeros = 0;
  for (int i = 0; i < n; ++i) {
    const double z = zoib_sample(rng, q);
    ones += z == 1.0;
    zeros += z == 0.0;
  }
  CHECK(std::abs(ones / double(n) - 0.225) < 0.002);
  CHECK(std::abs(ones / double(n) - 0.225) < 4 * std::sqrt(0.225 * 0.775 / n));
  CHECK(std::abs(zeros / double(n) - 0.1) < 4 * std::sqrt(0.09 / n));

  RandomStream r2(6);
  CHECK(zoib_sample(r2, ZoibParams::unchecked(1, 0, 0.5, 1)) == 0.0);
}

TEST_CASE("constructor rejects invalid parameters") {
  CHECK_THROWS_AS(ZoibParams(1.0, 0.1, 0.5, 1), DomainError);
  CHECK_THROWS_AS(ZoibParams(0.1, 1.0, 0.5, 1), DomainError);
  CHECK_THROWS_AS(ZoibParams(0.1, 0.1, 0.0, 1), DomainError);
  CHECK_THROWS_AS(ZoibParams(0.1, 0.1, 0.5, 0), DomainError);
  CHECK_THROWS_AS(ZoibParams(0.1, 0.1, 0.5, std::numeric_limits<double>::infinity()), DomainError);
  CHECK_NOTHROW(ZoibParams(0.0, 0.0, 0.5, 1));
}

TEST_CASE("quantile is the generalized inverse") {
  RandomStream rng(9);
  for (int t = 0; t < 20; ++t) {
    const ZoibParams p(0.3 * rng.uniform(), 0.3 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                       0.5 + 20 * rng.uniform());
    for (int g = 1; g < 10000; ++g) {
      const double u = g / 10000.0;
      const double z = zoib_quantile(u, p);
      REQUIRE(zoib_cdf(z, p) >= u - 1e-10);
      if (z > 0.0) {
        const double below = z == 1.0 ? std::nextafter(1.0, 0.0) : std::max(0.0, z - 1e-7);
        REQUIRE(zoib_cdf(below, p) < u + 1e-10);
      }
    }
  }
}

TEST_CASE("quantile rounds up to 1 when the interior root is not representable") {
  // Second shape 0.036: the beta quantile of 1 - 5e-17 lies within 1e-400 of 1.
  const ZoibParams p(0.2, 0.2, 0.97, 1.2);
  CHECK(zoib_quantile(0.84, p) == 1.0);
  CHECK(zoib_cdf(zoib_quantile(0.84, p), p) >= 0.84);
  const double z = zoib_quantile(0.5, p);
  CHECK(z < 1.0);
  CHECK(zoib_cdf(z, p) >= 0.5 - 1e-10);
}

TEST_CASE("random streams") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 3, 0));
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  RandomStream c(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = c.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
  RandomStream d(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[d.index(7)];
  for (int k : counts) CHECK(std::abs(k - 10000) < 500);
}

}  // TEST_SUITE
