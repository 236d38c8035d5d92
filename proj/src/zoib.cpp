#include "zoibmed/zoib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "special.hpp"
#include "zoibmed/error.hpp"

namespace zoibmed {

namespace {

void require_unit(double z, const char* fn) {
  if (!(z >= 0.0 && z <= 1.0)) {
    std::ostringstream os;
    os << fn << ": z = " << z << " is outside [0, 1]";
    throw DomainError(os.str());
  }
}

// Starting point for the inverse incomplete beta (Numerical Recipes, 3rd ed.,
// 6.4): a normal-approximation guess when both shapes are >= 1, and the
// power-law tails otherwise.
double initial_guess(double u, double a, double b) {
  if (a >= 1.0 && b >= 1.0) {
    const double pp = u < 0.5 ? u : 1.0 - u;
    const double t = std::sqrt(-2.0 * std::log(pp));
    double x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
    if (u < 0.5) x = -x;
    const double al = (x * x - 3.0) / 6.0;
    const double h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
    const double w = x * std::sqrt(al + h) / h -
                     (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) *
                         (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
    return a / (a + b * std::exp(2.0 * w));
  }
  const double lna = std::log(a / (a + b));
  const double lnb = std::log(b / (a + b));
  const double t = std::exp(a * lna) / a;
  const double v = std::exp(b * lnb) / b;
  const double w = t + v;
  if (u < t / w) return std::pow(a * w * u, 1.0 / a);
  return 1.0 - std::pow(b * w * (1.0 - u), 1.0 / b);
}

}  // namespace

ZoibParams::ZoibParams(double alpha, double gamma, double mu, double phi)
    : alpha_(alpha), gamma_(gamma), mu_(mu), phi_(phi) {
  std::ostringstream os;
  if (!(alpha >= 0.0 && alpha < 1.0)) os << "alpha = " << alpha << " not in [0, 1); ";
  if (!(gamma >= 0.0 && gamma < 1.0)) os << "gamma = " << gamma << " not in [0, 1); ";
  if (!(mu > 0.0 && mu < 1.0)) os << "mu = " << mu << " not in (0, 1); ";
  if (!(phi > 0.0 && std::isfinite(phi))) os << "phi = " << phi << " not positive; ";
  if (os.tellp() == 0 && !(shape_a() > 0.0 && shape_b() > 0.0))
    os << "beta shapes underflow to zero; ";
  if (os.tellp() != 0) throw DomainError("ZoibParams: " + os.str());
}

ZoibParams ZoibParams::unchecked(double alpha, double gamma, double mu,
                                 double phi) noexcept {
  ZoibParams p;
  p.alpha_ = alpha;
  p.gamma_ = gamma;
  p.mu_ = mu;
  p.phi_ = phi;
  return p;
}

double zoib_mean(const ZoibParams& p) noexcept {
  const double one_minus_alpha = 1.0 - p.alpha();
  return one_minus_alpha * p.gamma() +
         one_minus_alpha * (1.0 - p.gamma()) * p.mu();
}

double zoib_density(double z, const ZoibParams& p) {
  require_unit(z, "zoib_density");
  if (z == 0.0) return p.alpha();
  if (z == 1.0) return p.mass_one();
  return p.mass_interior() * std::exp(beta_log_pdf(z, p.shape_a(), p.shape_b()));
}

double zoib_cdf(double z, const ZoibParams& p) {
  require_unit(z, "zoib_cdf");
  if (z == 1.0) return 1.0;
  if (z == 0.0) return p.alpha();
  return p.alpha() + p.mass_interior() * beta_cdf(z, p.shape_a(), p.shape_b());
}

double zoib_quantile(double u, const ZoibParams& p) {
  return zoib_quantile(u, p, std::numeric_limits<double>::quiet_NaN());
}

double zoib_quantile(double u, const ZoibParams& p, double log_beta_ab) {
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream os;
    os << "zoib_quantile: u = " << u << " is outside (0, 1)";
    throw DomainError(os.str());
  }
  if (u < p.alpha()) return 0.0;
  if (u > 1.0 - p.mass_one()) return 1.0;
  const double interior = p.mass_interior();
  if (!(interior > 0.0)) return 0.0;  // u sits exactly on F(0) = alpha
  const double v = (u - p.alpha()) / interior;
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  // beta_quantile returns 1 when the root lies above the largest double below 1.
  return std::isnan(log_beta_ab) ? beta_quantile(v, p.shape_a(), p.shape_b())
                                 : beta_quantile(v, p.shape_a(), p.shape_b(), log_beta_ab);
}

double zoib_sample(RandomStream& rng, const ZoibParams& p) {
  return zoib_quantile(rng.uniform(), p);
}

double zoib_loglik(double z, const ZoibParams& p) {
  require_unit(z, "zoib_loglik");
  if (z == 0.0) return std::log(p.alpha());
  const double log_nonzero = std::log1p(-p.alpha());
  if (z == 1.0) return log_nonzero + std::log(p.gamma());
  const double zc =
      std::clamp(z, detail::kInteriorEps, 1.0 - detail::kInteriorEps);
  return log_nonzero + std::log1p(-p.gamma()) +
         beta_log_pdf(zc, p.shape_a(), p.shape_b());
}

double beta_cdf(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("beta_cdf: shapes must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("beta_cdf: x outside [0, 1]");
  return special::ibeta(a, b, x);
}

double beta_log_pdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         special::log_beta(a, b);
}

double beta_quantile(double u, double a, double b) {
  if (!(a > 0.0 && b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("beta_quantile: shapes must be positive and finite");
  return beta_quantile(u, a, b, special::log_beta(a, b));
}

double beta_quantile(double u, double a, double b, double log_beta_ab) {
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream os;
    os << "beta_quantile: u = " << u << " is outside (0, 1)";
    throw DomainError(os.str());
  }
  constexpr double kTiny = std::numeric_limits<double>::min();
  constexpr double kTop = 1.0 - 0x1.0p-53;

  double lo = 0.0;
  double hi = 1.0;
  double x = std::clamp(initial_guess(u, a, b), kTiny, kTop);
  if (!std::isfinite(x)) x = 0.5;

  for (int iter = 0; iter < detail::kBetaQuantileMaxIter; ++iter) {
    const double f = special::ibeta(a, b, x) - u;
    if (std::abs(f) < detail::kBetaQuantileTol) return x;
    if (f < 0.0)
      lo = x;
    else
      hi = x;
    // Adjacent doubles straddle the root: the generalized inverse is the upper one,
    // which is 1 itself when no double below 1 reaches u.
    if (std::nextafter(lo, 1.0) >= hi) return hi;

    const double log_pdf =
        (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_ab;
    // Halley correction: F'' / F' = (a - 1) / x - (b - 1) / (1 - x).
    const double newton = f / std::exp(log_pdf);
    const double curve = (a - 1.0) / x - (b - 1.0) / (1.0 - x);
    const double denom = 1.0 - 0.5 * newton * curve;
    double next = x - (denom > 0.5 && denom < 2.0 ? newton / denom : newton);
    if (!(next > lo && next < hi) || next == x) next = lo + 0.5 * (hi - lo);
    x = next;
  }
  std::ostringstream os;
  os << "beta_quantile(u = " << u << ", a = " << a << ", b = " << b
     << ") did not converge; last bracket [" << lo << ", " << hi << "]";
  throw ConvergenceError(os.str(), lo, hi);
}

}  // namespace zoibmed
