#pragma once

// Boost.Math wrappers with double kept in double precision (no promotion to
// long double), which is what the fitting and simulation loops want.

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace zoibmed::special {

using fast_policy = boost::math::policies::policy<
    boost::math::policies::promote_double<false>,
    boost::math::policies::promote_float<false>>;

inline double lgamma(double x) { return boost::math::lgamma(x, fast_policy()); }
inline double digamma(double x) {
  return boost::math::digamma(x, fast_policy());
}
inline double trigamma(double x) {
  return boost::math::trigamma(x, fast_policy());
}
inline double ibeta(double a, double b, double x) {
  return boost::math::ibeta(a, b, x, fast_policy());
}
inline double log_beta(double a, double b) {
  return lgamma(a) + lgamma(b) - lgamma(a + b);
}

}  // namespace zoibmed::special
