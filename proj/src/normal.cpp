#include "mte/normal.hpp"

#include "mte/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>

namespace mte {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880168872421;
}

double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_logcdf(double x) noexcept {
    if (x > -30.0) return std::log(norm_cdf(x));
    // Asymptotic Mills-ratio expansion; five terms are exact to double
    // precision for x <= -30.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) + 105.0 / (x2 * x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log(series);
}

double norm_quantile(double p) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidArgument, "norm_quantile: p outside [0,1]");
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace mte
