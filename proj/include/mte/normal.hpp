#pragma once

namespace mte {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

// Standard normal density.
double norm_pdf(double x) noexcept;

// Standard normal CDF via erfc; relative error is at the level of the libm
// erfc implementation in both tails.
double norm_cdf(double x) noexcept;

// log Phi(x), accurate for large negative x where Phi underflows.
double norm_logcdf(double x) noexcept;

// Inverse standard normal CDF. p must lie in (0, 1); the endpoints map to
// -inf / +inf.
double norm_quantile(double p);

}  // namespace mte
