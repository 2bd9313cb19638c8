#include "mte/inference.hpp"

#include "mte/error.hpp"
#include "mte/normal.hpp"
#include "mte/plm.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mte {

namespace {

constexpr double kDensityFloor = 1e-6;
const double kTwoPi = boost::math::constants::two_pi<double>();

// theta0 at arbitrary points: linear interpolation inside the grid, the
// local quadratic at the end point beyond it.
double interpolate(const LocPolyFit& lp, double p) {
    const Eigen::VectorXd& grid = lp.grid;
    const Eigen::Index G = grid.size();
    const auto taylor = [&](Eigen::Index g) {
        const double d = p - grid(g);
        return lp.theta0(g) + lp.theta1(g) * d + lp.theta2(g) * d * d;
    };
    if (p <= grid(0)) return taylor(0);
    if (p >= grid(G - 1)) return taylor(G - 1);
    const auto it = std::upper_bound(grid.data(), grid.data() + G, p);
    const Eigen::Index j = it - grid.data();
    const double w = (p - grid(j - 1)) / (grid(j) - grid(j - 1));
    return (1.0 - w) * lp.theta0(j - 1) + w * lp.theta0(j);
}

}  // namespace

VarianceForm variance_form_from_name(std::string_view name) {
    if (name == "s4") return VarianceForm::s4;
    if (name == "s5") return VarianceForm::s5;
    fail(ErrorKind::InvalidArgument, "unknown variance form '" + std::string(name) + "' (expected s4 or s5)");
}

std::string_view variance_form_name(VarianceForm form) { return form == VarianceForm::s4 ? "s4" : "s5"; }

VarianceEstimate estimate_variance(const LocPolyFit& lp, const ConstVectorRef& p_hat, const ConstVectorRef& y_tilde,
                                   const Kernel& kernel, VarianceForm form) {
    const Eigen::Index n = p_hat.size();
    if (y_tilde.size() != n) fail(ErrorKind::InvalidArgument, "estimate_variance: length mismatch");
    if (lp.grid.size() == 0) fail(ErrorKind::InvalidArgument, "estimate_variance: empty fit");

    // Only observations within reach of some grid point enter the variance
    // sums, so only those need residuals. The rest stay zero.
    const double reach = kernel.window_radius() * lp.h;
    const double lo = lp.grid(0) - reach, hi = lp.grid(lp.grid.size() - 1) + reach;
    std::vector<Eigen::Index> inside;
    inside.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        if (p_hat(i) >= lo && p_hat(i) <= hi) inside.push_back(i);

    Eigen::VectorXd residuals = Eigen::VectorXd::Zero(n);
    if (n <= kExactResidualLimit) {
        Eigen::VectorXd at(static_cast<Eigen::Index>(inside.size()));
        for (std::size_t k = 0; k < inside.size(); ++k) at(static_cast<Eigen::Index>(k)) = p_hat(inside[k]);
        const auto refit = parallel::local_quadratic(p_hat, y_tilde, at, lp.h, kernel);
        for (std::size_t k = 0; k < inside.size(); ++k) {
            const Eigen::Index i = inside[k];
            // An unsolvable refit can only happen at the sparse edge of the
            // window; fall back to the grid there.
            const double level = refit[k].solved ? refit[k].theta0 : interpolate(lp, p_hat(i));
            residuals(i) = y_tilde(i) - level;
        }
    } else {
        for (const Eigen::Index i : inside) residuals(i) = y_tilde(i) - interpolate(lp, p_hat(i));
    }
    return variance_from_residuals(lp, p_hat, residuals, kernel, form);
}

VarianceEstimate variance_from_residuals(const LocPolyFit& lp, const ConstVectorRef& p_hat,
                                         const ConstVectorRef& residuals, const Kernel& kernel, VarianceForm form) {
    const Eigen::Index n = p_hat.size();
    if (residuals.size() != n) fail(ErrorKind::InvalidArgument, "variance_from_residuals: length mismatch");
    const double h = lp.h;
    if (!(h > 0.0)) fail(ErrorKind::InvalidBandwidth, "variance_from_residuals: bandwidth must be > 0");

    VarianceEstimate out;
    out.form = form;
    out.residuals = residuals;
    out.h_kde = silverman_bandwidth(p_hat);
    out.f_hat = parallel::kernel_density(p_hat, lp.grid, out.h_kde, Kernel::gaussian());
    for (Eigen::Index g = 0; g < lp.grid.size(); ++g)
        if (!(out.f_hat(g) >= kDensityFloor))
            fail(ErrorKind::DensityUnderflow, "density of p_hat is " + std::to_string(out.f_hat(g)) + " at p=" +
                                                  std::to_string(lp.grid(g)) + "; shrink the region");

    const Eigen::VectorXd e2 = residuals.array().square();
    const auto sums = parallel::residual_kernel_sums(p_hat, e2, lp.grid, h, kernel);
    const double k2sq = kernel.kappa2() * kernel.kappa2();
    const double nn = static_cast<double>(n);
    out.s_hat.resize(lp.grid.size());
    for (Eigen::Index g = 0; g < lp.grid.size(); ++g) {
        const double f2 = out.f_hat(g) * out.f_hat(g);
        const double s2 = form == VarianceForm::s4 ? kernel.nu2() / (nn * h * f2 * k2sq) * sums.k1(g)
                                                   : sums.k2(g) / (nn * h * h * h * f2 * k2sq);
        out.s_hat(g) = std::sqrt(s2);
    }
    return out;
}

double solve_ell(double h, double a0, double b0, double lambda) {
    if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorKind::InvalidBandwidth, "solve_ell: bandwidth must be > 0");
    if (!(a0 < b0)) fail(ErrorKind::InvalidArgument, "solve_ell: need a0 < b0");
    if (!(lambda > 0.0)) fail(ErrorKind::InvalidArgument, "solve_ell: lambda must be > 0");
    const double arg = (b0 - a0) * std::sqrt(lambda) / (kTwoPi * h);
    if (arg < 1.0)
        fail(ErrorKind::NoRealSolution, "no level solves the bandwidth equation: (b0-a0) sqrt(lambda)/(2 pi h) = " +
                                            std::to_string(arg) + " < 1; the bandwidth is too large for the region");
    return std::sqrt(2.0 * std::log(arg));
}

CriticalMethod critical_method_from_name(std::string_view name) {
    if (name == "analytic") return CriticalMethod::Analytic;
    if (name == "gumbel") return CriticalMethod::Gumbel;
    if (name == "pointwise") return CriticalMethod::Pointwise;
    fail(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::string_view critical_method_name(CriticalMethod method) {
    switch (method) {
        case CriticalMethod::Analytic: return "analytic";
        case CriticalMethod::Gumbel: return "gumbel";
        case CriticalMethod::Pointwise: return "pointwise";
    }
    return "?";
}

CriticalValue critical_value(CriticalMethod method, double alpha, double ell_n) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidAlpha, "alpha must lie in (0, 1)");
    CriticalValue cv;
    cv.method = method;
    cv.alpha = alpha;
    if (method == CriticalMethod::Pointwise) {
        cv.value = norm_quantile(1.0 - alpha / 2.0);
        return cv;
    }
    if (!(ell_n > 0.0) || !std::isfinite(ell_n)) fail(ErrorKind::InvalidArgument, "ell_n must be > 0");
    cv.ell_n = ell_n;
    // -2 ln ln (1-alpha)^(-1/2) = 2 t*, with t* the Gumbel quantile.
    const double t = -std::log(-std::log1p(-alpha) / 2.0);
    if (method == CriticalMethod::Analytic) {
        const double radicand = ell_n * ell_n + 2.0 * t;
        if (radicand < 0.0)
            fail(ErrorKind::NegativeRadicand,
                 "analytic critical value undefined: ell_n^2 - 2 ln ln (1-alpha)^(-1/2) = " + std::to_string(radicand) +
                     " < 0; use a smaller alpha or a smaller bandwidth");
        cv.value = std::sqrt(radicand);
    } else {
        cv.value = ell_n + t / ell_n;
    }
    return cv;
}

CriticalValue critical_value(CriticalMethod method, double alpha, double h, double a0, double b0,
                             const Kernel& kernel) {
    CriticalValue cv;
    if (method == CriticalMethod::Pointwise) {
        cv = critical_value(method, alpha, 0.0);
        if (kernel.differentiable()) cv.lambda = kernel.lambda();
    } else {
        const double lambda = kernel.lambda();
        cv = critical_value(method, alpha, solve_ell(h, a0, b0, lambda));
        cv.lambda = lambda;
    }
    cv.a0 = a0;
    cv.b0 = b0;
    cv.h = h;
    return cv;
}

MteBand build_band(const ConstVectorRef& grid, const ConstVectorRef& mte_hat, const VarianceEstimate& var,
                   const CriticalValue& crit, Eigen::Index n, double h) {
    const Eigen::Index G = grid.size();
    if (mte_hat.size() != G || var.s_hat.size() != G)
        fail(ErrorKind::InvalidArgument, "build_band: grid, estimate and variance are not aligned");
    if (n <= 0 || !(h > 0.0)) fail(ErrorKind::InvalidArgument, "build_band: need n > 0 and h > 0");
    MteBand band;
    band.grid = grid;
    band.mte_hat = mte_hat;
    band.crit = crit;
    band.n = n;
    band.h = h;
    band.se = var.s_hat / std::sqrt(static_cast<double>(n) * h * h * h);
    band.lower = band.mte_hat - crit.value * band.se;
    band.upper = band.mte_hat + crit.value * band.se;
    return band;
}

bool band_nested(const MteBand& inner, const MteBand& outer, double tol) {
    if (inner.grid.size() != outer.grid.size()) return false;
    for (Eigen::Index g = 0; g < inner.grid.size(); ++g)
        if (inner.lower(g) < outer.lower(g) - tol || inner.upper(g) > outer.upper(g) + tol) return false;
    return true;
}

}  // namespace mte
