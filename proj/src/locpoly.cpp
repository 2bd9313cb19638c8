#include "mte/locpoly.hpp"

#include "mte/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mte {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMassFloorMultiple = 5.0;
constexpr double kDegenerateCurvature = 1e-12;

}  // namespace

BandwidthChoice rot_bandwidth(const ConstVectorRef& p_hat, const ConstVectorRef& y_tilde, const Kernel& kernel,
                              const RotOptions& options) {
    const Eigen::Index n = p_hat.size();
    const int q = options.pilot_degree;
    if (y_tilde.size() != n) fail(ErrorKind::InvalidArgument, "rot_bandwidth: length mismatch");
    if (n < 30) fail(ErrorKind::InvalidArgument, "rot_bandwidth: need at least 30 observations");
    if (q < 3) fail(ErrorKind::InvalidArgument, "rot_bandwidth: pilot degree must be >= 3");
    if (n <= q + 1) fail(ErrorKind::InvalidArgument, "rot_bandwidth: too few observations for the pilot degree");

    const double lo = p_hat.minCoeff(), hi = p_hat.maxCoeff();
    const double range = hi - lo;
    if (!(range > 0.0)) fail(ErrorKind::DegenerateCurvature, "rot_bandwidth: p_hat has no spread");
    // Pilot in t = (p - mid) / half in [-1, 1]; d/dp = (1/half) d/dt.
    const double mid = 0.5 * (lo + hi), half = 0.5 * range;
    Eigen::MatrixXd V(n, q + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = (p_hat(i) - mid) / half;
        double tj = 1.0;
        for (int j = 0; j <= q; ++j, tj *= t) V(i, j) = tj;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
    if (qr.rank() < q + 1) fail(ErrorKind::DegenerateCurvature, "rot_bandwidth: pilot polynomial not identified");
    const Eigen::VectorXd c = qr.solve(y_tilde);

    BandwidthChoice out;
    out.pilot_degree = q;
    out.sigma2 = (y_tilde - V * c).squaredNorm() / static_cast<double>(n - q - 1);

    Eigen::VectorXd m3(n);
    const double scale3 = 1.0 / (half * half * half);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = (p_hat(i) - mid) / half;
        double acc = 0.0, tk = 1.0;
        for (int j = 3; j <= q; ++j, tk *= t) acc += static_cast<double>(j * (j - 1) * (j - 2)) * c(j) * tk;
        m3(i) = acc * scale3;
    }
    out.curvature_sum = m3.squaredNorm();
    if (out.curvature_sum < kDegenerateCurvature) {
        if (!options.allow_fallback)
            fail(ErrorKind::DegenerateCurvature, "rot_bandwidth: pilot third derivative vanishes");
        std::vector<double> mags(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<std::size_t>(i)] = std::abs(m3(i));
        const auto k = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n))) - 1;
        std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
        const double level = std::max(mags[k], 1e-3);
        out.curvature_sum = static_cast<double>(n) * level * level;
        out.used_fallback = true;
    }

    out.constant = equivalent_kernel_constant(kernel, 1, 2);
    out.h_rot = out.constant * std::pow(out.sigma2 * range / out.curvature_sum, 1.0 / 7.0);
    out.h_adj = out.h_rot * std::pow(static_cast<double>(n), 1.0 / 7.0 - out.eta);
    if (!(out.h_adj > 0.0) || !(out.h_adj <= 1.0) || !std::isfinite(out.h_adj))
        fail(ErrorKind::InvalidBandwidth, "rot_bandwidth: adjusted bandwidth " + std::to_string(out.h_adj) +
                                              " outside (0, 1]");
    return out;
}

Eigen::VectorXd make_grid(double a0, double b0, Eigen::Index size) {
    if (size < 2) fail(ErrorKind::InvalidArgument, "make_grid: need at least two points");
    if (!(a0 < b0)) fail(ErrorKind::InvalidArgument, "make_grid: need a0 < b0");
    return Eigen::VectorXd::LinSpaced(size, a0, b0);
}

LocPolyFit local_quadratic_fit(const ConstVectorRef& x, const ConstVectorRef& y, const ConstVectorRef& eval,
                               double h, const Kernel& kernel) {
    if (x.size() != y.size()) fail(ErrorKind::InvalidArgument, "local_quadratic_fit: length mismatch");
    if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorKind::InvalidBandwidth, "local_quadratic_fit: bandwidth must be > 0");
    const auto points = parallel::local_quadratic(x, y, eval, h, kernel);
    const Eigen::Index G = eval.size();
    LocPolyFit out;
    out.grid = eval;
    out.h = h;
    out.theta0.resize(G);
    out.theta1.resize(G);
    out.theta2.resize(G);
    out.eff_n.resize(G);
    const double floor = kMassFloorMultiple * kernel.peak();
    for (Eigen::Index g = 0; g < G; ++g) {
        const auto& pt = points[static_cast<std::size_t>(g)];
        if (pt.mass < floor || !pt.solved || pt.condition > kMaxCondition)
            fail(ErrorKind::InsufficientLocalMass,
                 "local quadratic fit at p=" + std::to_string(eval(g)) + ": kernel mass " + std::to_string(pt.mass) +
                     ", condition " + std::to_string(pt.condition) + " (bandwidth too small or point near the edge)");
        out.theta0(g) = pt.theta0;
        out.theta1(g) = pt.theta1;
        out.theta2(g) = pt.theta2;
        out.eff_n(g) = pt.mass;
    }
    return out;
}

LocPolyFit fit_local_quadratic(const ConstVectorRef& p_hat, const ConstVectorRef& y_tilde, const ConstVectorRef& grid,
                               double h, const Kernel& kernel) {
    if (grid.size() == 0) fail(ErrorKind::InvalidArgument, "fit_local_quadratic: empty grid");
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        if (!(grid(g) > 0.0 && grid(g) < 1.0)) fail(ErrorKind::InvalidArgument, "fit_local_quadratic: grid outside (0,1)");
        if (g > 0 && !(grid(g) > grid(g - 1)))
            fail(ErrorKind::InvalidArgument, "fit_local_quadratic: grid not strictly increasing");
    }
    return local_quadratic_fit(p_hat, y_tilde, grid, h, kernel);
}

Eigen::VectorXd mte_estimate(const CoefFit& coef, const LocPolyFit& lp, const ConstVectorRef& x_eval) {
    if (x_eval.size() != coef.beta_diff.size())
        fail(ErrorKind::InvalidArgument, "mte_estimate: x_eval has " + std::to_string(x_eval.size()) +
                                             " entries, beta_diff has " + std::to_string(coef.beta_diff.size()));
    return lp.theta1.array() + coef.beta_diff.dot(x_eval);
}

}  // namespace mte
