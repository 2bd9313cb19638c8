#pragma once

#include "mte/kernel.hpp"
#include "mte/plm.hpp"
#include "mte/smoother.hpp"

#include <Eigen/Core>

namespace mte {

struct LocPolyFit {
    Eigen::VectorXd grid;
    Eigen::VectorXd theta0;  // level of Lambda
    Eigen::VectorXd theta1;  // Lambda', the nonparametric part of the MTE
    Eigen::VectorXd theta2;
    Eigen::VectorXd eff_n;   // sum of kernel weights at each grid point
    double h = 0.0;
};

struct BandwidthChoice {
    double h_rot = 0.0;  // n^(-1/7) rule of thumb for the first derivative, local quadratic fit
    double h_adj = 0.0;  // h_rot * n^(1/7 - 2/13): undersmoothed to order n^(-2/13)
    double eta = 2.0 / 13.0;
    double constant = 0.0;        // C_{1,2}(K)
    double sigma2 = 0.0;          // pilot residual variance
    double curvature_sum = 0.0;   // sum_i m'''(p_i)^2 from the pilot
    int pilot_degree = 0;
    bool used_fallback = false;
};

struct RotOptions {
    /// Degree of the global polynomial pilot for m'''.
    int pilot_degree = 8;
    /// Replace a vanishing curvature sum by n * max(q90 |m'''|, 1e-3)^2
    /// instead of throwing DegenerateCurvature.
    bool allow_fallback = false;
};

/// Fan-Gijbels style rule-of-thumb bandwidth for Lambda' from a local
/// quadratic fit: a global polynomial pilot supplies sigma^2 and m''', and
/// h_rot = C_{1,2}(K) [sigma^2 (max p - min p) / sum_i m'''(p_i)^2]^(1/7).
BandwidthChoice rot_bandwidth(const ConstVectorRef& p_hat, const ConstVectorRef& y_tilde, const Kernel& kernel,
                              const RotOptions& options = {});

/// `size` equally spaced points on [a0, b0].
Eigen::VectorXd make_grid(double a0, double b0, Eigen::Index size);

/// Local quadratic fit of y on x at arbitrary evaluation points. Throws
/// InsufficientLocalMass when a point has kernel mass below 5 K(0) or an
/// equilibrated Gram condition number above 1e12.
LocPolyFit local_quadratic_fit(const ConstVectorRef& x, const ConstVectorRef& y, const ConstVectorRef& eval,
                               double h, const Kernel& kernel);

/// local_quadratic_fit on a strictly increasing grid inside (0, 1).
LocPolyFit fit_local_quadratic(const ConstVectorRef& p_hat, const ConstVectorRef& y_tilde, const ConstVectorRef& grid,
                               double h, const Kernel& kernel);

/// beta_diff' x_eval + theta1 at each grid point.
Eigen::VectorXd mte_estimate(const CoefFit& coef, const LocPolyFit& lp, const ConstVectorRef& x_eval);

}  // namespace mte
