#pragma once

#include "mte/dataset.hpp"

#include <Eigen/Core>

#include <vector>

namespace mte {

struct SupportInterval {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double p) const { return p >= lo && p <= hi; }
};

struct ProbitOptions {
    int max_iterations = 100;
    int max_halvings = 20;
    double score_tolerance = 1e-8;
    double relative_loglik_tolerance = 1e-12;
    /// |gamma' z| above this at convergence is reported as separation.
    double separation_index = 30.0;
};

struct PropensityFit {
    Eigen::VectorXd gamma;   // intercept first, then one entry per Z column
    Eigen::VectorXd fitted;  // Phi(gamma' [1, z_i]), strictly inside (0, 1)
    double loglik = 0.0;
    SupportInterval support;
    std::vector<bool> kept;  // fitted[i] inside support
    int iterations = 0;
    std::vector<double> loglik_path;  // log-likelihood after each accepted step
};

/// Probit maximum likelihood for Pr(D = 1 | Z) by Newton-Raphson on the
/// observed information with step halving.
///
/// Throws RankDeficient when [1, Z] is rank deficient or the information
/// matrix is singular, SeparationDetected under (quasi-)perfect prediction,
/// NoOverlap when the treated and untreated score ranges do not intersect,
/// and ConvergenceFailure if the iteration limit is hit.
PropensityFit fit_probit(const Dataset& data, const ProbitOptions& options = {});

/// gamma' [1, z_i] for every row.
Eigen::VectorXd probit_index(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& z);

/// Intersection of the fitted-score ranges of the two arms.
SupportInterval common_support(const Eigen::VectorXd& fitted, const Eigen::VectorXd& d);

struct TrimResult {
    Dataset data;
    Eigen::VectorXd p_hat;
    Eigen::Index dropped_treated = 0;
    Eigen::Index dropped_untreated = 0;
};

inline constexpr Eigen::Index kMinTrimmedSample = 50;

/// Keeps the observations whose fitted score lies in fit.support, preserving
/// order. Throws EmptyAfterTrim when fewer than 50 rows survive.
TrimResult trim_to_support(const PropensityFit& fit, const Dataset& data);

/// Same, against an explicit interval (e.g. a published estimation region).
TrimResult trim_to_interval(const PropensityFit& fit, const Dataset& data, SupportInterval interval);

}  // namespace mte
