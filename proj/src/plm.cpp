#include "mte/plm.hpp"

#include "mte/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace mte {

namespace {

Eigen::VectorXd residual_ols(const Eigen::MatrixXd& rx, const Eigen::VectorXd& ry, const char* equation) {
    const Eigen::MatrixXd gram = rx.transpose() * rx;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(lo > 1e-12 * hi))
        fail(ErrorKind::SingularResidualGram,
             std::string("residualised regressors of the ") + equation +
                 " equation are collinear; X shows no variation net of the propensity score");
    return gram.ldlt().solve(rx.transpose() * ry);
}

}  // namespace

double silverman_bandwidth(const ConstVectorRef& x) {
    const auto n = static_cast<double>(x.size());
    if (n < 2) fail(ErrorKind::InvalidArgument, "silverman_bandwidth: need at least two points");
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / (n - 1.0));
    if (!(sd > 0.0)) fail(ErrorKind::InvalidBandwidth, "silverman_bandwidth: sample has zero spread");
    return 1.06 * sd * std::pow(n, -0.2);
}

Eigen::MatrixXd local_linear_residuals(const ConstVectorRef& x, const ConstMatrixRef& targets, double h,
                                       const Kernel& kernel) {
    return targets - parallel::local_linear_at_points(x, targets, h, kernel);
}

CoefFit fit_coefficients(const Dataset& data, const ConstVectorRef& p_hat, const Kernel& kernel,
                         const PlmOptions& options) {
    const Eigen::Index n = data.size(), d = data.x.cols();
    if (p_hat.size() != n) fail(ErrorKind::InvalidArgument, "fit_coefficients: p_hat length mismatch");
    if (d < 1) fail(ErrorKind::InvalidArgument, "fit_coefficients: need at least one X column");

    CoefFit out;
    out.h_first_stage = options.first_stage_bandwidth.value_or(silverman_bandwidth(p_hat));

    // One smoothing pass for all 2 + 2d targets: [DY, (1-D)Y, X*p, X*(1-p)].
    Eigen::MatrixXd targets(n, 2 + 2 * d);
    targets.col(0) = data.d.cwiseProduct(data.y);
    targets.col(1) = (1.0 - data.d.array()).matrix().cwiseProduct(data.y);
    targets.middleCols(2, d) = data.x.array().colwise() * p_hat.array();
    targets.middleCols(2 + d, d) = data.x.array().colwise() * (1.0 - p_hat.array());

    const Eigen::MatrixXd resid = local_linear_residuals(p_hat, targets, out.h_first_stage, kernel);
    out.beta1 = residual_ols(resid.middleCols(2, d), resid.col(0), "treated");
    out.beta0 = residual_ols(resid.middleCols(2 + d, d), resid.col(1), "untreated");
    out.beta_diff = out.beta1 - out.beta0;
    if (!out.beta_diff.allFinite()) fail(ErrorKind::SingularResidualGram, "fit_coefficients: non-finite estimates");
    return out;
}

Eigen::VectorXd partial_out(const Dataset& data, const ConstVectorRef& p_hat, const CoefFit& coef) {
    return data.y - data.x * coef.beta0 - (data.x * coef.beta_diff).cwiseProduct(p_hat);
}

}  // namespace mte
