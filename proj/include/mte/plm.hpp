#pragma once

#include "mte/dataset.hpp"
#include "mte/kernel.hpp"
#include "mte/smoother.hpp"

#include <Eigen/Core>

#include <optional>

namespace mte {

struct CoefFit {
    Eigen::VectorXd beta0;      // X coefficients of the untreated outcome
    Eigen::VectorXd beta1;      // X coefficients of the treated outcome
    Eigen::VectorXd beta_diff;  // beta1 - beta0
    double h_first_stage = 0.0;
};

struct PlmOptions {
    /// Defaults to Silverman's rule on p_hat.
    std::optional<double> first_stage_bandwidth;
};

/// 1.06 * sd(x) * n^(-1/5).
double silverman_bandwidth(const ConstVectorRef& x);

/// Residuals of a local linear regression of each target column on x,
/// evaluated at the sample points.
Eigen::MatrixXd local_linear_residuals(const ConstVectorRef& x, const ConstMatrixRef& targets, double h,
                                       const Kernel& kernel);

/// Robinson-style partially linear estimates of beta1 and beta0.
///
/// Treated equation: E[DY | X, P] = beta1' X P + Lambda1(P). Untreated:
/// E[(1-D)Y | X, P] = beta0' X (1-P) + Lambda0(P). In each, the outcome and
/// the regressor columns are residualised on p_hat by local linear
/// regression, then the outcome residual is regressed on the regressor
/// residuals by OLS.
///
/// `data` must already be trimmed to the common support, aligned with
/// p_hat. Throws SingularResidualGram when the residualised regressors are
/// (numerically) collinear.
CoefFit fit_coefficients(const Dataset& data, const ConstVectorRef& p_hat, const Kernel& kernel,
                         const PlmOptions& options = {});

/// Y - beta0' X - (beta1 - beta0)' X p_hat.
Eigen::VectorXd partial_out(const Dataset& data, const ConstVectorRef& p_hat, const CoefFit& coef);

}  // namespace mte
