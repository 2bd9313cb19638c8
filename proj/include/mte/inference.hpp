#pragma once

#include "mte/kernel.hpp"
#include "mte/locpoly.hpp"
#include "mte/smoother.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace mte {

// s4 is the kernel-weighted form nu2 / (n h f^2 kappa2^2) sum e^2 K; s5 is
// the first-order form 1 / (n h^3 f^2 kappa2^2) sum e^2 K^2 (p_i - p)^2.
// Both estimate the same asymptotic variance.
enum class VarianceForm { s4, s5 };

VarianceForm variance_form_from_name(std::string_view name);
std::string_view variance_form_name(VarianceForm form);

struct VarianceEstimate {
    Eigen::VectorXd s_hat;      // at the grid points
    Eigen::VectorXd f_hat;      // density of p_hat at the grid points
    Eigen::VectorXd residuals;  // y_tilde - theta0(p_hat), one per observation
    double h_kde = 0.0;
    VarianceForm form = VarianceForm::s4;
};

/// Residuals from theta0 re-fitted at each p_hat when n <= this, linear
/// interpolation of lp.theta0 otherwise.
inline constexpr Eigen::Index kExactResidualLimit = 10000;

VarianceEstimate estimate_variance(const LocPolyFit& lp, const ConstVectorRef& p_hat, const ConstVectorRef& y_tilde,
                                   const Kernel& kernel, VarianceForm form = VarianceForm::s4);

/// Variance on lp.grid from given residuals; estimate_variance minus the
/// residual step. Throws DensityUnderflow where f_hat < 1e-6.
VarianceEstimate variance_from_residuals(const LocPolyFit& lp, const ConstVectorRef& p_hat,
                                         const ConstVectorRef& residuals, const Kernel& kernel,
                                         VarianceForm form = VarianceForm::s4);

/// Largest root of (b0 - a0) sqrt(lambda) / (2 pi h) exp(-l^2 / 2) = 1.
double solve_ell(double h, double a0, double b0, double lambda);

enum class CriticalMethod { Analytic, Gumbel, Pointwise };

CriticalMethod critical_method_from_name(std::string_view name);
std::string_view critical_method_name(CriticalMethod method);

struct CriticalValue {
    CriticalMethod method = CriticalMethod::Analytic;
    double alpha = 0.05;
    double ell_n = 0.0;  // 0 for Pointwise
    double value = 0.0;
    double a0 = 0.0, b0 = 0.0;
    double h = 0.0;
    double lambda = 0.0;
};

/// c(1 - alpha) from a given ell_n. Region, h and lambda are left zero.
CriticalValue critical_value(CriticalMethod method, double alpha, double ell_n);

/// Same, computing ell_n from the bandwidth, region and kernel. Pointwise
/// never touches lambda, so it also works for non-differentiable kernels.
CriticalValue critical_value(CriticalMethod method, double alpha, double h, double a0, double b0,
                             const Kernel& kernel);

struct MteBand {
    Eigen::VectorXd grid;
    Eigen::VectorXd mte_hat;
    Eigen::VectorXd se;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    CriticalValue crit;
    Eigen::Index n = 0;
    double h = 0.0;
};

MteBand build_band(const ConstVectorRef& grid, const ConstVectorRef& mte_hat, const VarianceEstimate& var,
                   const CriticalValue& crit, Eigen::Index n, double h);

/// true when inner lies inside outer at every grid point.
bool band_nested(const MteBand& inner, const MteBand& outer, double tol = 0.0);

}  // namespace mte
