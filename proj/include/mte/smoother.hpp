#pragma once

// Kernel-weighted sums behind every nonparametric step: local linear first
// stages, local quadratic fits, kernel density estimates and the weighted
// residual sums of the variance estimator.
//
// Each routine exists twice. mte::serial is a brute-force O(n * G) loop over
// every pair, kept as the reference implementation for tests. mte::parallel
// sorts the sample once, restricts each evaluation point to the kernel window
// and splits evaluation points across OpenMP threads. Both return the same
// values up to floating-point summation order (the Gaussian window is cut at
// |u| = 8, where the kernel is below 1e-14 of its peak).

#include "mte/kernel.hpp"

#include <Eigen/Core>

#include <vector>

namespace mte {

using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;
using ConstMatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

/// Weighted quadratic fit at one evaluation point.
struct LocalQuadraticPoint {
    double theta0 = 0.0;  // level
    double theta1 = 0.0;  // first derivative
    double theta2 = 0.0;  // coefficient on (x - p)^2, i.e. half the second derivative
    double mass = 0.0;    // sum of kernel weights
    double condition = 0.0;  // condition number of the equilibrated 3x3 Gram matrix
    bool solved = false;     // false when the Gram matrix is numerically singular
};

/// Solves the local quadratic normal equations from the scaled moments
/// s_j = sum K(u) u^j (j = 0..4) and t_j = sum K(u) u^j y (j = 0..2), with
/// u = (x - p) / h.
LocalQuadraticPoint solve_local_quadratic(const double (&s)[5], const double (&t)[3], double h);

struct ResidualKernelSums {
    Eigen::VectorXd k1;  // sum_i w_i K(u_i)
    Eigen::VectorXd k2;  // sum_i w_i K(u_i)^2 (x_i - p)^2
};

namespace serial {

/// Local linear regression of every column of `targets` on x, evaluated at
/// each sample point x_i. Returns the n x k matrix of fitted intercepts.
Eigen::MatrixXd local_linear_at_points(const ConstVectorRef& x, const ConstMatrixRef& targets, double h,
                                       const Kernel& kernel);

std::vector<LocalQuadraticPoint> local_quadratic(const ConstVectorRef& x, const ConstVectorRef& y,
                                                 const ConstVectorRef& eval, double h, const Kernel& kernel);

/// (1 / (n h)) sum_i K((x_i - p) / h) at each evaluation point.
Eigen::VectorXd kernel_density(const ConstVectorRef& x, const ConstVectorRef& eval, double h, const Kernel& kernel);

ResidualKernelSums residual_kernel_sums(const ConstVectorRef& x, const ConstVectorRef& w, const ConstVectorRef& eval,
                                        double h, const Kernel& kernel);

}  // namespace serial

namespace parallel {

Eigen::MatrixXd local_linear_at_points(const ConstVectorRef& x, const ConstMatrixRef& targets, double h,
                                       const Kernel& kernel);

std::vector<LocalQuadraticPoint> local_quadratic(const ConstVectorRef& x, const ConstVectorRef& y,
                                                 const ConstVectorRef& eval, double h, const Kernel& kernel);

Eigen::VectorXd kernel_density(const ConstVectorRef& x, const ConstVectorRef& eval, double h, const Kernel& kernel);

ResidualKernelSums residual_kernel_sums(const ConstVectorRef& x, const ConstVectorRef& w, const ConstVectorRef& eval,
                                        double h, const Kernel& kernel);

}  // namespace parallel

/// Caps the OpenMP worker pool; n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

}  // namespace mte
