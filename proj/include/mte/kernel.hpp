#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mte {

enum class KernelFamily { Gaussian, Quartic, Custom };

struct KernelFunctionals {
    double kappa2 = 0.0;  // int u^2 K(u) du
    double nu2 = 0.0;     // int u^2 K(u)^2 du
    double lambda = 0.0;  // -int g g'' / int g^2, g(u) = u K(u)
};

// How g'' is obtained when computing lambda by quadrature.
enum class SecondDerivative { Analytic, FiniteDifference };

/// A symmetric second-order smoothing kernel together with the scalar
/// functionals the band construction needs.
///
/// Instances are immutable once built and can be shared freely across
/// threads. The Gaussian and quartic families carry closed-form functionals;
/// custom kernels get theirs by adaptive quadrature at construction time.
class Kernel {
public:
    static Kernel gaussian();
    static Kernel quartic();  // biweight: 15/16 (1 - u^2)^2 on [-1, 1]

    /// User-supplied kernel. `radius` is the half-width beyond which K is
    /// treated as zero (quadrature bound and summation window). Without both
    /// derivatives, g'' is taken by central differences.
    static Kernel custom(std::string name, std::function<double(double)> k, double radius,
                         std::function<double(double)> first_derivative = {},
                         std::function<double(double)> second_derivative = {});

    /// Piecewise-linear kernel through (nodes[i], values[i]). Nodes must be
    /// symmetric about zero and strictly increasing; K is zero outside them.
    /// The kinks make lambda undefined, so functionals().lambda throws.
    static Kernel tabulated(std::vector<double> nodes, std::vector<double> values);

    /// "gaussian" or "quartic".
    static Kernel from_name(std::string_view name);

    double operator()(double u) const { return eval_(u); }

    /// K'(u); analytic when available, otherwise a central difference.
    double first_derivative(double u) const;
    /// K''(u); analytic when available, otherwise a central difference with
    /// step 1e-5. Throws NonDifferentiableKernel for tabulated kernels.
    double second_derivative(double u) const;
    bool has_analytic_derivatives() const { return d1_ && d2_; }
    bool differentiable() const { return differentiable_; }

    KernelFamily family() const { return family_; }
    const std::string& name() const { return name_; }

    /// +inf for the Gaussian.
    double support_radius() const { return support_radius_; }
    /// Finite half-width used for quadrature bounds and for truncating kernel
    /// sums. Equals support_radius() for compact kernels, 8 for the Gaussian.
    double window_radius() const { return window_radius_; }
    /// max_u K(u) = K(0).
    double peak() const { return peak_; }

    double kappa2() const { return functionals_.kappa2; }
    double nu2() const { return functionals_.nu2; }
    /// Throws NonDifferentiableKernel for tabulated kernels.
    double lambda() const;
    const KernelFunctionals& functionals() const;

private:
    Kernel() = default;

    KernelFamily family_ = KernelFamily::Custom;
    std::string name_;
    std::function<double(double)> eval_;
    std::function<double(double)> d1_;
    std::function<double(double)> d2_;
    bool differentiable_ = true;
    double support_radius_ = 0.0;
    double window_radius_ = 0.0;
    double peak_ = 0.0;
    KernelFunctionals functionals_;
};

/// Adaptive Gauss-Kronrod integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// Recomputes kappa2, nu2 and lambda by quadrature over the kernel window.
/// `route` picks analytic (g'' = 2K' + uK'') or finite-difference g'';
/// Analytic falls back to finite differences when K' or K'' is missing.
KernelFunctionals kernel_functionals(const Kernel& kernel, SecondDerivative route = SecondDerivative::Analytic);

/// int K(u) du over the kernel window.
double kernel_mass(const Kernel& kernel);

/// Constant C_{nu,p}(K) of the asymptotically optimal bandwidth for the
/// nu-th derivative from a local polynomial of degree p, built from the
/// equivalent kernel K*_nu. Requires p - nu odd.
double equivalent_kernel_constant(const Kernel& kernel, int nu, int p);

}  // namespace mte
