#include "mte/kernel.hpp"

#include "mte/error.hpp"
#include "mte/normal.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mte {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kGaussianWindow = 8.0;

double central_second_difference(const std::function<double(double)>& f, double u) {
    return (f(u + kFdStep) - 2.0 * f(u) + f(u - kFdStep)) / (kFdStep * kFdStep);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    return gauss_kronrod<double, 15>::integrate(f, a, b, 15, tol, &error);
}

Kernel Kernel::gaussian() {
    Kernel k;
    k.family_ = KernelFamily::Gaussian;
    k.name_ = "gaussian";
    k.eval_ = [](double u) { return norm_pdf(u); };
    k.d1_ = [](double u) { return -u * norm_pdf(u); };
    k.d2_ = [](double u) { return norm_pdf(u) * (u * u - 1.0); };
    k.support_radius_ = std::numeric_limits<double>::infinity();
    k.window_radius_ = kGaussianWindow;
    k.peak_ = kInvSqrt2Pi;
    // int g^2 = 1/(4 sqrt(pi)), int g g'' = -3/(8 sqrt(pi)).
    k.functionals_ = {1.0, 1.0 / (4.0 * std::sqrt(M_PI)), 1.5};
    return k;
}

Kernel Kernel::quartic() {
    Kernel k;
    k.family_ = KernelFamily::Quartic;
    k.name_ = "quartic";
    k.eval_ = [](double u) {
        if (std::abs(u) >= 1.0) return 0.0;
        const double t = 1.0 - u * u;
        return 15.0 / 16.0 * t * t;
    };
    k.d1_ = [](double u) {
        if (std::abs(u) >= 1.0) return 0.0;
        return -15.0 / 4.0 * u * (1.0 - u * u);
    };
    k.d2_ = [](double u) {
        if (std::abs(u) >= 1.0) return 0.0;
        return 15.0 / 16.0 * (12.0 * u * u - 4.0);
    };
    k.support_radius_ = 1.0;
    k.window_radius_ = 1.0;
    k.peak_ = 15.0 / 16.0;
    // lambda = int g'^2 / int g^2 = (128/315) / (128/3465).
    k.functionals_ = {1.0 / 7.0, 5.0 / 77.0, 11.0};
    return k;
}

Kernel Kernel::custom(std::string name, std::function<double(double)> fn, double radius,
                      std::function<double(double)> first_derivative,
                      std::function<double(double)> second_derivative) {
    if (!fn) fail(ErrorKind::InvalidArgument, "custom kernel: empty function");
    if (!(radius > 0.0) || !std::isfinite(radius))
        fail(ErrorKind::InvalidArgument, "custom kernel: radius must be positive and finite");
    Kernel k;
    k.family_ = KernelFamily::Custom;
    k.name_ = std::move(name);
    k.eval_ = [fn = std::move(fn), radius](double u) { return std::abs(u) > radius ? 0.0 : fn(u); };
    k.d1_ = std::move(first_derivative);
    k.d2_ = std::move(second_derivative);
    k.support_radius_ = radius;
    k.window_radius_ = radius;
    k.peak_ = k.eval_(0.0);
    k.functionals_ = kernel_functionals(k);
    return k;
}

Kernel Kernel::tabulated(std::vector<double> nodes, std::vector<double> values) {
    const std::size_t m = nodes.size();
    if (m < 3 || values.size() != m) fail(ErrorKind::InvalidArgument, "tabulated kernel: need >= 3 matching nodes/values");
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && !(nodes[i] > nodes[i - 1])) fail(ErrorKind::InvalidArgument, "tabulated kernel: nodes not increasing");
        if (std::abs(nodes[i] + nodes[m - 1 - i]) > 1e-12 || std::abs(values[i] - values[m - 1 - i]) > 1e-12)
            fail(ErrorKind::InvalidArgument, "tabulated kernel: table not symmetric about zero");
        if (values[i] < 0.0) fail(ErrorKind::InvalidArgument, "tabulated kernel: negative value");
    }
    double mass = 0.0;
    for (std::size_t i = 1; i < m; ++i) mass += 0.5 * (values[i] + values[i - 1]) * (nodes[i] - nodes[i - 1]);
    if (std::abs(mass - 1.0) > 1e-8) fail(ErrorKind::InvalidArgument, "tabulated kernel: does not integrate to one");

    Kernel k;
    k.family_ = KernelFamily::Custom;
    k.name_ = "tabulated";
    k.differentiable_ = false;
    k.support_radius_ = nodes.back();
    k.window_radius_ = nodes.back();
    k.eval_ = [nodes, values](double u) {
        if (u <= nodes.front() || u >= nodes.back()) return 0.0;
        const auto it = std::upper_bound(nodes.begin(), nodes.end(), u);
        const auto j = static_cast<std::size_t>(it - nodes.begin());
        const double t = (u - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
        return values[j - 1] + t * (values[j] - values[j - 1]);
    };
    k.peak_ = *std::max_element(values.begin(), values.end());

    const auto& K = k.eval_;
    // Integrate piece by piece so the kinks sit on panel boundaries.
    for (std::size_t i = 1; i < m; ++i) {
        k.functionals_.kappa2 += integrate([&](double u) { return u * u * K(u); }, nodes[i - 1], nodes[i]);
        k.functionals_.nu2 += integrate([&](double u) { return u * u * K(u) * K(u); }, nodes[i - 1], nodes[i]);
    }
    k.functionals_.lambda = std::numeric_limits<double>::quiet_NaN();
    return k;
}

Kernel Kernel::from_name(std::string_view name) {
    if (name == "gaussian") return gaussian();
    if (name == "quartic" || name == "biweight") return quartic();
    fail(ErrorKind::InvalidArgument, "unknown kernel '" + std::string(name) + "' (expected gaussian|quartic)");
}

double Kernel::first_derivative(double u) const {
    if (!differentiable_)
        fail(ErrorKind::NonDifferentiableKernel, "kernel '" + name_ + "' is not differentiable");
    if (d1_) return d1_(u);
    return (eval_(u + kFdStep) - eval_(u - kFdStep)) / (2.0 * kFdStep);
}

double Kernel::second_derivative(double u) const {
    if (!differentiable_)
        fail(ErrorKind::NonDifferentiableKernel, "kernel '" + name_ + "' has no second derivative");
    if (d2_) return d2_(u);
    return central_second_difference(eval_, u);
}

double Kernel::lambda() const { return functionals().lambda; }

const KernelFunctionals& Kernel::functionals() const {
    if (!differentiable_)
        fail(ErrorKind::NonDifferentiableKernel,
             "kernel '" + name_ + "' is not twice differentiable; the analytic band is invalid for it");
    return functionals_;
}

double kernel_mass(const Kernel& kernel) {
    const double r = kernel.window_radius();
    return integrate([&](double u) { return kernel(u); }, -r, r);
}

KernelFunctionals kernel_functionals(const Kernel& kernel, SecondDerivative route) {
    if (!kernel.differentiable())
        fail(ErrorKind::NonDifferentiableKernel, "kernel '" + kernel.name() + "' is not twice differentiable");
    const double r = kernel.window_radius();
    KernelFunctionals out;
    out.kappa2 = integrate([&](double u) { return u * u * kernel(u); }, -r, r);
    out.nu2 = integrate([&](double u) { return u * u * kernel(u) * kernel(u); }, -r, r);

    const auto g = [&](double u) { return u * kernel(u); };
    std::function<double(double)> g2;
    if (route == SecondDerivative::Analytic && kernel.has_analytic_derivatives()) {
        g2 = [&](double u) { return 2.0 * kernel.first_derivative(u) + u * kernel.second_derivative(u); };
    } else {
        g2 = [&](double u) { return central_second_difference(g, u); };
    }
    const double ggpp = integrate([&](double u) { return g(u) * g2(u); }, -r, r, 1e-10);
    const double gg = integrate([&](double u) { return g(u) * g(u); }, -r, r);
    out.lambda = -ggpp / gg;
    if (!(out.kappa2 > 0.0) || !(out.nu2 > 0.0) || !(out.lambda > 0.0))
        fail(ErrorKind::InvalidArgument, "kernel '" + kernel.name() + "' has non-positive functionals");
    return out;
}

double equivalent_kernel_constant(const Kernel& kernel, int nu, int p) {
    if (nu < 0 || p < nu || (p - nu) % 2 == 0)
        fail(ErrorKind::InvalidArgument, "equivalent_kernel_constant: need 0 <= nu <= p with p - nu odd");
    const double r = kernel.window_radius();
    const int m = p + 1;
    Eigen::MatrixXd S(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            S(i, j) = integrate([&](double u) { return std::pow(u, i + j) * kernel(u); }, -r, r);
    const Eigen::VectorXd row = S.inverse().row(nu).transpose();
    const auto equiv = [&](double t) {
        double poly = 0.0, tj = 1.0;
        for (int j = 0; j < m; ++j, tj *= t) poly += row(j) * tj;
        return poly * kernel(t);
    };
    const double rk = integrate([&](double t) { return equiv(t) * equiv(t); }, -r, r);
    const double mu = integrate([&](double t) { return std::pow(t, p + 1) * equiv(t); }, -r, r);
    double fact = 1.0;
    for (int j = 2; j <= p + 1; ++j) fact *= j;
    const double num = fact * fact * (2.0 * nu + 1.0) * rk;
    const double den = 2.0 * (p + 1.0 - nu) * mu * mu;
    return std::pow(num / den, 1.0 / (2.0 * p + 3.0));
}

}  // namespace mte
