#include "mte/smoother.hpp"

#include "mte/error.hpp"
#include "mte/normal.hpp"

#include <Eigen/Dense>
#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

namespace mte {

namespace {

// Inlined evaluators for the built-in families; std::function dispatch in
// the inner loop costs more than the exp itself.
struct GaussianEval {
    double operator()(double u) const { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }
};
struct QuarticEval {
    double operator()(double u) const {
        if (std::abs(u) >= 1.0) return 0.0;
        const double t = 1.0 - u * u;
        return 0.9375 * t * t;
    }
};
struct GenericEval {
    const Kernel* kernel;
    double operator()(double u) const { return (*kernel)(u); }
};

template <class F>
decltype(auto) with_evaluator(const Kernel& kernel, F&& f) {
    switch (kernel.family()) {
        case KernelFamily::Gaussian: return f(GaussianEval{});
        case KernelFamily::Quartic: return f(QuarticEval{});
        default: return f(GenericEval{&kernel});
    }
}

void check_bandwidth(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorKind::InvalidBandwidth, "bandwidth must be positive and finite");
}

// Sample sorted once so each evaluation point touches only its window.
class SortedSample {
public:
    explicit SortedSample(const ConstVectorRef& x) : order_(static_cast<std::size_t>(x.size())) {
        std::iota(order_.begin(), order_.end(), Eigen::Index{0});
        std::stable_sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
        values_.resize(order_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) values_[i] = x(order_[i]);
    }

    std::pair<std::size_t, std::size_t> window(double center, double radius) const {
        const auto lo = std::lower_bound(values_.begin(), values_.end(), center - radius);
        const auto hi = std::upper_bound(lo, values_.end(), center + radius);
        return {static_cast<std::size_t>(lo - values_.begin()), static_cast<std::size_t>(hi - values_.begin())};
    }

    const std::vector<Eigen::Index>& order() const { return order_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<Eigen::Index> order_;
    std::vector<double> values_;
};

bool local_linear_singular(double s0, double s1, double s2) {
    const double det = s0 * s2 - s1 * s1;
    return !(det > 1e-14 * s0 * s2);
}

[[noreturn]] void fail_local_linear() {
    fail(ErrorKind::InsufficientLocalMass, "local linear fit is singular; bandwidth too small");
}

}  // namespace

LocalQuadraticPoint solve_local_quadratic(const double (&s)[5], const double (&t)[3], double h) {
    LocalQuadraticPoint out;
    out.mass = s[0];
    Eigen::Matrix3d A;
    A << s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4];
    const Eigen::Vector3d b(t[0], t[1], t[2]);
    if (!(s[0] > 0.0) || !(s[2] > 0.0) || !(s[4] > 0.0)) {
        out.condition = std::numeric_limits<double>::infinity();
        return out;
    }
    // Jacobi equilibration: the condition number then reflects the spread of
    // the data in the window, not the arbitrary scale of u.
    const Eigen::Vector3d scale = A.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::Matrix3d E = scale.asDiagonal() * A * scale.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(E, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(2);
    out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0.0)) return out;
    const Eigen::Vector3d beta = scale.asDiagonal() * E.ldlt().solve(scale.asDiagonal() * b);
    out.theta0 = beta(0);
    out.theta1 = beta(1) / h;
    out.theta2 = beta(2) / (h * h);
    out.solved = true;
    return out;
}

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------

namespace serial {

Eigen::MatrixXd local_linear_at_points(const ConstVectorRef& x, const ConstMatrixRef& targets, double h,
                                       const Kernel& kernel) {
    check_bandwidth(h);
    const Eigen::Index n = x.size(), k = targets.cols();
    if (targets.rows() != n) fail(ErrorKind::InvalidArgument, "local_linear_at_points: row mismatch");
    Eigen::MatrixXd fitted(n, k);
    std::vector<double> t0(static_cast<std::size_t>(k)), t1(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        std::fill(t0.begin(), t0.end(), 0.0);
        std::fill(t1.begin(), t1.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double u = (x(j) - x(i)) / h;
            const double w = kernel(u);
            s0 += w;
            s1 += w * u;
            s2 += w * u * u;
            for (Eigen::Index c = 0; c < k; ++c) {
                t0[static_cast<std::size_t>(c)] += w * targets(j, c);
                t1[static_cast<std::size_t>(c)] += w * u * targets(j, c);
            }
        }
        if (local_linear_singular(s0, s1, s2)) fail_local_linear();
        const double det = s0 * s2 - s1 * s1;
        for (Eigen::Index c = 0; c < k; ++c)
            fitted(i, c) = (s2 * t0[static_cast<std::size_t>(c)] - s1 * t1[static_cast<std::size_t>(c)]) / det;
    }
    return fitted;
}

std::vector<LocalQuadraticPoint> local_quadratic(const ConstVectorRef& x, const ConstVectorRef& y,
                                                 const ConstVectorRef& eval, double h, const Kernel& kernel) {
    check_bandwidth(h);
    std::vector<LocalQuadraticPoint> out(static_cast<std::size_t>(eval.size()));
    for (Eigen::Index g = 0; g < eval.size(); ++g) {
        double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double u = (x(i) - eval(g)) / h;
            const double w = kernel(u);
            const double u2 = u * u;
            s[0] += w;
            s[1] += w * u;
            s[2] += w * u2;
            s[3] += w * u2 * u;
            s[4] += w * u2 * u2;
            t[0] += w * y(i);
            t[1] += w * u * y(i);
            t[2] += w * u2 * y(i);
        }
        out[static_cast<std::size_t>(g)] = solve_local_quadratic(s, t, h);
    }
    return out;
}

Eigen::VectorXd kernel_density(const ConstVectorRef& x, const ConstVectorRef& eval, double h, const Kernel& kernel) {
    check_bandwidth(h);
    Eigen::VectorXd f(eval.size());
    for (Eigen::Index g = 0; g < eval.size(); ++g) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) acc += kernel((x(i) - eval(g)) / h);
        f(g) = acc / (static_cast<double>(x.size()) * h);
    }
    return f;
}

ResidualKernelSums residual_kernel_sums(const ConstVectorRef& x, const ConstVectorRef& w, const ConstVectorRef& eval,
                                        double h, const Kernel& kernel) {
    check_bandwidth(h);
    ResidualKernelSums out{Eigen::VectorXd::Zero(eval.size()), Eigen::VectorXd::Zero(eval.size())};
    for (Eigen::Index g = 0; g < eval.size(); ++g) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double dx = x(i) - eval(g);
            const double k = kernel(dx / h);
            out.k1(g) += w(i) * k;
            out.k2(g) += w(i) * k * k * dx * dx;
        }
    }
    return out;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP, windowed
// ---------------------------------------------------------------------------

namespace parallel {

Eigen::MatrixXd local_linear_at_points(const ConstVectorRef& x, const ConstMatrixRef& targets, double h,
                                       const Kernel& kernel) {
    check_bandwidth(h);
    const Eigen::Index n = x.size(), k = targets.cols();
    if (targets.rows() != n) fail(ErrorKind::InvalidArgument, "local_linear_at_points: row mismatch");
    const SortedSample sorted(x);
    const auto& xs = sorted.values();
    // Targets permuted into sorted order, one contiguous row per observation.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ts(n, k);
    for (Eigen::Index r = 0; r < n; ++r) ts.row(r) = targets.row(sorted.order()[static_cast<std::size_t>(r)]);
    const double radius = kernel.window_radius() * h;

    Eigen::MatrixXd fitted(n, k);
    std::atomic<bool> singular{false};
    with_evaluator(kernel, [&](auto K) {
#pragma omp parallel
        {
            std::vector<double> t0(static_cast<std::size_t>(k)), t1(static_cast<std::size_t>(k));
#pragma omp for schedule(dynamic, 64)
            for (Eigen::Index r = 0; r < n; ++r) {
                const double xi = xs[static_cast<std::size_t>(r)];
                const auto [lo, hi] = sorted.window(xi, radius);
                double s0 = 0.0, s1 = 0.0, s2 = 0.0;
                std::fill(t0.begin(), t0.end(), 0.0);
                std::fill(t1.begin(), t1.end(), 0.0);
                for (std::size_t j = lo; j < hi; ++j) {
                    const double u = (xs[j] - xi) / h;
                    const double w = K(u);
                    s0 += w;
                    s1 += w * u;
                    s2 += w * u * u;
                    const double* row = ts.data() + static_cast<Eigen::Index>(j) * k;
                    for (Eigen::Index c = 0; c < k; ++c) {
                        t0[static_cast<std::size_t>(c)] += w * row[c];
                        t1[static_cast<std::size_t>(c)] += w * u * row[c];
                    }
                }
                const Eigen::Index i = sorted.order()[static_cast<std::size_t>(r)];
                if (local_linear_singular(s0, s1, s2)) {
                    singular.store(true, std::memory_order_relaxed);
                    continue;
                }
                const double det = s0 * s2 - s1 * s1;
                for (Eigen::Index c = 0; c < k; ++c)
                    fitted(i, c) = (s2 * t0[static_cast<std::size_t>(c)] - s1 * t1[static_cast<std::size_t>(c)]) / det;
            }
        }
    });
    if (singular.load()) fail_local_linear();
    return fitted;
}

std::vector<LocalQuadraticPoint> local_quadratic(const ConstVectorRef& x, const ConstVectorRef& y,
                                                 const ConstVectorRef& eval, double h, const Kernel& kernel) {
    check_bandwidth(h);
    const SortedSample sorted(x);
    const auto& xs = sorted.values();
    std::vector<double> ys(xs.size());
    for (std::size_t r = 0; r < xs.size(); ++r) ys[r] = y(sorted.order()[r]);
    const double radius = kernel.window_radius() * h;
    const Eigen::Index G = eval.size();

    std::vector<LocalQuadraticPoint> out(static_cast<std::size_t>(G));
    with_evaluator(kernel, [&](auto K) {
#pragma omp parallel for schedule(dynamic, 8)
        for (Eigen::Index g = 0; g < G; ++g) {
            const double p = eval(g);
            const auto [lo, hi] = sorted.window(p, radius);
            double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
            for (std::size_t i = lo; i < hi; ++i) {
                const double u = (xs[i] - p) / h;
                const double w = K(u);
                const double u2 = u * u;
                s[0] += w;
                s[1] += w * u;
                s[2] += w * u2;
                s[3] += w * u2 * u;
                s[4] += w * u2 * u2;
                t[0] += w * ys[i];
                t[1] += w * u * ys[i];
                t[2] += w * u2 * ys[i];
            }
            out[static_cast<std::size_t>(g)] = solve_local_quadratic(s, t, h);
        }
    });
    return out;
}

Eigen::VectorXd kernel_density(const ConstVectorRef& x, const ConstVectorRef& eval, double h, const Kernel& kernel) {
    check_bandwidth(h);
    const SortedSample sorted(x);
    const auto& xs = sorted.values();
    const double radius = kernel.window_radius() * h;
    const double norm = 1.0 / (static_cast<double>(x.size()) * h);
    Eigen::VectorXd f(eval.size());
    with_evaluator(kernel, [&](auto K) {
#pragma omp parallel for schedule(static)
        for (Eigen::Index g = 0; g < eval.size(); ++g) {
            const auto [lo, hi] = sorted.window(eval(g), radius);
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) acc += K((xs[i] - eval(g)) / h);
            f(g) = acc * norm;
        }
    });
    return f;
}

ResidualKernelSums residual_kernel_sums(const ConstVectorRef& x, const ConstVectorRef& w, const ConstVectorRef& eval,
                                        double h, const Kernel& kernel) {
    check_bandwidth(h);
    const SortedSample sorted(x);
    const auto& xs = sorted.values();
    std::vector<double> ws(xs.size());
    for (std::size_t r = 0; r < xs.size(); ++r) ws[r] = w(sorted.order()[r]);
    const double radius = kernel.window_radius() * h;
    ResidualKernelSums out{Eigen::VectorXd(eval.size()), Eigen::VectorXd(eval.size())};
    with_evaluator(kernel, [&](auto K) {
#pragma omp parallel for schedule(static)
        for (Eigen::Index g = 0; g < eval.size(); ++g) {
            const double p = eval(g);
            const auto [lo, hi] = sorted.window(p, radius);
            double a = 0.0, b = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                const double dx = xs[i] - p;
                const double k = K(dx / h);
                a += ws[i] * k;
                b += ws[i] * k * k * dx * dx;
            }
            out.k1(g) = a;
            out.k2(g) = b;
        }
    });
    return out;
}

}  // namespace parallel

void set_thread_count(int n) {
    if (n > 0) {
        omp_set_num_threads(n);
    } else {
        omp_set_num_threads(omp_get_num_procs());
    }
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace mte
