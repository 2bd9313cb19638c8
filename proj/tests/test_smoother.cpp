#include "doctest.h"

#include "mte/error.hpp"
#include "mte/kernel.hpp"
#include "mte/normal.hpp"
#include "mte/rng.hpp"
#include "mte/smoother.hpp"

#include <Eigen/Dense>

#include <cmath>

using doctest::Approx;

namespace {

struct Data {
    Eigen::VectorXd x, y, eval;
    Eigen::MatrixXd targets;
};

Data make_data(Eigen::Index n, std::uint64_t seed) {
    mte::Philox4x32 g(seed, 0, 0);
    Data d;
    d.x.resize(n);
    d.y.resize(n);
    d.targets.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.x(i) = mte::norm_cdf(0.8 * mte::norm_quantile(g.uniform()));
        d.y(i) = std::cos(4.0 * d.x(i)) + 0.2 * mte::norm_quantile(g.uniform());
        d.targets(i, 0) = d.y(i);
        d.targets(i, 1) = d.x(i) * d.y(i);
        d.targets(i, 2) = g.uniform();
    }
    d.eval = Eigen::VectorXd::LinSpaced(41, 0.2, 0.8);
    return d;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return ((a - b).array().abs() / (1.0 + b.array().abs())).maxCoeff();
}

}  // namespace

TEST_SUITE("smoother") {

TEST_CASE("parallel matches serial reference") {
    const auto d = make_data(1500, 11);
    for (const auto& k : {mte::Kernel::gaussian(), mte::Kernel::quartic(),
                          mte::Kernel::tabulated({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0})}) {
        CAPTURE(k.name());
        const double h = 0.08;
        CHECK(max_rel(mte::parallel::local_linear_at_points(d.x, d.targets, h, k),
                      mte::serial::local_linear_at_points(d.x, d.targets, h, k)) < 1e-10);
        const auto lp = mte::parallel::local_quadratic(d.x, d.y, d.eval, h, k);
        const auto ls = mte::serial::local_quadratic(d.x, d.y, d.eval, h, k);
        for (std::size_t g = 0; g < lp.size(); ++g) {
            CHECK(lp[g].theta0 == Approx(ls[g].theta0).epsilon(1e-10));
            CHECK(lp[g].theta1 == Approx(ls[g].theta1).epsilon(1e-9));
            CHECK(lp[g].theta2 == Approx(ls[g].theta2).epsilon(1e-8));
            CHECK(lp[g].mass == Approx(ls[g].mass).epsilon(1e-12));
        }
        CHECK(max_rel(mte::parallel::kernel_density(d.x, d.eval, h, k),
                      mte::serial::kernel_density(d.x, d.eval, h, k)) < 1e-12);
        const auto rp = mte::parallel::residual_kernel_sums(d.x, d.y.array().square(), d.eval, h, k);
        const auto rs = mte::serial::residual_kernel_sums(d.x, d.y.array().square(), d.eval, h, k);
        CHECK(max_rel(rp.k1, rs.k1) < 1e-12);
        CHECK(max_rel(rp.k2, rs.k2) < 1e-12);
    }
}

TEST_CASE("results do not depend on the thread count") {
    const auto d = make_data(2000, 5);
    const auto k = mte::Kernel::gaussian();
    mte::set_thread_count(1);
    const Eigen::MatrixXd one = mte::parallel::local_linear_at_points(d.x, d.targets, 0.05, k);
    mte::set_thread_count(3);
    const Eigen::MatrixXd three = mte::parallel::local_linear_at_points(d.x, d.targets, 0.05, k);
    mte::set_thread_count(0);
    CHECK(max_rel(one, three) < 1e-13);
}

TEST_CASE("local linear reproduces linear targets") {
    const auto d = make_data(800, 3);
    Eigen::MatrixXd lin(d.x.size(), 2);
    lin.col(0) = 2.0 - 3.0 * d.x.array();
    lin.col(1) = 0.5 * d.x;
    const Eigen::MatrixXd fit = mte::parallel::local_linear_at_points(d.x, lin, 0.1, mte::Kernel::gaussian());
    CHECK((fit - lin).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("kernel density integrates to one") {
    const auto d = make_data(3000, 9);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(2001, -0.5, 1.5);
    const Eigen::VectorXd f = mte::parallel::kernel_density(d.x, grid, 0.05, mte::Kernel::gaussian());
    const double step = grid(1) - grid(0);
    CHECK(f.sum() * step == Approx(1.0).epsilon(1e-4));
}

TEST_CASE("solve_local_quadratic flags a singular system") {
    const double s[5] = {1.0, 0.0, 0.0, 0.0, 0.0};  // all mass at one point
    const double t[3] = {2.0, 0.0, 0.0};
    CHECK_FALSE(mte::solve_local_quadratic(s, t, 0.1).solved);
}

TEST_CASE("bandwidth must be positive") {
    const auto d = make_data(100, 1);
    CHECK_THROWS_AS(mte::parallel::kernel_density(d.x, d.eval, 0.0, mte::Kernel::gaussian()), mte::Error);
    CHECK_THROWS_AS(mte::serial::kernel_density(d.x, d.eval, -1.0, mte::Kernel::gaussian()), mte::Error);
}

}  // TEST_SUITE
