#include "doctest.h"

#include "mte/error.hpp"
#include "mte/inference.hpp"
#include "mte/locpoly.hpp"
#include "mte/normal.hpp"
#include "mte/pipeline.hpp"
#include "mte/rng.hpp"
#include "mte/simulation.hpp"

#include <Eigen/Dense>

#include <cmath>

using doctest::Approx;

namespace {

Eigen::VectorXd scores(Eigen::Index n, std::uint64_t seed) {
    mte::Philox4x32 g(seed, 0, 0);
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = mte::norm_cdf(0.9 * mte::norm_quantile(g.uniform()));
    return p;
}

mte::ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const mte::Error& e) {
        return e.kind();
    }
    FAIL("expected an mte::Error");
    return mte::ErrorKind::IoError;
}

}  // namespace

TEST_SUITE("locpoly") {

TEST_CASE("quadratic data is reproduced exactly") {
    const Eigen::VectorXd p = scores(2000, 1);
    const Eigen::VectorXd y = p.array().square();
    const Eigen::VectorXd grid = (Eigen::VectorXd(1) << 0.5).finished();
    for (const double h : {0.02, 0.05, 0.3, 2.0}) {
        const auto fit = mte::fit_local_quadratic(p, y, grid, h, mte::Kernel::gaussian());
        CHECK(std::abs(fit.theta0(0) - 0.25) < 1e-8);
        CHECK(std::abs(fit.theta1(0) - 1.0) < 1e-8);
        CHECK(std::abs(fit.theta2(0) - 1.0) < 1e-8);
    }
    // Any quadratic, any grid, both kernels.
    const Eigen::VectorXd q = 0.3 - 2.0 * p.array() + 5.0 * p.array().square();
    const Eigen::VectorXd g2 = mte::make_grid(0.2, 0.8, 31);
    for (const auto& k : {mte::Kernel::gaussian(), mte::Kernel::quartic()}) {
        const auto fit = mte::fit_local_quadratic(p, q, g2, 0.1, k);
        for (Eigen::Index g = 0; g < g2.size(); ++g) {
            const double x = g2(g);
            CHECK(std::abs(fit.theta0(g) - (0.3 - 2.0 * x + 5.0 * x * x)) < 1e-8);
            CHECK(std::abs(fit.theta1(g) - (-2.0 + 10.0 * x)) < 1e-8);
            CHECK(std::abs(fit.theta2(g) - 5.0) < 1e-8);
        }
    }
}

TEST_CASE("constant data") {
    const Eigen::VectorXd p = scores(1000, 2);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1000, 7.0);
    const auto fit = mte::fit_local_quadratic(p, y, mte::make_grid(0.2, 0.8, 11), 0.05, mte::Kernel::gaussian());
    CHECK((fit.theta0.array() - 7.0).abs().maxCoeff() < 1e-10);
    CHECK(fit.theta1.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("shifting data and grid together leaves the fit unchanged") {
    const Eigen::VectorXd p = 0.5 * scores(1500, 3);
    const Eigen::VectorXd y = (6.0 * p.array()).sin();
    const Eigen::VectorXd grid = mte::make_grid(0.1, 0.4, 21);
    const double c = 0.25;
    const auto a = mte::fit_local_quadratic(p, y, grid, 0.04, mte::Kernel::gaussian());
    const auto b = mte::fit_local_quadratic(p.array() + c, y, grid.array() + c, 0.04, mte::Kernel::gaussian());
    CHECK((a.theta0 - b.theta0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.theta1 - b.theta1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.theta2 - b.theta2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a huge bandwidth approaches the global quadratic fit") {
    const Eigen::VectorXd p = scores(800, 4);
    const Eigen::VectorXd y = (3.0 * p.array()).sin();
    Eigen::MatrixXd v(p.size(), 3);
    v.col(0).setOnes();
    v.col(1) = p;
    v.col(2) = p.array().square();
    const Eigen::VectorXd c = v.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd grid = mte::make_grid(0.2, 0.8, 7);
    const auto fit = mte::fit_local_quadratic(p, y, grid, 100.0, mte::Kernel::gaussian());
    for (Eigen::Index g = 0; g < grid.size(); ++g)
        CHECK(std::abs(fit.theta0(g) - (c(0) + c(1) * grid(g) + c(2) * grid(g) * grid(g))) < 1e-6);
}

TEST_CASE("sparse windows are rejected") {
    const Eigen::VectorXd p = scores(300, 5);
    const Eigen::VectorXd y = p;
    CHECK(kind_of([&] { mte::fit_local_quadratic(p, y, mte::make_grid(0.2, 0.8, 5), 0.0005, mte::Kernel::gaussian()); }) ==
          mte::ErrorKind::InsufficientLocalMass);
    CHECK(kind_of([&] { mte::fit_local_quadratic(p, y, mte::make_grid(0.2, 0.8, 5), 0.0, mte::Kernel::gaussian()); }) ==
          mte::ErrorKind::InvalidBandwidth);
    const Eigen::VectorXd bad = (Eigen::VectorXd(2) << 0.5, 0.4).finished();
    CHECK(kind_of([&] { mte::fit_local_quadratic(p, y, bad, 0.1, mte::Kernel::gaussian()); }) ==
          mte::ErrorKind::InvalidArgument);
    const Eigen::VectorXd outside = (Eigen::VectorXd(2) << 0.5, 1.0).finished();
    CHECK(kind_of([&] { mte::fit_local_quadratic(p, y, outside, 0.1, mte::Kernel::gaussian()); }) ==
          mte::ErrorKind::InvalidArgument);
}

TEST_CASE("rule-of-thumb bandwidth") {
    const Eigen::VectorXd p = scores(3000, 6);
    SUBCASE("cubic data has a finite bandwidth") {
        const Eigen::VectorXd y = p.array().cube();
        const auto bw = mte::rot_bandwidth(p, y, mte::Kernel::gaussian());
        CHECK(std::isfinite(bw.h_rot));
        CHECK(bw.h_rot > 0.0);
        CHECK(bw.h_adj == Approx(bw.h_rot * std::pow(3000.0, -1.0 / 91.0)).epsilon(1e-12));
        CHECK(bw.eta > 1.0 / 7.0);
        CHECK(bw.eta < 1.0 / 6.0);
    }
    SUBCASE("quadratic data has no curvature") {
        const Eigen::VectorXd y = 1.0 + p.array().square();
        CHECK(kind_of([&] { mte::rot_bandwidth(p, y, mte::Kernel::gaussian()); }) ==
              mte::ErrorKind::DegenerateCurvature);
        mte::RotOptions opt;
        opt.allow_fallback = true;
        const auto bw = mte::rot_bandwidth(p, y, mte::Kernel::gaussian(), opt);
        CHECK(bw.used_fallback);
        CHECK(bw.h_adj > 0.0);
    }
    SUBCASE("constant comes from the equivalent kernel") {
        const auto bw = mte::rot_bandwidth(p, p.array().cube(), mte::Kernel::gaussian());
        CHECK(bw.constant == Approx(mte::equivalent_kernel_constant(mte::Kernel::gaussian(), 1, 2)));
    }
    CHECK(kind_of([&] { mte::rot_bandwidth(p.head(20), p.head(20), mte::Kernel::gaussian()); }) ==
          mte::ErrorKind::InvalidArgument);
}

TEST_CASE("mte assembly") {
    mte::LocPolyFit lp;
    lp.theta1 = Eigen::VectorXd::Zero(4);
    mte::CoefFit coef;
    coef.beta_diff = Eigen::Vector2d(0.3, 0.3);
    CHECK((mte::mte_estimate(coef, lp, Eigen::Vector2d(1.0, 1.0)).array() - 0.6).abs().maxCoeff() < 1e-15);
    lp.theta1 = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
    CHECK(mte::mte_estimate(coef, lp, Eigen::Vector2d::Zero()) == lp.theta1);
    CHECK_THROWS_AS(mte::mte_estimate(coef, lp, Eigen::Vector3d::Zero()), mte::Error);
}

TEST_CASE("slope of Lambda tracks the closed form on a simulated design") {
    auto design = mte::SimDesign::preset("sigma2");
    const auto data = mte::draw_replication(design, 0);
    const auto fit = mte::run_pipeline(data);
    const auto band = mte::make_band(fit, mte::CriticalMethod::Pointwise, 0.05, mte::Kernel::gaussian());
    const Eigen::Index mid = fit.lp.grid.size() / 2;
    REQUIRE(fit.lp.grid(mid) == Approx(0.5));
    // Lambda'(0.5) = -0.5 * Phi^-1(0.5) = 0.
    CHECK(std::abs(fit.lp.theta1(mid)) < 3.0 * band.se(mid));
}

}  // TEST_SUITE
