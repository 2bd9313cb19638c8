#include "doctest.h"
#include "support.hpp"

#include "mte/error.hpp"
#include "mte/inference.hpp"
#include "mte/locpoly.hpp"
#include "mte/normal.hpp"
#include "mte/pipeline.hpp"
#include "mte/rng.hpp"
#include "mte/simulation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

using doctest::Approx;

namespace {

mte::ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const mte::Error& e) {
        return e.kind();
    }
    FAIL("expected an mte::Error");
    return mte::ErrorKind::IoError;
}

// Largest l with (b0 - a0) sqrt(lambda) / (2 pi h) exp(-l^2 / 2) = 1, by bisection.
double ell_oracle(double h, double a0, double b0, double lambda) {
    return testing::bisect(
        [&](double l) { return (b0 - a0) * std::sqrt(lambda) / (2.0 * M_PI * h) * std::exp(-l * l / 2.0) - 1.0; }, 0.0,
        20.0);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("level ell_n") {
    CHECK(mte::solve_ell(0.035, 0.15, 0.85, 1.5) == Approx(ell_oracle(0.035, 0.15, 0.85, 1.5)).epsilon(1e-10));
    CHECK(mte::solve_ell(0.035, 0.15, 0.85, 1.5) == Approx(1.6497).epsilon(1e-4));
    CHECK(mte::solve_ell(0.061, 0.15, 0.85, 1.5) == Approx(ell_oracle(0.061, 0.15, 0.85, 1.5)).epsilon(1e-10));
    CHECK(mte::solve_ell(0.061, 0.15, 0.85, 1.5) == Approx(1.26891).epsilon(1e-5));
    CHECK(kind_of([] { mte::solve_ell(10.0, 0.15, 0.85, 1.5); }) == mte::ErrorKind::NoRealSolution);
    CHECK(kind_of([] { mte::solve_ell(0.0, 0.15, 0.85, 1.5); }) == mte::ErrorKind::InvalidBandwidth);
}

TEST_CASE("ell_n decreases in h") {
    double prev = mte::solve_ell(0.02, 0.15, 0.85, 1.5);
    // Beyond h = 0.136 the level equation has no real root on [0.15, 0.85].
    for (double h = 0.03; h <= 0.1301; h += 0.01) {
        const double cur = mte::solve_ell(h, 0.15, 0.85, 1.5);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("critical values") {
    using M = mte::CriticalMethod;
    const double l61 = mte::solve_ell(0.061, 0.15, 0.85, 1.5);
    CHECK(mte::critical_value(M::Analytic, 0.05, l61).value == Approx(2.99).epsilon(0.005 / 2.99));
    CHECK(mte::critical_value(M::Gumbel, 0.05, l61).value == Approx(4.155).epsilon(0.005 / 4.155));
    CHECK(mte::critical_value(M::Pointwise, 0.05, 0.0).value == Approx(1.960).epsilon(1e-4));
    CHECK(mte::critical_value(M::Pointwise, 0.10, 0.0).value == Approx(1.644854).epsilon(1e-6));

    // Direct transcription of both formulas.
    const double l = 1.6497, a = 0.05;
    const double an = std::sqrt(l * l - 2.0 * std::log(std::log(std::pow(1.0 - a, -0.5))));
    const double t = -std::log(-std::log(1.0 - a) / 2.0);
    CHECK(mte::critical_value(M::Analytic, a, l).value == Approx(an).epsilon(1e-13));
    CHECK(mte::critical_value(M::Gumbel, a, l).value == Approx(l + t / l).epsilon(1e-13));
    // The Gumbel quantile solves exp(-2 e^-t) = 1 - alpha.
    CHECK(std::exp(-2.0 * std::exp(-t)) == Approx(1.0 - a).epsilon(1e-13));

    CHECK(kind_of([] { mte::critical_value(M::Analytic, 0.0, 1.0); }) == mte::ErrorKind::InvalidAlpha);
    CHECK(kind_of([] { mte::critical_value(M::Analytic, 1.0, 1.0); }) == mte::ErrorKind::InvalidAlpha);
    CHECK(kind_of([] { mte::critical_value(M::Analytic, 0.95, 0.3); }) == mte::ErrorKind::NegativeRadicand);
}

TEST_CASE("critical values from bandwidth and kernel") {
    const auto cv = mte::critical_value(mte::CriticalMethod::Analytic, 0.05, 0.061, 0.15, 0.85, mte::Kernel::gaussian());
    CHECK(cv.lambda == Approx(1.5));
    CHECK(cv.h == 0.061);
    CHECK(cv.a0 == 0.15);
    const auto tab = mte::Kernel::tabulated({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
    CHECK(kind_of([&] { mte::critical_value(mte::CriticalMethod::Analytic, 0.05, 0.05, 0.15, 0.85, tab); }) ==
          mte::ErrorKind::NonDifferentiableKernel);
    CHECK(mte::critical_value(mte::CriticalMethod::Pointwise, 0.05, 0.05, 0.15, 0.85, tab).value ==
          Approx(1.959964));
}

TEST_CASE("gumbel is never below analytic") {
    for (int ai = 1; ai <= 10; ++ai) {
        const double a = 0.01 * ai;
        for (double l = 0.5; l <= 10.0; l += 0.05) {
            const double an = mte::critical_value(mte::CriticalMethod::Analytic, a, l).value;
            const double gb = mte::critical_value(mte::CriticalMethod::Gumbel, a, l).value;
            CHECK(gb >= an);
        }
    }
}

TEST_CASE("band arithmetic") {
    const Eigen::VectorXd grid = mte::make_grid(0.2, 0.8, 5);
    const Eigen::VectorXd mte_hat = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    mte::VarianceEstimate var;
    var.s_hat = Eigen::VectorXd::Constant(5, 2.0);
    mte::CriticalValue cv;
    cv.value = 0.0;
    auto band = mte::build_band(grid, mte_hat, var, cv, 1000, 0.05);
    CHECK(band.lower == mte_hat);
    CHECK(band.upper == mte_hat);
    CHECK(band.se(0) == Approx(2.0 / std::sqrt(1000.0 * 0.05 * 0.05 * 0.05)));

    cv.value = 1.5;
    const auto one = mte::build_band(grid, mte_hat, var, cv, 1000, 0.05);
    cv.value = 3.0;
    const auto two = mte::build_band(grid, mte_hat, var, cv, 1000, 0.05);
    CHECK(((two.upper - two.lower) - 2.0 * (one.upper - one.lower)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(mte::band_nested(one, two));
    CHECK_FALSE(mte::band_nested(two, one));
}

TEST_CASE("variance estimate on simulated data") {
    const auto fit = mte::run_pipeline(mte::draw_replication(mte::SimDesign::preset("sigma1"), 7));
    const auto& k = mte::Kernel::gaussian();
    CHECK(fit.var.s_hat.minCoeff() > 0.0);
    CHECK(fit.var.f_hat.minCoeff() > 0.0);

    SUBCASE("three nested bands") {
        const auto pw = mte::make_band(fit, mte::CriticalMethod::Pointwise, 0.05, k);
        const auto an = mte::make_band(fit, mte::CriticalMethod::Analytic, 0.05, k);
        const auto gb = mte::make_band(fit, mte::CriticalMethod::Gumbel, 0.05, k);
        REQUIRE(pw.crit.value <= an.crit.value);
        REQUIRE(an.crit.value <= gb.crit.value);
        CHECK(mte::band_nested(pw, an));
        CHECK(mte::band_nested(an, gb));
    }
    SUBCASE("doubling residuals doubles s_hat") {
        const auto twice = mte::variance_from_residuals(fit.lp, fit.trimmed.p_hat, 2.0 * fit.var.residuals, k);
        CHECK((twice.s_hat - 2.0 * fit.var.s_hat).cwiseAbs().maxCoeff() < 1e-12 * fit.var.s_hat.maxCoeff());
        mte::VarianceEstimate v2 = fit.var;
        v2.s_hat = twice.s_hat;
        const auto cv = mte::critical_value(mte::CriticalMethod::Analytic, 0.05, fit.h, 0.15, 0.85, k);
        const auto b1 = mte::build_band(fit.lp.grid, fit.mte_hat, fit.var, cv, fit.n(), fit.h);
        const auto b2 = mte::build_band(fit.lp.grid, fit.mte_hat, v2, cv, fit.n(), fit.h);
        CHECK(((b2.upper - b2.mte_hat) - 2.0 * (b1.upper - b1.mte_hat)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("zero residuals give a zero-width band") {
        const auto zero = mte::variance_from_residuals(fit.lp, fit.trimmed.p_hat,
                                                       Eigen::VectorXd::Zero(fit.n()), k);
        CHECK(zero.s_hat.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("the two variance forms agree") {
        const auto s5 = mte::variance_from_residuals(fit.lp, fit.trimmed.p_hat, fit.var.residuals, k,
                                                     mte::VarianceForm::s5);
        std::vector<double> rel;
        for (Eigen::Index g = 0; g < s5.s_hat.size(); ++g)
            rel.push_back(std::abs(s5.s_hat(g) * s5.s_hat(g) / (fit.var.s_hat(g) * fit.var.s_hat(g)) - 1.0));
        CHECK(median(rel) < 0.10);
    }
}

TEST_CASE("homoskedastic uniform design matches the variance limit") {
    const Eigen::Index n = 20000;
    const double sigma = 0.5, h = 0.05;
    mte::Philox4x32 g(2024, 0, 0);
    Eigen::VectorXd p(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = g.uniform();
        y(i) = std::sin(2.0 * p(i)) + sigma * mte::norm_quantile(g.uniform());
    }
    const auto k = mte::Kernel::gaussian();
    const auto lp = mte::fit_local_quadratic(p, y, mte::make_grid(0.25, 0.75, 11), h, k);
    const auto var = mte::estimate_variance(lp, p, y, k);
    // Limit nu2 sigma^2 / (f kappa2^2) with f = 1 on (0, 1); the expectation of
    // the kernel sum is taken by quadrature rather than assuming full mass.
    const double nu2 = testing::simpson([](double u) { return u * u * testing::phi(u) * testing::phi(u); }, -10, 10);
    for (Eigen::Index j = 0; j < lp.grid.size(); ++j) {
        const double pj = lp.grid(j);
        const double mass = testing::simpson([&](double x) { return testing::phi((x - pj) / h) / h; }, 0.0, 1.0);
        const double limit = nu2 * sigma * sigma * mass;
        CHECK(var.s_hat(j) * var.s_hat(j) == Approx(limit).epsilon(0.15));
    }
}

TEST_CASE("interpolated residuals beyond the exact-refit limit") {
    const Eigen::Index n = mte::kExactResidualLimit + 500;
    mte::Philox4x32 g(5, 0, 0);
    Eigen::VectorXd p(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = g.uniform();
        y(i) = p(i) * p(i);  // quadratic, so theta0 is exact and residuals nearly vanish
    }
    const auto k = mte::Kernel::gaussian();
    const auto lp = mte::fit_local_quadratic(p, y, mte::make_grid(0.2, 0.8, 101), 0.05, k);
    const auto var = mte::estimate_variance(lp, p, y, k);
    // Linear interpolation of p^2 on a grid of step 0.006 errs by at most 2 step^2 / 8.
    CHECK(var.residuals.cwiseAbs().maxCoeff() < 2.0 * 0.006 * 0.006 / 8.0 + 1e-10);
}

TEST_CASE("density underflow") {
    Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(500, 0.1, 0.3);
    mte::LocPolyFit lp;
    lp.grid = (Eigen::VectorXd(2) << 0.2, 0.95).finished();
    lp.h = 0.02;
    lp.theta0 = Eigen::VectorXd::Zero(2);
    CHECK(kind_of([&] { mte::variance_from_residuals(lp, p, Eigen::VectorXd::Ones(500), mte::Kernel::gaussian()); }) ==
          mte::ErrorKind::DensityUnderflow);
}

TEST_CASE("name round trips") {
    for (const auto m : {mte::CriticalMethod::Analytic, mte::CriticalMethod::Gumbel, mte::CriticalMethod::Pointwise})
        CHECK(mte::critical_method_from_name(mte::critical_method_name(m)) == m);
    CHECK(mte::variance_form_from_name("s5") == mte::VarianceForm::s5);
    CHECK_THROWS_AS(mte::variance_form_from_name("s6"), mte::Error);
}

}  // TEST_SUITE
