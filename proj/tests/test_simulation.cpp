#include "doctest.h"
#include "support.hpp"

#include "mte/error.hpp"
#include "mte/normal.hpp"
#include "mte/simulation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

using doctest::Approx;

namespace {

double sample_cov(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() / static_cast<double>(a.size() - 1);
}

// E[U1 - U0 | UD = Phi^-1(p)] by integrating w against the joint normal
// density of (W, UD), W = U1 - U0.
double conditional_gap(const Eigen::Matrix3d& s, double p) {
    const double u = mte::norm_quantile(p);
    const double vw = s(0, 0) + s(1, 1) - 2.0 * s(0, 1);
    const double c = s(2, 1) - s(2, 0);
    const double det = vw - c * c;
    const auto density = [&](double w) { return std::exp(-0.5 * (w * w - 2.0 * c * w * u + vw * u * u) / det); };
    const double r = 12.0 * std::sqrt(vw);
    const double num = testing::simpson([&](double w) { return w * density(w); }, -r, r, 40000);
    const double den = testing::simpson(density, -r, r, 40000);
    return num / den;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("closed-form slopes") {
    CHECK(mte::true_mte_slope(mte::SimDesign::preset("sigma1")) == 0.5);
    CHECK(mte::true_mte_slope(mte::SimDesign::preset("sigma2")) == -0.5);
    CHECK(mte::true_mte_slope(mte::SimDesign::preset("sigma3")) == 0.0);
}

TEST_CASE("true MTE against the conditional expectation") {
    for (const char* name : {"sigma1", "sigma2", "sigma3"}) {
        const auto d = mte::SimDesign::preset(name);
        for (const double p : {0.2, 0.5, 0.8}) {
            CAPTURE(name);
            CAPTURE(p);
            CHECK(std::abs(mte::true_mte(d, p) - conditional_gap(d.sigma, p)) < 1e-6);
        }
    }
    const auto s2 = mte::SimDesign::preset("sigma2");
    CHECK(mte::true_mte(s2, mte::norm_cdf(1.0)) == Approx(-0.5).epsilon(1e-12));
    CHECK(mte::true_mte(s2, 0.8413) == Approx(-0.5).epsilon(1e-3));
    CHECK(mte::true_mte(mte::SimDesign::preset("sigma3"), 0.3) == 0.0);
    CHECK(mte::true_mte(mte::SimDesign::preset("sigma1"), 0.5) == 0.0);
    CHECK(mte::true_mte(mte::SimDesign::preset("sigma1"), 0.6) > mte::true_mte(mte::SimDesign::preset("sigma1"), 0.4));
    CHECK(mte::true_mte(s2, 0.5, Eigen::Vector2d(1.0, 1.0)) == Approx(0.6));
}

TEST_CASE("unobservables have the design covariance") {
    auto d = mte::SimDesign::preset("sigma1");
    d.n = 1000000;
    const auto s = mte::simulate_sample(d, 0);
    CHECK(std::abs(sample_cov(s.u.col(1), s.u.col(2)) - 0.8) < 0.005);
    CHECK(std::abs(sample_cov(s.u.col(0), s.u.col(2)) - 0.3) < 0.005);

    auto d3 = mte::SimDesign::preset("sigma3");
    d3.n = 1000000;
    const auto s3 = mte::simulate_sample(d3, 0);
    CHECK(std::abs(sample_cov(s3.u.col(1) - s3.u.col(0), s3.u.col(2))) < 0.005);
}

TEST_CASE("outcomes follow the potential-outcome equations") {
    auto d = mte::SimDesign::preset("sigma2");
    d.n = 200;
    const auto s = mte::simulate_sample(d, 5);
    const auto& x = s.data.x;
    for (Eigen::Index i = 0; i < d.n; ++i) {
        const double y1 = 0.8 * x(i, 0) + 0.4 * x(i, 1) + s.u(i, 1);
        const double y0 = 0.5 * x(i, 0) + 0.1 * x(i, 1) + s.u(i, 0);
        CHECK(s.data.y(i) == Approx(s.data.d(i) == 1.0 ? y1 : y0).epsilon(1e-14));
        const auto& z = s.data.z;
        CHECK(s.data.d(i) == (0.7 * z(i, 0) + 0.5 * z(i, 1) + 0.4 * z(i, 2) + 0.3 * z(i, 3) > s.u(i, 2) ? 1.0 : 0.0));
    }
}

TEST_CASE("replications are deterministic") {
    auto d = mte::SimDesign::preset("sigma3");
    d.n = 500;
    const auto a = mte::draw_replication(d, 9), b = mte::draw_replication(d, 9), c = mte::draw_replication(d, 10);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
    CHECK(a.y != c.y);
}

TEST_CASE("design validation") {
    auto d = mte::SimDesign::preset("sigma1");
    d.sigma(0, 1) = d.sigma(1, 0) = 0.99;
    d.sigma(0, 2) = d.sigma(2, 0) = -0.9;
    d.sigma(1, 2) = d.sigma(2, 1) = 0.9;
    try {
        d.validate();
        FAIL("expected NotSPD");
    } catch (const mte::Error& e) {
        CHECK(e.kind() == mte::ErrorKind::NotSPD);
    }
    auto e = mte::SimDesign::preset("sigma1");
    e.sigma(0, 0) = 2.0;
    CHECK_THROWS_AS(e.validate(), mte::Error);
    CHECK_THROWS_AS(mte::SimDesign::preset("sigma4"), mte::Error);
}

TEST_CASE("coverage run is deterministic and ordered") {
    auto d = mte::SimDesign::preset("sigma1");
    d.reps = 6;
    d.seed = 3;
    const auto a = mte::run_coverage(d);
    const auto b = mte::run_coverage(d);
    std::ostringstream ca, cb;
    mte::write_coverage_csv(ca, a);
    mte::write_coverage_csv(cb, b);
    CHECK(ca.str() == cb.str());
    CHECK(a.used == 6);
    CHECK(a.mean_h > 0.0);
    for (const double alpha : d.alpha_levels) {
        const double pw = a.row(mte::CriticalMethod::Pointwise, alpha).coverage;
        const double an = a.row(mte::CriticalMethod::Analytic, alpha).coverage;
        const double gb = a.row(mte::CriticalMethod::Gumbel, alpha).coverage;
        CHECK(pw <= an);
        CHECK(an <= gb);
        for (const auto& r : a.rows) {
            CHECK(r.coverage >= 0.0);
            CHECK(r.coverage <= 1.0);
            // A finer grid can only miss more.
            CHECK(r.coverage_fine <= r.coverage);
            CHECK(r.coverage <= r.coverage_coarse);
        }
    }
    std::ostringstream table;
    mte::write_coverage_table(table, a);
    CHECK(table.str().find("analytic") != std::string::npos);
}

TEST_CASE("noiseless outcomes under sigma3") {
    auto d = mte::SimDesign::preset("sigma3");
    d.reps = 1;
    d.noiseless = true;
    const auto r = mte::run_coverage(d);
    REQUIRE(r.used == 1);
    // Y equal to its conditional mean still leaves (D - p) X beta_diff in the
    // partially linear regression, so the bands keep a positive width and
    // the pointwise band is not guaranteed to cover.
    for (const auto& row : r.rows) {
        if (row.method == mte::CriticalMethod::Pointwise) continue;
        CAPTURE(mte::critical_method_name(row.method));
        CAPTURE(row.alpha);
        CHECK(row.coverage == 1.0);
    }
}

TEST_CASE("too many failed replications") {
    auto d = mte::SimDesign::preset("sigma1");
    d.n = 50;  // trimming always leaves fewer than 50 rows
    d.reps = 4;
    try {
        mte::run_coverage(d);
        FAIL("expected TooManyFailures");
    } catch (const mte::Error& e) {
        CHECK(e.kind() == mte::ErrorKind::TooManyFailures);
    }
}

}  // TEST_SUITE
