#include "mte/propensity.hpp"

#include "mte/error.hpp"
#include "mte/normal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mte {

namespace {

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd out(z.rows(), z.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(z.cols()) = z;
    return out;
}

struct ProbitTerms {
    double loglik = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd information;
    double max_abs_index = 0.0;
};

ProbitTerms probit_terms(const Eigen::MatrixXd& design, const Eigen::VectorXd& d, const Eigen::VectorXd& gamma) {
    const Eigen::VectorXd eta = design * gamma;
    const Eigen::Index n = eta.size();
    Eigen::VectorXd lam(n), w(n);
    double loglik = 0.0;
#pragma omp parallel for reduction(+ : loglik) schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        const double q = 2.0 * d(i) - 1.0;
        const double a = q * eta(i);
        const double log_cdf = norm_logcdf(a);
        // Inverse Mills ratio phi(a) / Phi(a), formed in logs for a << 0.
        const double r = std::exp(-0.5 * a * a - 0.5 * std::log(2.0 * M_PI) - log_cdf);
        loglik += log_cdf;
        lam(i) = q * r;
        w(i) = r * (r + a);
    }
    ProbitTerms out;
    out.loglik = loglik;
    out.score = design.transpose() * lam;
    out.information = design.transpose() * (design.array().colwise() * w.array()).matrix();
    out.max_abs_index = eta.cwiseAbs().maxCoeff();
    return out;
}

double clamp_open_unit(double p) {
    return std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon() / 2.0);
}

}  // namespace

Eigen::VectorXd probit_index(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& z) {
    if (gamma.size() != z.cols() + 1) fail(ErrorKind::InvalidArgument, "probit_index: coefficient length mismatch");
    return design_matrix(z) * gamma;
}

PropensityFit fit_probit(const Dataset& data, const ProbitOptions& options) {
    data.validate();
    const Eigen::MatrixXd design = design_matrix(data.z);
    const Eigen::Index n = design.rows(), k = design.cols();
    if (n <= k) fail(ErrorKind::RankDeficient, "probit: need more observations than coefficients");
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < k) fail(ErrorKind::RankDeficient, "probit: design matrix [1, Z] is rank deficient");
    }
    const double treated = data.d.sum();
    if (treated == 0.0 || treated == static_cast<double>(n))
        fail(ErrorKind::SeparationDetected, "probit: treatment is constant");

    PropensityFit fit;
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k);
    ProbitTerms terms = probit_terms(design, data.d, gamma);
    fit.loglik_path.push_back(terms.loglik);

    bool converged = false;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        fit.iterations = iter;
        if (terms.score.cwiseAbs().maxCoeff() < options.score_tolerance) {
            converged = true;
            break;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(terms.information);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().maxCoeff()) {
            if (terms.max_abs_index > options.separation_index)
                fail(ErrorKind::SeparationDetected, "probit: information matrix degenerate under separation");
            fail(ErrorKind::RankDeficient, "probit: information matrix is singular");
        }
        const Eigen::VectorXd step = ldlt.solve(terms.score);

        double scale = 1.0;
        ProbitTerms trial;
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving, scale *= 0.5) {
            trial = probit_terms(design, data.d, gamma + scale * step);
            if (std::isfinite(trial.loglik) && trial.loglik >= terms.loglik) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No ascent along the Newton direction: we are at the optimum to
            // machine precision.
            converged = true;
            break;
        }
        gamma += scale * step;
        const double previous = terms.loglik;
        terms = std::move(trial);
        fit.loglik_path.push_back(terms.loglik);

        if (terms.max_abs_index > 1.2 * options.separation_index)
            fail(ErrorKind::SeparationDetected, "probit: index diverging (perfect prediction)");
        if (std::abs(terms.loglik - previous) <= options.relative_loglik_tolerance * std::abs(previous)) {
            converged = true;
            break;
        }
    }
    if (terms.max_abs_index > options.separation_index)
        fail(ErrorKind::SeparationDetected, "probit: |gamma'z| exceeds " + std::to_string(options.separation_index) +
                                                " at convergence");
    if (!converged) fail(ErrorKind::ConvergenceFailure, "probit: Newton iteration did not converge");

    fit.gamma = gamma;
    fit.loglik = terms.loglik;
    const Eigen::VectorXd eta = design * gamma;
    fit.fitted = eta.unaryExpr([](double e) { return clamp_open_unit(norm_cdf(e)); });
    fit.support = common_support(fit.fitted, data.d);
    fit.kept.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) fit.kept[static_cast<std::size_t>(i)] = fit.support.contains(fit.fitted(i));
    return fit;
}

SupportInterval common_support(const Eigen::VectorXd& fitted, const Eigen::VectorXd& d) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double min1 = inf, max1 = -inf, min0 = inf, max0 = -inf;
    for (Eigen::Index i = 0; i < fitted.size(); ++i) {
        if (d(i) == 1.0) {
            min1 = std::min(min1, fitted(i));
            max1 = std::max(max1, fitted(i));
        } else {
            min0 = std::min(min0, fitted(i));
            max0 = std::max(max0, fitted(i));
        }
    }
    const SupportInterval s{std::max(min1, min0), std::min(max1, max0)};
    if (!(s.lo <= s.hi))
        fail(ErrorKind::NoOverlap, "treated and untreated propensity ranges do not overlap");
    return s;
}

TrimResult trim_to_interval(const PropensityFit& fit, const Dataset& data, SupportInterval interval) {
    const Eigen::Index n = data.size();
    if (fit.fitted.size() != n) fail(ErrorKind::InvalidArgument, "trim: fit and data have different lengths");
    if (!(interval.lo < interval.hi)) fail(ErrorKind::NoOverlap, "trim: empty support interval");
    std::vector<bool> keep(static_cast<std::size_t>(n));
    TrimResult out;
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool in = interval.contains(fit.fitted(i));
        keep[static_cast<std::size_t>(i)] = in;
        if (in) {
            ++kept;
        } else if (data.d(i) == 1.0) {
            ++out.dropped_treated;
        } else {
            ++out.dropped_untreated;
        }
    }
    if (kept < kMinTrimmedSample)
        fail(ErrorKind::EmptyAfterTrim, std::to_string(kept) + " observations inside the common support (need >= " +
                                            std::to_string(kMinTrimmedSample) + ")");
    out.data = data.subset(keep);
    out.p_hat.resize(kept);
    for (Eigen::Index i = 0, r = 0; i < n; ++i)
        if (keep[static_cast<std::size_t>(i)]) out.p_hat(r++) = fit.fitted(i);
    return out;
}

TrimResult trim_to_support(const PropensityFit& fit, const Dataset& data) {
    return trim_to_interval(fit, data, fit.support);
}

}  // namespace mte
