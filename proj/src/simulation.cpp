#include "mte/simulation.hpp"

#include "mte/error.hpp"
#include "mte/normal.hpp"
#include "mte/pipeline.hpp"
#include "mte/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>

namespace mte {

SimDesign SimDesign::preset(std::string_view name) {
    SimDesign d;
    d.name = std::string(name);
    if (name == "sigma1") {
        d.sigma << 1.0, 0.5, 0.3,
                   0.5, 1.0, 0.8,
                   0.3, 0.8, 1.0;
    } else if (name == "sigma2") {
        d.sigma << 1.0, 0.5, 0.8,
                   0.5, 1.0, 0.3,
                   0.8, 0.3, 1.0;
    } else if (name == "sigma3") {
        d.sigma << 1.0, 0.3, 0.0,
                   0.3, 1.0, 0.0,
                   0.0, 0.0, 1.0;
    } else {
        fail(ErrorKind::InvalidArgument, "unknown design '" + std::string(name) + "' (sigma1, sigma2 or sigma3)");
    }
    return d;
}

void SimDesign::validate() const {
    if (n < kMinTrimmedSample) fail(ErrorKind::InvalidArgument, "design n must be at least 50");
    if (reps < 1) fail(ErrorKind::InvalidArgument, "design needs at least one replication");
    if (!(a0 > 0.0 && a0 < b0 && b0 < 1.0)) fail(ErrorKind::InvalidArgument, "design region must satisfy 0 < a0 < b0 < 1");
    if (grid_size < 2) fail(ErrorKind::InvalidArgument, "design grid needs at least 2 points");
    if (alpha_levels.empty()) fail(ErrorKind::InvalidArgument, "design needs at least one alpha level");
    for (const double a : alpha_levels)
        if (!(a > 0.0 && a < 1.0)) fail(ErrorKind::InvalidAlpha, "alpha levels must lie in (0, 1)");
    if (!sigma.isApprox(sigma.transpose(), 0.0) || (sigma.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
        fail(ErrorKind::NotSPD, "Sigma must be symmetric with unit diagonal");
    if (Eigen::LLT<Eigen::Matrix3d>(sigma).info() != Eigen::Success)
        fail(ErrorKind::NotSPD, "Sigma is not positive definite");
}

SimulatedSample simulate_sample(const SimDesign& design, Eigen::Index rep_index) {
    const Eigen::LLT<Eigen::Matrix3d> llt(design.sigma);
    if (llt.info() != Eigen::Success) fail(ErrorKind::NotSPD, "Sigma is not positive definite");
    const Eigen::Matrix3d L = llt.matrixL();

    Philox4x32 rng(design.seed, static_cast<std::uint32_t>(rep_index), 0);
    const auto normal = [&rng] { return norm_quantile(rng.uniform()); };

    const Eigen::Index n = design.n;
    SimulatedSample sample;
    sample.u.resize(n, 3);
    Dataset& data = sample.data;
    data.y.resize(n);
    data.d.resize(n);
    data.x.resize(n, 2);
    data.z.resize(n, 4);
    data.x_names = {"x1", "x2"};
    data.z_names = {"x1", "x2", "z1", "z2"};
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Vector4d xz;
        for (int j = 0; j < 4; ++j) xz(j) = normal();
        Eigen::Vector3d e;
        for (int j = 0; j < 3; ++j) e(j) = normal();
        const Eigen::Vector3d u = L * e;
        sample.u.row(i) = u.transpose();
        const double d = 0.7 * xz(0) + 0.5 * xz(1) + 0.4 * xz(2) + 0.3 * xz(3) > u(2) ? 1.0 : 0.0;
        const double noise1 = design.noiseless ? 0.0 : u(1);
        const double noise0 = design.noiseless ? 0.0 : u(0);
        const double y1 = 0.8 * xz(0) + 0.4 * xz(1) + noise1;
        const double y0 = 0.5 * xz(0) + 0.1 * xz(1) + noise0;
        data.y(i) = d * y1 + (1.0 - d) * y0;
        data.d(i) = d;
        data.x.row(i) = xz.head<2>().transpose();
        data.z.row(i) = xz.transpose();
    }
    return sample;
}

Dataset draw_replication(const SimDesign& design, Eigen::Index rep_index) {
    return simulate_sample(design, rep_index).data;
}

double true_mte_slope(const SimDesign& design) { return design.sigma(2, 1) - design.sigma(2, 0); }

double true_mte(const SimDesign& design, double p, const Eigen::VectorXd& x) {
    double linear = 0.0;
    if (x.size() == 2) {
        linear = 0.3 * x(0) + 0.3 * x(1);
    } else if (x.size() != 0) {
        fail(ErrorKind::InvalidArgument, "true_mte: x must have 2 entries");
    }
    return linear + true_mte_slope(design) * norm_quantile(p);
}

const CoverageRow& CoverageReport::row(CriticalMethod method, double alpha) const {
    for (const auto& r : rows)
        if (r.method == method && std::abs(r.alpha - alpha) < 1e-12) return r;
    fail(ErrorKind::InvalidArgument, "coverage report has no row for that method and alpha");
}

namespace {

// Outcome of one replication, one slot per (method, alpha) pair.
struct RepOutcome {
    bool ok = false;
    std::string error;
    double h = 0.0;
    double variance_gap = 0.0;
    std::vector<double> crit;
    std::vector<char> covered, covered_coarse, covered_fine;
};

bool covers(const MteBand& band, const Eigen::VectorXd& truth, Eigen::Index stride) {
    for (Eigen::Index g = 0; g < band.grid.size(); g += stride)
        if (truth(g) < band.lower(g) || truth(g) > band.upper(g)) return false;
    return true;
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

}  // namespace

CoverageReport run_coverage(const SimDesign& design, const SimulationOptions& options) {
    design.validate();
    if (options.methods.empty()) fail(ErrorKind::InvalidArgument, "run_coverage: no methods requested");

    // Fit once on a grid twice as fine; the design grid is every second
    // point and the coarse grid every fourth (when the spacing allows).
    const Eigen::Index G = design.grid_size;
    const Eigen::Index fine_size = 2 * (G - 1) + 1;
    const bool has_coarse = (G - 1) % 2 == 0;

    PipelineOptions popt;
    popt.kernel = options.kernel;
    popt.a0 = design.a0;
    popt.b0 = design.b0;
    popt.grid_size = fine_size;
    popt.rot = options.rot;
    popt.variance = options.variance;
    popt.x_eval.reset();

    struct Slot {
        CriticalMethod method;
        double alpha;
    };
    std::vector<Slot> slots;
    for (const auto m : options.methods)
        for (const double a : design.alpha_levels) slots.push_back({m, a});

    const Eigen::VectorXd fine_grid = make_grid(design.a0, design.b0, fine_size);
    Eigen::VectorXd truth(fine_size);
    for (Eigen::Index g = 0; g < fine_size; ++g) truth(g) = true_mte(design, fine_grid(g));

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(design.reps));
    const auto reps = static_cast<long>(design.reps);

#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < reps; ++r) {
        RepOutcome& out = outcomes[static_cast<std::size_t>(r)];
        try {
            const Dataset data = draw_replication(design, r);
            const PipelineResult fit = run_pipeline(data, popt);
            out.h = fit.h;
            const VarianceEstimate alt =
                variance_from_residuals(fit.lp, fit.trimmed.p_hat, fit.var.residuals, options.kernel,
                                        options.variance == VarianceForm::s4 ? VarianceForm::s5 : VarianceForm::s4);
            std::vector<double> gaps;
            for (Eigen::Index g = 0; g < fine_size; g += 2) {
                const double s4 = options.variance == VarianceForm::s4 ? fit.var.s_hat(g) : alt.s_hat(g);
                const double s5 = options.variance == VarianceForm::s4 ? alt.s_hat(g) : fit.var.s_hat(g);
                gaps.push_back(std::abs(s5 * s5 / (s4 * s4) - 1.0));
            }
            out.variance_gap = median(std::move(gaps));
            for (const auto& slot : slots) {
                const MteBand band = make_band(fit, slot.method, slot.alpha, options.kernel);
                out.crit.push_back(band.crit.value);
                out.covered.push_back(covers(band, truth, 2));
                out.covered_coarse.push_back(has_coarse && covers(band, truth, 4));
                out.covered_fine.push_back(covers(band, truth, 1));
            }
            out.ok = true;
        } catch (const Error& e) {
            out.error = std::string(e.name()) + ": " + e.what();
        } catch (const std::exception& e) {
            out.error = std::string("InternalError: ") + e.what();
        }
    }

    CoverageReport report;
    report.design = design.name;
    report.n = design.n;
    report.reps = design.reps;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        if (!outcomes[r].ok) report.failures.push_back("rep " + std::to_string(r) + ": " + outcomes[r].error);
    }
    const auto failed = static_cast<double>(report.failures.size());
    if (failed > options.max_failure_rate * static_cast<double>(design.reps)) {
        std::string msg = std::to_string(report.failures.size()) + " of " + std::to_string(design.reps) +
                          " replications failed";
        if (!report.failures.empty()) msg += "; first: " + report.failures.front();
        fail(ErrorKind::TooManyFailures, msg);
    }

    // Ordered reduction over replications, so results do not depend on the
    // thread schedule.
    std::vector<double> crit_sum(slots.size(), 0.0);
    std::vector<Eigen::Index> hits(slots.size(), 0), hits_coarse(slots.size(), 0), hits_fine(slots.size(), 0);
    double h_sum = 0.0, gap_sum = 0.0;
    for (const auto& out : outcomes) {
        if (!out.ok) continue;
        ++report.used;
        h_sum += out.h;
        gap_sum += out.variance_gap;
        report.bandwidths.push_back(out.h);
        for (std::size_t s = 0; s < slots.size(); ++s) {
            crit_sum[s] += out.crit[s];
            hits[s] += out.covered[s];
            hits_coarse[s] += out.covered_coarse[s];
            hits_fine[s] += out.covered_fine[s];
        }
    }
    const double used = static_cast<double>(report.used);
    report.mean_h = h_sum / used;
    report.median_variance_gap = gap_sum / used;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        CoverageRow row;
        row.method = slots[s].method;
        row.alpha = slots[s].alpha;
        row.coverage = static_cast<double>(hits[s]) / used;
        row.mean_crit = crit_sum[s] / used;
        row.mean_h = report.mean_h;
        row.coverage_coarse = has_coarse ? static_cast<double>(hits_coarse[s]) / used : std::nan("");
        row.coverage_fine = static_cast<double>(hits_fine[s]) / used;
        row.coarse_points = has_coarse ? (G - 1) / 2 + 1 : 0;
        row.fine_points = fine_size;
        report.rows.push_back(row);
    }
    return report;
}

void write_coverage_csv(std::ostream& os, const CoverageReport& report) {
    std::ostringstream body;
    body << std::setprecision(17);
    body << "design,n,reps,used,method,alpha,coverage,mean_crit,mean_h,coverage_coarse,coarse_points,coverage_fine,"
            "fine_points\n";
    for (const auto& r : report.rows) {
        body << report.design << ',' << report.n << ',' << report.reps << ',' << report.used << ','
             << critical_method_name(r.method) << ',' << r.alpha << ',' << r.coverage << ',' << r.mean_crit << ','
             << r.mean_h << ',' << r.coverage_coarse << ',' << r.coarse_points << ',' << r.coverage_fine << ','
             << r.fine_points << '\n';
    }
    os << body.str();
}

void write_coverage_table(std::ostream& os, const CoverageReport& report) {
    std::vector<double> alphas;
    for (const auto& r : report.rows)
        if (std::find(alphas.begin(), alphas.end(), r.alpha) == alphas.end()) alphas.push_back(r.alpha);
    std::sort(alphas.begin(), alphas.end());

    char line[256];
    os << "design " << report.design << ", n = " << report.n << ", " << report.used << " of " << report.reps
       << " replications used\n";
    os << "mean bandwidth " << std::setprecision(6) << report.mean_h << "\n\n";
    std::snprintf(line, sizeof line, "%-10s", "method");
    os << line;
    for (const double a : alphas) {
        std::snprintf(line, sizeof line, "  cov %-6g  crit %-6g", 1.0 - a, 1.0 - a);
        os << line;
    }
    os << '\n';
    std::vector<CriticalMethod> seen;
    for (const auto& r : report.rows) {
        if (std::find(seen.begin(), seen.end(), r.method) != seen.end()) continue;
        seen.push_back(r.method);
        std::snprintf(line, sizeof line, "%-10s", std::string(critical_method_name(r.method)).c_str());
        os << line;
        for (const double a : alphas) {
            const auto& x = report.row(r.method, a);
            std::snprintf(line, sizeof line, "  %-10.6g  %-11.6g", x.coverage, x.mean_crit);
            os << line;
        }
        os << '\n';
    }
    if (!report.failures.empty()) {
        os << '\n' << report.failures.size() << " replications failed:\n";
        for (const auto& f : report.failures) os << "  " << f << '\n';
    }
}

}  // namespace mte
