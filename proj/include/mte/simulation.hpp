#pragma once

// Monte Carlo design with two regressors and two excluded instruments:
//   (X1, X2, Z1, Z2) ~ N(0, I4),  (U0, U1, UD) ~ N(0, Sigma)
//   D  = 1{0.7 X1 + 0.5 X2 + 0.4 Z1 + 0.3 Z2 > UD}
//   Y1 = 0.8 X1 + 0.4 X2 + U1,  Y0 = 0.5 X1 + 0.1 X2 + U0
// so that MTE(p, x) = 0.3 x1 + 0.3 x2 + (Sigma[UD,U1] - Sigma[UD,U0]) Phi^-1(p).

#include "mte/dataset.hpp"
#include "mte/inference.hpp"
#include "mte/kernel.hpp"
#include "mte/locpoly.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mte {

struct SimDesign {
    std::string name = "custom";
    Eigen::Matrix3d sigma = Eigen::Matrix3d::Identity();  // order (U0, U1, UD)
    Eigen::Index n = 3000;
    Eigen::Index reps = 100;
    std::uint64_t seed = 1;
    std::vector<double> alpha_levels{0.10, 0.05};
    double a0 = 0.15;
    double b0 = 0.85;
    Eigen::Index grid_size = 101;
    /// Outcomes without U0 and U1 (each equals its conditional mean given X
    /// when Sigma has no outcome/selection covariance).
    bool noiseless = false;

    /// "sigma1", "sigma2" or "sigma3".
    static SimDesign preset(std::string_view name);

    /// Throws NotSPD unless sigma is symmetric positive definite with unit
    /// diagonal, InvalidArgument on bad sizes, region or alpha levels.
    void validate() const;
};

struct SimulatedSample {
    Dataset data;
    Eigen::MatrixXd u;  // n x 3 unobservables (U0, U1, UD)
};

/// Deterministic in (design.seed, rep_index); independent across rep_index.
SimulatedSample simulate_sample(const SimDesign& design, Eigen::Index rep_index);

/// simulate_sample(...).data
Dataset draw_replication(const SimDesign& design, Eigen::Index rep_index);

/// Sigma[UD,U1] - Sigma[UD,U0], the slope of the MTE in Phi^-1(p).
double true_mte_slope(const SimDesign& design);

/// x may be empty (treated as zero) or hold (x1, x2).
double true_mte(const SimDesign& design, double p, const Eigen::VectorXd& x = {});

struct SimulationOptions {
    Kernel kernel = Kernel::gaussian();
    std::vector<CriticalMethod> methods{CriticalMethod::Pointwise, CriticalMethod::Analytic, CriticalMethod::Gumbel};
    VarianceForm variance = VarianceForm::s4;
    RotOptions rot;
    /// Abort with TooManyFailures when more than this share of replications fails.
    double max_failure_rate = 0.05;
};

struct CoverageRow {
    CriticalMethod method = CriticalMethod::Analytic;
    double alpha = 0.05;
    double coverage = 0.0;  // sup coverage on the design grid
    double mean_crit = 0.0;
    double mean_h = 0.0;
    // Same check on coarser and finer grids over the same region.
    double coverage_coarse = 0.0;
    double coverage_fine = 0.0;
    Eigen::Index coarse_points = 0;
    Eigen::Index fine_points = 0;
};

struct CoverageReport {
    std::string design;
    Eigen::Index n = 0;
    Eigen::Index reps = 0;
    Eigen::Index used = 0;  // replications that completed
    std::vector<std::string> failures;  // "rep <i>: <ErrorName>: <message>"
    std::vector<CoverageRow> rows;
    std::vector<double> bandwidths;  // per completed replication, in rep order
    double mean_h = 0.0;
    double median_variance_gap = 0.0;  // mean over reps of median |s5/s4 - 1| on the grid

    const CoverageRow& row(CriticalMethod method, double alpha) const;
};

CoverageReport run_coverage(const SimDesign& design, const SimulationOptions& options = {});

void write_coverage_csv(std::ostream& os, const CoverageReport& report);
void write_coverage_table(std::ostream& os, const CoverageReport& report);

}  // namespace mte
