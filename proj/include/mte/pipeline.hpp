#pragma once

// The full estimator from raw data to MTE curve: probit propensity, common
// support trimming, partially linear coefficients, bandwidth, local
// quadratic fit and variance. Bands are cheap to build afterwards for any
// method and level.

#include "mte/dataset.hpp"
#include "mte/inference.hpp"
#include "mte/kernel.hpp"
#include "mte/locpoly.hpp"
#include "mte/plm.hpp"
#include "mte/propensity.hpp"

#include <Eigen/Core>

#include <optional>

namespace mte {

struct PipelineOptions {
    Kernel kernel = Kernel::gaussian();
    double a0 = 0.15;
    double b0 = 0.85;
    Eigen::Index grid_size = 101;
    std::optional<double> bandwidth;  // skips the rule of thumb when set
    RotOptions rot;
    VarianceForm variance = VarianceForm::s4;
    ProbitOptions probit;
    PlmOptions plm;
    /// Estimation sample: keep observations with p_hat in this interval
    /// instead of the common support.
    std::optional<SupportInterval> trim_interval;
    /// Where to evaluate beta_diff' x; defaults to the trimmed-sample mean of X.
    std::optional<Eigen::VectorXd> x_eval;
};

struct PipelineResult {
    PropensityFit propensity;
    TrimResult trimmed;
    CoefFit coef;
    std::optional<BandwidthChoice> rot;  // empty when the bandwidth was given
    double h = 0.0;
    Eigen::VectorXd y_tilde;
    LocPolyFit lp;
    VarianceEstimate var;
    Eigen::VectorXd x_eval;
    Eigen::VectorXd mte_hat;
    double a0 = 0.0, b0 = 0.0;

    Eigen::Index n() const { return trimmed.p_hat.size(); }
};

/// Throws InvalidArgument unless 0 < a0 < b0 < 1 and the grid has >= 2 points.
void validate_region(double a0, double b0, Eigen::Index grid_size);

PipelineResult run_pipeline(const Dataset& data, const PipelineOptions& options = {});

MteBand make_band(const PipelineResult& fit, CriticalMethod method, double alpha, const Kernel& kernel);

}  // namespace mte
