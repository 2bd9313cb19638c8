#include "mte/pipeline.hpp"

#include "mte/error.hpp"

#include <string>

namespace mte {

void validate_region(double a0, double b0, Eigen::Index grid_size) {
    if (!(a0 > 0.0 && a0 < b0 && b0 < 1.0))
        fail(ErrorKind::InvalidArgument,
             "region must satisfy 0 < a0 < b0 < 1, got [" + std::to_string(a0) + ", " + std::to_string(b0) + "]");
    if (grid_size < 2) fail(ErrorKind::InvalidArgument, "grid needs at least 2 points");
}

PipelineResult run_pipeline(const Dataset& data, const PipelineOptions& options) {
    validate_region(options.a0, options.b0, options.grid_size);
    data.validate();

    PipelineResult out;
    out.a0 = options.a0;
    out.b0 = options.b0;
    out.propensity = fit_probit(data, options.probit);
    out.trimmed = options.trim_interval ? trim_to_interval(out.propensity, data, *options.trim_interval)
                                        : trim_to_support(out.propensity, data);
    const Dataset& kept = out.trimmed.data;
    const Eigen::VectorXd& p_hat = out.trimmed.p_hat;

    out.coef = fit_coefficients(kept, p_hat, options.kernel, options.plm);
    out.y_tilde = partial_out(kept, p_hat, out.coef);

    if (options.bandwidth) {
        out.h = *options.bandwidth;
        if (!(out.h > 0.0)) fail(ErrorKind::InvalidBandwidth, "bandwidth must be > 0");
    } else {
        out.rot = rot_bandwidth(p_hat, out.y_tilde, options.kernel, options.rot);
        out.h = out.rot->h_adj;
    }

    const Eigen::VectorXd grid = make_grid(options.a0, options.b0, options.grid_size);
    out.lp = fit_local_quadratic(p_hat, out.y_tilde, grid, out.h, options.kernel);
    out.var = estimate_variance(out.lp, p_hat, out.y_tilde, options.kernel, options.variance);

    if (options.x_eval) {
        out.x_eval = *options.x_eval;
    } else {
        out.x_eval = kept.x.colwise().mean().transpose();
    }
    out.mte_hat = mte_estimate(out.coef, out.lp, out.x_eval);
    return out;
}

MteBand make_band(const PipelineResult& fit, CriticalMethod method, double alpha, const Kernel& kernel) {
    const CriticalValue cv = critical_value(method, alpha, fit.h, fit.a0, fit.b0, kernel);
    return build_band(fit.lp.grid, fit.mte_hat, fit.var, cv, fit.n(), fit.h);
}

}  // namespace mte
