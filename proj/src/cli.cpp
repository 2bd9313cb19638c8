#include "mte/cli.hpp"

#include "mte/error.hpp"
#include "mte/io.hpp"
#include "mte/pipeline.hpp"
#include "mte/simulation.hpp"
#include "mte/smoother.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mte {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flat key = value config file. Keys are long option names without the
// dashes and apply to whichever subcommand is running; flags given on the
// command line take precedence.
class FlatConfig : public CLI::ConfigINI {
public:
    explicit FlatConfig(const CLI::App* app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigINI::from_config(input);
        const auto subs = app_->get_subcommands();
        if (!subs.empty())
            for (auto& item : items)
                if (item.parents.empty()) item.parents = {subs.front()->get_name()};
        return items;
    }

private:
    const CLI::App* app_;
};

struct Common {
    std::vector<double> region{0.15, 0.85};
    std::string kernel = "gaussian";
    int threads = 0;
    bool json = false;
};

struct EstimateArgs {
    std::string input;
    std::string out = ".";
    std::string y = "y", d = "d";
    std::vector<std::string> x, z, derive;
    std::optional<double> d_threshold;
    std::vector<double> support;
    double alpha = 0.05;
    std::optional<double> bandwidth;
    int grid = 101;
    int pilot_degree = 8;
    std::vector<std::string> methods{"pointwise", "analytic", "gumbel"};
    std::string variance = "s4";
};

struct CritvalArgs {
    double bandwidth = 0.0;
    double alpha = 0.05;
    std::optional<long> n;
};

struct SimulateArgs {
    std::string design = "sigma1";
    long n = 3000;
    long reps = 100;
    std::uint64_t seed = 1;
    std::vector<double> alphas{0.10, 0.05};
    int grid = 101;
    int pilot_degree = 8;
    std::string variance = "s4";
    bool noiseless = false;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--region", c.region, "Inference region a0 b0")->expected(2)->capture_default_str();
    cmd->add_option("--kernel", c.kernel, "gaussian or quartic")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads (0 = runtime default)");
    cmd->add_flag("--json", c.json, "Print a JSON summary instead of text");
}

std::vector<CriticalMethod> parse_methods(const std::vector<std::string>& names) {
    std::vector<CriticalMethod> out;
    for (const auto& m : names) out.push_back(critical_method_from_name(m));
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    f << content;
    if (!f) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Counts of treated and untreated observations per propensity decile, with a
// bar for each arm.
void print_support_summary(std::ostream& out, const Eigen::VectorXd& p, const Eigen::VectorXd& d) {
    std::array<long, 10> treated{}, untreated{};
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(p(i) * 10.0));
        (d(i) == 1.0 ? treated : untreated)[bin]++;
    }
    long peak = 1;
    for (std::size_t b = 0; b < 10; ++b) peak = std::max({peak, treated[b], untreated[b]});
    out << "propensity support (treated | untreated)\n";
    for (std::size_t b = 0; b < 10; ++b) {
        const auto bar = [peak](long c) { return std::string(static_cast<std::size_t>(30 * c / peak), '#'); };
        char label[64];
        std::snprintf(label, sizeof label, "  [%.1f,%.1f%c %6ld %6ld  ", 0.1 * static_cast<double>(b),
                      0.1 * static_cast<double>(b + 1), b == 9 ? ']' : ')', treated[b], untreated[b]);
        out << label << std::left << std::setw(30) << bar(treated[b]) << " | " << bar(untreated[b]) << '\n';
    }
}

int cmd_estimate(const Common& c, const EstimateArgs& a, std::ostream& out) {
    ColumnMap map;
    map.y = a.y;
    map.d = a.d;
    map.x = a.x;
    map.z = a.z;
    map.d_threshold = a.d_threshold;
    for (const auto& spec : a.derive) map.derived.push_back(DerivedColumn::parse(spec));
    const IngestResult ingest = ingest_csv(a.input, map);

    PipelineOptions opt;
    opt.kernel = Kernel::from_name(c.kernel);
    opt.a0 = c.region[0];
    opt.b0 = c.region[1];
    opt.grid_size = a.grid;
    opt.bandwidth = a.bandwidth;
    opt.rot.pilot_degree = a.pilot_degree;
    opt.variance = variance_form_from_name(a.variance);
    if (!a.support.empty()) {
        if (a.support.size() != 2) fail(ErrorKind::InvalidArgument, "--support takes two values");
        opt.trim_interval = SupportInterval{a.support[0], a.support[1]};
    }
    const auto methods = parse_methods(a.methods);
    const PipelineResult fit = run_pipeline(ingest.data, opt);

    fs::create_directories(a.out);
    json summary;
    summary["rows_read"] = ingest.rows_read;
    summary["dropped_missing"] = ingest.dropped;
    summary["n_complete"] = ingest.data.size();
    summary["n_kept"] = fit.n();
    summary["support"] = {fit.propensity.support.lo, fit.propensity.support.hi};
    const auto kept = opt.trim_interval.value_or(fit.propensity.support);
    summary["trim_interval"] = {kept.lo, kept.hi};
    summary["distinct_p_hat"] = [&] {
        std::vector<double> v(fit.trimmed.p_hat.data(), fit.trimmed.p_hat.data() + fit.n());
        std::sort(v.begin(), v.end());
        return std::unique(v.begin(), v.end()) - v.begin();
    }();
    summary["gamma"] = vec_json(fit.propensity.gamma);
    summary["beta0"] = vec_json(fit.coef.beta0);
    summary["beta1"] = vec_json(fit.coef.beta1);
    summary["beta_diff"] = vec_json(fit.coef.beta_diff);
    summary["x_eval"] = vec_json(fit.x_eval);
    summary["h"] = fit.h;
    summary["bandwidth_source"] = fit.rot ? "rule_of_thumb" : "user";
    if (fit.rot) summary["h_rot"] = fit.rot->h_rot;
    summary["kernel"] = opt.kernel.name();
    summary["variance"] = std::string(variance_form_name(opt.variance));

    json bands = json::array();
    for (const auto m : methods) {
        const MteBand band = make_band(fit, m, a.alpha, opt.kernel);
        const std::string stem = "band_" + std::string(critical_method_name(m));
        std::ostringstream csv;
        write_band_csv(csv, band);
        write_file(fs::path(a.out) / (stem + ".csv"), csv.str());
        json extra = summary;
        extra.erase("gamma");
        write_file(fs::path(a.out) / (stem + ".json"), band_metadata_json(band, extra.dump()) + "\n");
        bands.push_back({{"method", critical_method_name(m)},
                         {"crit", band.crit.value},
                         {"ell_n", band.crit.ell_n},
                         {"csv", (fs::path(a.out) / (stem + ".csv")).string()}});
    }
    summary["bands"] = bands;

    if (c.json) {
        out << summary.dump(2) << '\n';
        return 0;
    }
    out << std::setprecision(6);
    out << "rows read " << ingest.rows_read << ", dropped (missing) " << ingest.dropped << ", kept after trimming "
        << fit.n() << " (dropped treated " << fit.trimmed.dropped_treated << ", untreated "
        << fit.trimmed.dropped_untreated << ")\n";
    out << "common support [" << fit.propensity.support.lo << ", " << fit.propensity.support.hi << "]";
    if (opt.trim_interval) out << ", trimmed to [" << opt.trim_interval->lo << ", " << opt.trim_interval->hi << "]";
    out << '\n';
    print_support_summary(out, fit.propensity.fitted, ingest.data.d);
    out << "beta_diff";
    for (Eigen::Index j = 0; j < fit.coef.beta_diff.size(); ++j)
        out << ' ' << ingest.data.x_names[static_cast<std::size_t>(j)] << '=' << fit.coef.beta_diff(j);
    out << "\nbandwidth " << fit.h << (fit.rot ? " (rule of thumb)" : " (user)") << '\n';
    for (const auto& b : bands)
        out << std::left << std::setw(10) << b["method"].get<std::string>() << " crit " << b["crit"].get<double>()
            << "  -> " << b["csv"].get<std::string>() << '\n';
    return 0;
}

int cmd_critval(const Common& c, const CritvalArgs& a, std::ostream& out) {
    validate_region(c.region[0], c.region[1], 2);
    const Kernel kernel = Kernel::from_name(c.kernel);
    const double lambda = kernel.lambda();
    const double ell = solve_ell(a.bandwidth, c.region[0], c.region[1], lambda);
    const auto an = critical_value(CriticalMethod::Analytic, a.alpha, ell);
    const auto gb = critical_value(CriticalMethod::Gumbel, a.alpha, ell);
    const auto pw = critical_value(CriticalMethod::Pointwise, a.alpha, ell);
    if (c.json) {
        json j{{"h", a.bandwidth},   {"region", c.region},   {"kernel", kernel.name()},
               {"alpha", a.alpha},   {"lambda", lambda},     {"ell_n", ell},
               {"analytic", an.value}, {"gumbel", gb.value}, {"pointwise", pw.value}};
        if (a.n) j["n"] = *a.n;
        out << j.dump(2) << '\n';
        return 0;
    }
    out << std::setprecision(6);
    out << "kernel " << kernel.name() << ", h " << a.bandwidth << ", region [" << c.region[0] << ", " << c.region[1]
        << "], alpha " << a.alpha;
    if (a.n) out << ", n " << *a.n;
    out << "\nlambda     " << lambda << "\nell_n      " << ell << "\nanalytic   " << an.value << "\ngumbel     "
        << gb.value << "\npointwise  " << pw.value << '\n';
    return 0;
}

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
    SimDesign design = SimDesign::preset(a.design);
    design.n = a.n;
    design.reps = a.reps;
    design.seed = a.seed;
    design.alpha_levels = a.alphas;
    design.a0 = c.region[0];
    design.b0 = c.region[1];
    design.grid_size = a.grid;
    design.noiseless = a.noiseless;
    SimulationOptions opt;
    opt.kernel = Kernel::from_name(c.kernel);
    opt.variance = variance_form_from_name(a.variance);
    opt.rot.pilot_degree = a.pilot_degree;
    const CoverageReport report = run_coverage(design, opt);

    std::ostringstream csv, table;
    write_coverage_csv(csv, report);
    write_coverage_table(table, report);
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_file(fs::path(a.out) / "coverage.csv", csv.str());
        write_file(fs::path(a.out) / "coverage.txt", table.str());
    }
    if (c.json) {
        json rows = json::array();
        for (const auto& r : report.rows)
            rows.push_back({{"method", critical_method_name(r.method)},
                            {"alpha", r.alpha},
                            {"coverage", r.coverage},
                            {"mean_crit", r.mean_crit},
                            {"coverage_coarse", r.coverage_coarse},
                            {"coverage_fine", r.coverage_fine}});
        out << json{{"design", report.design}, {"n", report.n},           {"reps", report.reps},
                    {"used", report.used},     {"mean_h", report.mean_h}, {"failures", report.failures},
                    {"rows", rows}}
                   .dump(2)
            << '\n';
    } else {
        out << table.str();
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Uniform confidence bands for marginal treatment effects", "mte");
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key = value file; command-line flags win");
    app.config_formatter(std::make_shared<FlatConfig>(&app));

    Common common;
    EstimateArgs est;
    CritvalArgs crit;
    SimulateArgs sim;

    auto* e = app.add_subcommand("estimate", "Estimate the MTE and its bands from a CSV file")->fallthrough();
    add_common(e, common);
    e->add_option("--input", est.input, "CSV file with a header row")->required();
    e->add_option("--out", est.out, "Output directory")->capture_default_str();
    e->add_option("--y", est.y, "Outcome column")->capture_default_str();
    e->add_option("--d", est.d, "Treatment column")->capture_default_str();
    e->add_option("--x", est.x, "Covariate columns")->delimiter(',')->required();
    e->add_option("--z", est.z, "Instrument columns (covariates are added)")->delimiter(',');
    e->add_option("--d-threshold", est.d_threshold, "Treatment is 1{d >= threshold}");
    e->add_option("--derive", est.derive, "Derived column name:function(args)");
    e->add_option("--support", est.support, "Keep observations with p_hat in [lo, hi] instead of the common support")
        ->expected(2);
    e->add_option("--alpha", est.alpha)->capture_default_str();
    e->add_option("--bandwidth", est.bandwidth, "Override the rule-of-thumb bandwidth");
    e->add_option("--grid", est.grid, "Grid points on the region")->capture_default_str();
    e->add_option("--pilot-degree", est.pilot_degree, "Degree of the bandwidth pilot polynomial")
        ->capture_default_str();
    e->add_option("--methods", est.methods, "analytic, gumbel, pointwise")->delimiter(',');
    e->add_option("--variance", est.variance, "s4 or s5")->capture_default_str();

    auto* c = app.add_subcommand("critval", "Critical values from a bandwidth and region")->fallthrough();
    add_common(c, common);
    c->add_option("--bandwidth", crit.bandwidth)->required();
    c->add_option("--alpha", crit.alpha)->capture_default_str();
    c->add_option("--n", crit.n, "Sample size (reported only)");

    auto* s = app.add_subcommand("simulate", "Monte Carlo coverage of the three bands")->fallthrough();
    add_common(s, common);
    s->add_option("--design", sim.design, "sigma1, sigma2 or sigma3")->capture_default_str();
    s->add_option("--n", sim.n)->capture_default_str();
    s->add_option("--reps", sim.reps)->capture_default_str();
    s->add_option("--seed", sim.seed)->capture_default_str();
    s->add_option("--alpha", sim.alphas, "One or more levels")->delimiter(',');
    s->add_option("--grid", sim.grid)->capture_default_str();
    s->add_option("--pilot-degree", sim.pilot_degree)->capture_default_str();
    s->add_option("--variance", sim.variance)->capture_default_str();
    s->add_flag("--noiseless", sim.noiseless, "Drop the outcome errors");
    s->add_option("--out", sim.out, "Directory for coverage.csv and coverage.txt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (common.threads > 0) set_thread_count(common.threads);
        if (e->parsed()) return cmd_estimate(common, est, out);
        if (c->parsed()) return cmd_critval(common, crit, out);
        return cmd_simulate(common, sim, out);
    } catch (const Error& ex) {
        err << "error: " << ex.name() << ": " << ex.what() << '\n';
        return exit_code(ex.kind());
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
}

}  // namespace mte
