#include "mte/io.hpp"

#include "mte/error.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>
#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace mte {

namespace {

using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    try {
        for (auto tok : Tokenizer(line)) {
            boost::algorithm::trim(tok);
            out.push_back(std::move(tok));
        }
    } catch (const boost::escaped_list_error& e) {
        fail(ErrorKind::IoError, std::string("malformed CSV line: ") + e.what());
    }
    return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "."; }

std::optional<double> parse_number(const std::string& s) {
    if (is_missing(s)) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

double apply_derived(const DerivedColumn& dc, const std::vector<double>& args) {
    if (dc.function == "experience") return args[0] - args[1] - 6.0;
    return args[0] * args[0] / 100.0;  // sq100
}

void check_derived(const DerivedColumn& dc) {
    const std::size_t want = dc.function == "experience" ? 2 : dc.function == "sq100" ? 1 : 0;
    if (want == 0)
        fail(ErrorKind::InvalidArgument, "unknown derived function '" + dc.function + "' (experience or sq100)");
    if (dc.args.size() != want)
        fail(ErrorKind::InvalidArgument, "derived column '" + dc.name + "': " + dc.function + " takes " +
                                             std::to_string(want) + " argument(s)");
}

}  // namespace

DerivedColumn DerivedColumn::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    const auto open = spec.find('(', colon == std::string::npos ? 0 : colon);
    const auto close = spec.rfind(')');
    if (colon == std::string::npos || open == std::string::npos || close == std::string::npos || close < open ||
        colon == 0)
        fail(ErrorKind::InvalidArgument, "derived column spec '" + spec + "' is not name:function(args)");
    DerivedColumn dc;
    dc.name = boost::algorithm::trim_copy(spec.substr(0, colon));
    dc.function = boost::algorithm::trim_copy(spec.substr(colon + 1, open - colon - 1));
    std::stringstream args(spec.substr(open + 1, close - open - 1));
    for (std::string a; std::getline(args, a, ',');) dc.args.push_back(boost::algorithm::trim_copy(a));
    check_derived(dc);
    return dc;
}

IngestResult ingest_csv(const std::string& path, const ColumnMap& map) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open '" + path + "'");
    return ingest_csv(in, map);
}

IngestResult ingest_csv(std::istream& in, const ColumnMap& map) {
    if (map.y.empty() || map.d.empty() || map.x.empty())
        fail(ErrorKind::InvalidArgument, "column map needs y, d and at least one x column");

    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::EmptyData, "input has no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);

    // Column slots: raw file columns first, then derived ones in order.
    std::map<std::string, std::size_t> slot;
    for (std::size_t j = 0; j < header.size(); ++j) slot.emplace(header[j], j);
    std::vector<std::vector<std::size_t>> derived_args;
    for (const auto& dc : map.derived) {
        check_derived(dc);
        std::vector<std::size_t> idx;
        for (const auto& a : dc.args) {
            const auto it = slot.find(a);
            if (it == slot.end()) fail(ErrorKind::MissingColumn, "column '" + a + "' (used by " + dc.name + ") not found");
            idx.push_back(it->second);
        }
        derived_args.push_back(std::move(idx));
        slot[dc.name] = header.size() + derived_args.size() - 1;
    }

    std::vector<std::string> z_names = map.x;
    for (const auto& z : map.z)
        if (std::find(z_names.begin(), z_names.end(), z) == z_names.end()) z_names.push_back(z);

    const auto locate = [&slot](const std::string& name) {
        const auto it = slot.find(name);
        if (it == slot.end()) fail(ErrorKind::MissingColumn, "column '" + name + "' not found");
        return it->second;
    };
    const std::size_t y_col = locate(map.y), d_col = locate(map.d);
    std::vector<std::size_t> x_cols, z_cols;
    for (const auto& x : map.x) x_cols.push_back(locate(x));
    for (const auto& z : z_names) z_cols.push_back(locate(z));

    IngestResult out;
    std::vector<double> ys, ds, xs, zs;
    std::vector<std::optional<double>> values(header.size() + map.derived.size());
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (boost::algorithm::trim_copy(line).empty()) continue;
        ++out.rows_read;
        const auto fields = split_csv_line(line);
        for (std::size_t j = 0; j < header.size(); ++j)
            values[j] = j < fields.size() ? parse_number(fields[j]) : std::nullopt;
        for (std::size_t k = 0; k < map.derived.size(); ++k) {
            std::vector<double> args;
            for (const auto j : derived_args[k]) {
                if (!values[j]) break;
                args.push_back(*values[j]);
            }
            values[header.size() + k] =
                args.size() == derived_args[k].size() ? std::optional<double>(apply_derived(map.derived[k], args))
                                                       : std::nullopt;
        }
        bool complete = values[y_col] && values[d_col];
        for (const auto j : z_cols) complete = complete && values[j].has_value();
        if (!complete) {
            ++out.dropped;
            continue;
        }
        double d = *values[d_col];
        if (map.d_threshold) {
            d = d >= *map.d_threshold ? 1.0 : 0.0;
        } else if (d != 0.0 && d != 1.0) {
            fail(ErrorKind::NonBinaryTreatment, "treatment column '" + map.d + "' has value " + fields[d_col] +
                                                    " on data row " + std::to_string(out.rows_read));
        }
        ys.push_back(*values[y_col]);
        ds.push_back(d);
        for (const auto j : x_cols) xs.push_back(*values[j]);
        for (const auto j : z_cols) zs.push_back(*values[j]);
    }
    if (ys.empty()) fail(ErrorKind::EmptyData, "no complete rows in input");

    const auto n = static_cast<Eigen::Index>(ys.size());
    const auto kx = static_cast<Eigen::Index>(x_cols.size()), kz = static_cast<Eigen::Index>(z_cols.size());
    Dataset& data = out.data;
    data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    data.d = Eigen::Map<Eigen::VectorXd>(ds.data(), n);
    data.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), n, kx);
    data.z = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(zs.data(), n, kz);
    data.x_names = map.x;
    data.z_names = z_names;
    return out;
}

void write_band_csv(std::ostream& os, const MteBand& band) {
    std::ostringstream body;
    body << std::setprecision(17);
    body << "p,mte_hat,se,lower,upper\n";
    for (Eigen::Index g = 0; g < band.grid.size(); ++g)
        body << band.grid(g) << ',' << band.mte_hat(g) << ',' << band.se(g) << ',' << band.lower(g) << ','
             << band.upper(g) << '\n';
    os << body.str();
}

BandTable read_band_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::IoError, "band file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_csv_line(line) != std::vector<std::string>{"p", "mte_hat", "se", "lower", "upper"})
        fail(ErrorKind::IoError, "band file header must be p,mte_hat,se,lower,upper");
    std::vector<double> cols[5];
    while (std::getline(in, line)) {
        if (boost::algorithm::trim_copy(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) fail(ErrorKind::IoError, "band row does not have 5 fields: " + line);
        for (int j = 0; j < 5; ++j) {
            const auto v = parse_number(fields[static_cast<std::size_t>(j)]);
            if (!v) fail(ErrorKind::IoError, "non-numeric band field: " + line);
            cols[j].push_back(*v);
        }
    }
    const auto vec = [](const std::vector<double>& v) {
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    return {vec(cols[0]), vec(cols[1]), vec(cols[2]), vec(cols[3]), vec(cols[4])};
}

std::string band_metadata_json(const MteBand& band, const std::string& extra_json) {
    nlohmann::json j = nlohmann::json::parse(extra_json);
    if (!j.is_object()) fail(ErrorKind::InvalidArgument, "metadata extras must be a JSON object");
    j["n"] = band.n;
    j["h"] = band.h;
    j["ell_n"] = band.crit.ell_n;
    j["lambda"] = band.crit.lambda;
    j["method"] = std::string(critical_method_name(band.crit.method));
    j["alpha"] = band.crit.alpha;
    j["region"] = {band.crit.a0, band.crit.b0};
    j["crit"] = band.crit.value;
    return j.dump(2);
}

}  // namespace mte
