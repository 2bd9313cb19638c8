#pragma once

#include "mte/dataset.hpp"
#include "mte/inference.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mte {

/// A column computed from others after parsing.
///   experience(age, educ)  ->  age - educ - 6
///   sq100(col)             ->  col^2 / 100
struct DerivedColumn {
    std::string name;
    std::string function;
    std::vector<std::string> args;

    /// Parses "name:function(arg1,arg2)".
    static DerivedColumn parse(const std::string& spec);
};

struct ColumnMap {
    std::string y;
    std::string d;
    std::vector<std::string> x;
    /// Instruments. Every X column is an instrument too and is prepended
    /// when missing here.
    std::vector<std::string> z;
    /// When set, D = 1{column >= threshold} instead of a 0/1 column.
    std::optional<double> d_threshold;
    std::vector<DerivedColumn> derived;
};

struct IngestResult {
    Dataset data;
    Eigen::Index rows_read = 0;
    Eigen::Index dropped = 0;  // rows with a missing or non-numeric mapped field
};

/// Header row required; "", "NA", "NaN" and "." count as missing. Throws
/// IoError, MissingColumn, NonBinaryTreatment or EmptyData.
IngestResult ingest_csv(const std::string& path, const ColumnMap& map);
IngestResult ingest_csv(std::istream& in, const ColumnMap& map);

void write_band_csv(std::ostream& os, const MteBand& band);

struct BandTable {
    Eigen::VectorXd p, mte_hat, se, lower, upper;
};

BandTable read_band_csv(std::istream& in);

/// {n, h, ell_n, lambda, method, alpha, region: [a0, b0], crit} plus
/// whatever extra members the caller passes as a JSON object text.
std::string band_metadata_json(const MteBand& band, const std::string& extra_json = "{}");

}  // namespace mte
