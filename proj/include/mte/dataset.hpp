#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mte {

/// Observations (Y, D, X, Z). Z holds every instrument, including the
/// columns of X; the probit index is built from [1, Z].
struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXd d;  // 0/1
    Eigen::MatrixXd x;  // n x d
    Eigen::MatrixXd z;  // n x m
    std::vector<std::string> x_names;
    std::vector<std::string> z_names;

    Eigen::Index size() const { return y.size(); }

    /// Rows where keep[i] is true, in original order.
    Dataset subset(const std::vector<bool>& keep) const;

    /// Throws InvalidArgument on inconsistent shapes and NonBinaryTreatment if
    /// D has values outside {0, 1}.
    void validate() const;
};

}  // namespace mte
