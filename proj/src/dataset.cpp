#include "mte/dataset.hpp"

#include "mte/error.hpp"

namespace mte {

Dataset Dataset::subset(const std::vector<bool>& keep) const {
    const Eigen::Index n = size();
    if (static_cast<Eigen::Index>(keep.size()) != n) fail(ErrorKind::InvalidArgument, "subset: mask length mismatch");
    std::vector<Eigen::Index> rows;
    rows.reserve(keep.size());
    for (Eigen::Index i = 0; i < n; ++i)
        if (keep[static_cast<std::size_t>(i)]) rows.push_back(i);

    Dataset out;
    out.x_names = x_names;
    out.z_names = z_names;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.y.resize(m);
    out.d.resize(m);
    out.x.resize(m, x.cols());
    out.z.resize(m, z.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = rows[static_cast<std::size_t>(r)];
        out.y(r) = y(i);
        out.d(r) = d(i);
        out.x.row(r) = x.row(i);
        out.z.row(r) = z.row(i);
    }
    return out;
}

void Dataset::validate() const {
    const Eigen::Index n = size();
    if (n == 0) fail(ErrorKind::EmptyData, "dataset has no rows");
    if (d.size() != n || x.rows() != n || z.rows() != n)
        fail(ErrorKind::InvalidArgument, "dataset columns have inconsistent lengths");
    for (Eigen::Index i = 0; i < n; ++i)
        if (d(i) != 0.0 && d(i) != 1.0)
            fail(ErrorKind::NonBinaryTreatment, "treatment value " + std::to_string(d(i)) + " at row " +
                                                    std::to_string(i) + " is not 0/1");
}

}  // namespace mte
