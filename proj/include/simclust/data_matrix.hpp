#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_set>
#include <vector>

#include "simclust/errors.hpp"

namespace simclust {

/// Numeric feature table over subjects. Rows are subjects, columns are
/// features; `missing(i,j)` marks cells whose value carries no meaning.
struct DataMatrix {
    Eigen::MatrixXd values;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> missing;
    std::vector<std::string> subject_ids;
    std::vector<std::string> feature_names;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }

    bool has_missing() const {
        for (Eigen::Index j = 0; j < missing.cols(); ++j)
            for (Eigen::Index i = 0; i < missing.rows(); ++i)
                if (missing(i, j)) return true;
        return false;
    }

    void validate() const {
        if (values.rows() < 1 || values.cols() < 1)
            throw data_error("DataMatrix must have at least one row and one column");
        if (missing.rows() != values.rows() || missing.cols() != values.cols())
            throw data_error("DataMatrix missing mask shape mismatch");
        if (static_cast<Eigen::Index>(subject_ids.size()) != values.rows())
            throw data_error("DataMatrix subject id count mismatch");
        if (static_cast<Eigen::Index>(feature_names.size()) != values.cols())
            throw data_error("DataMatrix feature name count mismatch");
        std::unordered_set<std::string> ids(subject_ids.begin(), subject_ids.end());
        if (ids.size() != subject_ids.size())
            throw data_error("duplicate subject ids");
        std::unordered_set<std::string> names(feature_names.begin(), feature_names.end());
        if (names.size() != feature_names.size())
            throw data_error("duplicate feature names");
    }
};

}  // namespace simclust
