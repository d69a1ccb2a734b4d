#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "diffmap/errors.hpp"

namespace diffmap {

// Rectangular table of numeric features keyed by area code. Rows follow
// area_ids; columns follow column_names.
struct FeatureMatrix {
    std::vector<std::string> area_ids;
    std::vector<std::string> column_names;
    Eigen::MatrixXd values;

    bool standardized = false;
    // Populated by standardize(): per retained column, the mean and population
    // standard deviation of the original data, and the names of columns that
    // were dropped for being constant.
    std::vector<double> column_means;
    std::vector<double> column_stds;
    std::vector<std::string> dropped_columns;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

// Centers each column and scales it to unit population standard deviation
// (denominator M, not M-1). Constant columns carry no ordering information and
// would divide by zero, so they are dropped and recorded; if every column is
// constant there is nothing left to embed and AllColumnsConstant is thrown.
// Constancy is detected as max == min, which unlike a sigma == 0 test is immune
// to rounding in the mean.
inline FeatureMatrix standardize(const FeatureMatrix& input) {
    if (input.values.rows() == 0 || input.values.cols() == 0)
        throw std::invalid_argument("standardize: empty feature matrix");
    if (static_cast<std::size_t>(input.values.rows()) != input.area_ids.size())
        throw std::invalid_argument("standardize: area_ids/rows mismatch");
    if (static_cast<std::size_t>(input.values.cols()) != input.column_names.size())
        throw std::invalid_argument("standardize: column_names/cols mismatch");
    if (!input.values.allFinite())
        throw NonFiniteInput("standardize: input contains NaN or infinity");

    const auto m = input.values.rows();
    const auto n = input.values.cols();

    std::vector<Eigen::Index> kept;
    kept.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto col = input.values.col(j);
        if (col.maxCoeff() > col.minCoeff()) kept.push_back(j);
    }

    FeatureMatrix out;
    out.area_ids = input.area_ids;
    out.standardized = true;
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool is_kept =
            std::find(kept.begin(), kept.end(), j) != kept.end();
        if (!is_kept) out.dropped_columns.push_back(input.column_names[static_cast<std::size_t>(j)]);
    }
    if (kept.empty()) {
        std::ostringstream msg;
        msg << "standardize: all " << n << " columns are constant";
        throw AllColumnsConstant(msg.str());
    }

    out.values.resize(m, static_cast<Eigen::Index>(kept.size()));
    out.column_names.reserve(kept.size());
    out.column_means.reserve(kept.size());
    out.column_stds.reserve(kept.size());
    for (std::size_t jj = 0; jj < kept.size(); ++jj) {
        const auto col = input.values.col(kept[jj]);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / static_cast<double>(m);
        const double sd = std::sqrt(var);
        out.values.col(static_cast<Eigen::Index>(jj)) = (col.array() - mean) / sd;
        out.column_names.push_back(input.column_names[static_cast<std::size_t>(kept[jj])]);
        out.column_means.push_back(mean);
        out.column_stds.push_back(sd);
    }
    return out;
}

} // namespace diffmap
