#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "diffmap/errors.hpp"

namespace diffmap {

// Dense symmetric matrix of pairwise Euclidean distances between rows.
// Distances are computed pair-by-pair as sqrt(||r_i - r_j||^2) rather than via
// the Gram-matrix expansion: the expansion loses ~8 digits to cancellation and
// cannot return an exact zero for identical rows, which downstream coincidence
// detection relies on.
inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 2)
        throw std::invalid_argument("pairwise_distances: need at least 2 rows");
    if (!rows.allFinite())
        throw NonFiniteInput("pairwise_distances: input contains NaN or infinity");

    const Eigen::Index m = rows.rows();
    // Column-major storage makes row access strided; one transposed copy turns
    // every point into a contiguous column and the pair loop into pure
    // sequential reads.
    const Eigen::MatrixXd points = rows.transpose();
    Eigen::MatrixXd d(m, m);
    d.diagonal().setZero();

#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double dist = std::sqrt((points.col(i) - points.col(j)).squaredNorm());
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

} // namespace diffmap
