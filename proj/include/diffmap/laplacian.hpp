#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "diffmap/errors.hpp"
#include "diffmap/similarity_graph.hpp"

namespace diffmap {

// Column-normalized graph Laplacian L = I - C * S^{-1}, where C is the
// similarity matrix and S = diag(column sums of C). Every column of L sums to
// zero, so constant vectors lie in the kernel of L^T and the row-stochastic
// random walk P = C * S^{-1} preserves probability mass.
struct LaplacianMatrix {
    std::vector<std::string> area_ids;
    Eigen::SparseMatrix<double> entries;
    // Column sums of the similarity matrix (the normalizing weights).
    Eigen::VectorXd degree_vector;

    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
};

inline LaplacianMatrix build_laplacian(const SimilarityGraph& graph) {
    const Eigen::Index m = graph.weights.rows();
    if (m < 2)
        throw std::invalid_argument("build_laplacian: need at least 2 nodes");

    Eigen::VectorXd degree = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, j); it; ++it)
            degree(j) += it.value();
    for (Eigen::Index j = 0; j < m; ++j) {
        if (!(degree(j) > 0.0)) {
            std::ostringstream msg;
            msg << "build_laplacian: node " << j << " has zero degree";
            throw IsolatedNode(msg.str());
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(graph.weights.nonZeros()) +
                     static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        triplets.emplace_back(static_cast<int>(j), static_cast<int>(j), 1.0);
        for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, j); it; ++it)
            triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(j),
                                  -it.value() / degree(j));
    }

    LaplacianMatrix lap;
    lap.area_ids = graph.area_ids;
    lap.degree_vector = degree;
    lap.entries.resize(m, m);
    lap.entries.setFromTriplets(triplets.begin(), triplets.end());
    lap.entries.makeCompressed();
    return lap;
}

// Symmetric matrix similar to L: Lsym = S^{-1/2} L S^{1/2} = I - S^{-1/2} C S^{-1/2}.
// Shares L's eigenvalues; an eigenvector u of Lsym maps back to S^{1/2} u for L.
// Entry-wise, Lsym_ij = L_ij * sqrt(s_j / s_i).
inline Eigen::SparseMatrix<double> symmetrized_form(const LaplacianMatrix& lap) {
    const Eigen::Index m = lap.entries.rows();
    Eigen::VectorXd inv_sqrt(m), sqrt_deg(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        sqrt_deg(i) = std::sqrt(lap.degree_vector(i));
        inv_sqrt(i) = 1.0 / sqrt_deg(i);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(lap.entries.nonZeros()));
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(lap.entries, j); it; ++it) {
            const Eigen::Index i = it.row();
            const double v = i == j ? it.value() : it.value() * sqrt_deg(j) * inv_sqrt(i);
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        }
    Eigen::SparseMatrix<double> sym(m, m);
    sym.setFromTriplets(triplets.begin(), triplets.end());
    // Symmetry can be off by one ulp from the two multiplication orders; the
    // eigensolvers assume it exactly, so average the halves.
    Eigen::SparseMatrix<double> symT = sym.transpose();
    sym = 0.5 * (sym + symT);
    sym.makeCompressed();
    return sym;
}

} // namespace diffmap
