#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffmap/errors.hpp"

namespace diffmap {

// Sparse symmetric graph of reciprocal-distance similarities. An edge (i, j)
// survives thresholding when j is among the k nearest neighbours of i or i is
// among the k nearest of j, so every node has degree at least k.
struct SimilarityGraph {
    std::vector<std::string> area_ids;
    Eigen::SparseMatrix<double> weights;
    std::size_t k_neighbors = 0;

    std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }
};

struct SimilarityOptions {
    // Identical rows give distance zero and an infinite similarity. By default
    // that is an error; with clamping the zero is replaced by 1e-6 times the
    // smallest positive distance, keeping the pair maximally similar but finite.
    bool clamp_coincident = false;
};

namespace detail {

// Indices of the k nearest neighbours of row i, ties broken toward the smaller
// index so the graph does not depend on the order distances were produced in.
inline std::vector<Eigen::Index> nearest_k(const Eigen::MatrixXd& d, Eigen::Index i,
                                           std::size_t k) {
    const Eigen::Index m = d.rows();
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(m) - 1);
    for (Eigen::Index j = 0; j < m; ++j)
        if (j != i) order.push_back(j);
    const auto kth = order.begin() + static_cast<std::ptrdiff_t>(k);
    std::partial_sort(order.begin(), kth, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                          if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
                          return a < b;
                      });
    order.resize(k);
    return order;
}

} // namespace detail

// Builds the thresholded similarity graph from a dense symmetric distance
// matrix. Weights are 1/distance; edges outside the union of per-node k-nearest
// sets are removed.
inline SimilarityGraph build_similarity_graph(const Eigen::MatrixXd& distances,
                                              std::vector<std::string> area_ids,
                                              std::size_t k_neighbors,
                                              const SimilarityOptions& options = {}) {
    const Eigen::Index m = distances.rows();
    if (m != distances.cols())
        throw std::invalid_argument("build_similarity_graph: distance matrix not square");
    if (m < 2)
        throw std::invalid_argument("build_similarity_graph: need at least 2 nodes");
    if (!area_ids.empty() && area_ids.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("build_similarity_graph: area_ids/size mismatch");
    if (k_neighbors < 1 || k_neighbors > static_cast<std::size_t>(m) - 1)
        throw std::invalid_argument("build_similarity_graph: k_neighbors out of range [1, size-1]");
    if (!distances.allFinite())
        throw NonFiniteInput("build_similarity_graph: distances contain NaN or infinity");

    // Coincident rows surface here as exact zeros off the diagonal.
    std::vector<std::pair<std::size_t, std::size_t>> zero_pairs;
    double min_positive = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double dij = distances(i, j);
            if (dij < 0.0)
                throw std::invalid_argument("build_similarity_graph: negative distance");
            if (dij == 0.0)
                zero_pairs.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            else
                min_positive = std::min(min_positive, dij);
        }
    }

    Eigen::MatrixXd d = distances;
    if (!zero_pairs.empty()) {
        if (!options.clamp_coincident) {
            std::ostringstream msg;
            msg << "build_similarity_graph: " << zero_pairs.size()
                << " coincident row pair(s), first (" << zero_pairs.front().first << ", "
                << zero_pairs.front().second << ")";
            throw CoincidentRows(msg.str(), std::move(zero_pairs));
        }
        if (!std::isfinite(min_positive))
            throw CoincidentRows("build_similarity_graph: all rows coincident", std::move(zero_pairs));
        const double floor = min_positive * 1e-6;
        for (const auto& [i, j] : zero_pairs) {
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = floor;
            d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = floor;
        }
    }

    std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < m; ++i)
        neighbours[static_cast<std::size_t>(i)] = detail::nearest_k(d, i, k_neighbors);

    // Union of the directed k-nearest sets, stored as i < j pairs.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
    edges.reserve(static_cast<std::size_t>(m) * k_neighbors);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j : neighbours[static_cast<std::size_t>(i)])
            edges.emplace_back(std::min(i, j), std::max(i, j));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edges.size() * 2);
    for (const auto& [i, j] : edges) {
        const double w = 1.0 / d(i, j);
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
        triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), w);
    }

    SimilarityGraph graph;
    graph.area_ids = std::move(area_ids);
    graph.k_neighbors = k_neighbors;
    graph.weights.resize(m, m);
    graph.weights.setFromTriplets(triplets.begin(), triplets.end());
    graph.weights.makeCompressed();

    for (Eigen::Index j = 0; j < m; ++j) {
        if (graph.weights.outerIndexPtr()[j + 1] == graph.weights.outerIndexPtr()[j]) {
            std::ostringstream msg;
            msg << "build_similarity_graph: node " << j << " has no edges";
            throw IsolatedNode(msg.str());
        }
    }
    return graph;
}

// Number of connected components, by breadth-first traversal of the weight
// pattern. Equals the multiplicity of the Laplacian's zero eigenvalue.
inline std::size_t count_components(const SimilarityGraph& graph) {
    const Eigen::Index m = graph.weights.rows();
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::size_t components = 0;
    std::vector<Eigen::Index> stack;
    for (Eigen::Index start = 0; start < m; ++start) {
        if (seen[static_cast<std::size_t>(start)]) continue;
        ++components;
        stack.push_back(start);
        seen[static_cast<std::size_t>(start)] = 1;
        while (!stack.empty()) {
            const Eigen::Index u = stack.back();
            stack.pop_back();
            for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, u); it; ++it) {
                const Eigen::Index v = it.row();
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    return components;
}

} // namespace diffmap
