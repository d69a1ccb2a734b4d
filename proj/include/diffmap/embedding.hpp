#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffmap/errors.hpp"
#include "diffmap/laplacian.hpp"

namespace diffmap {

// Eigenpairs of the column-normalized Laplacian, ascending by eigenvalue. The
// first n_components eigenvalues are zero to within zero_tolerance (one per
// connected component); the remaining columns are the embedding coordinates.
// Eigenvectors are unit 2-norm with the largest-magnitude entry positive.
struct SpectralEmbedding {
    std::vector<std::string> area_ids;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    double zero_tolerance = 0.0;
    std::size_t n_components = 0;

    std::size_t n_nonzero() const {
        return static_cast<std::size_t>(eigenvalues.size()) - n_components;
    }
};

// One embedding coordinate (or any per-area series) aligned with area_ids.
struct AreaVector {
    std::vector<std::string> area_ids;
    Eigen::VectorXd values;
};

struct EmbeddingOptions {
    // Problems at or below this size are solved densely; larger ones use the
    // deflated Lanczos iteration.
    std::size_t dense_cutoff = 500;
    // Lanczos convergence: residual of a Ritz pair relative to the largest
    // eigenvalue estimate.
    double residual_tol = 1e-11;
    std::size_t max_basis = 300;
    std::size_t max_restarts = 200;
    std::uint64_t lanczos_seed = 0x9e3779b97f4a7c15ull;
};

namespace detail {

// Orients v so its largest-magnitude component is positive; the first such
// component wins ties, so the result does not depend on solver round-off in
// equal-magnitude entries.
inline void fix_sign(Eigen::VectorXd& v) {
    Eigen::Index at = 0;
    double best = std::abs(v(0));
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best) {
            best = a;
            at = i;
        }
    }
    if (v(at) < 0.0) v = -v;
}

inline std::uniform_real_distribution<double>::result_type unit_draw(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

inline Eigen::VectorXd random_vector(Eigen::Index m, std::mt19937_64& rng) {
    Eigen::VectorXd v(m);
    for (Eigen::Index i = 0; i < m; ++i) v(i) = unit_draw(rng);
    return v;
}

// Removes the components of w along each column of Q (locked eigenvectors)
// and each of the first j columns of V (the Lanczos basis). Two passes keep
// the result orthogonal to working precision even when w nearly lies in the
// spanned space.
inline void orthogonalize(Eigen::VectorXd& w, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& V, Eigen::Index j) {
    for (int pass = 0; pass < 2; ++pass) {
        if (Q.cols() > 0) w.noalias() -= Q * (Q.transpose() * w);
        if (j > 0)
            w.noalias() -= V.leftCols(j) * (V.leftCols(j).transpose() * w);
    }
}

struct RitzPair {
    double value = 0.0;
    Eigen::VectorXd vector;
    bool converged = false;
};

// Lanczos iteration with full reorthogonalization for the smallest eigenpair
// of the symmetric operator A restricted to the orthogonal complement of the
// columns of Q. Restarts from the best Ritz vector when the basis fills up.
inline RitzPair lanczos_smallest(const Eigen::SparseMatrix<double>& A,
                                 const Eigen::MatrixXd& Q, double tol,
                                 const EmbeddingOptions& opts, std::mt19937_64& rng) {
    const Eigen::Index m = A.rows();
    const Eigen::Index basis_cap =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(opts.max_basis), m);

    Eigen::VectorXd start = random_vector(m, rng);

    RitzPair best;
    for (std::size_t restart = 0; restart <= opts.max_restarts; ++restart) {
        Eigen::MatrixXd V(m, basis_cap);
        Eigen::VectorXd alpha(basis_cap), beta(basis_cap);

        Eigen::VectorXd v = start;
        orthogonalize(v, Q, V, 0);
        double nrm = v.norm();
        while (nrm < 1e-8) {
            v = random_vector(m, rng);
            orthogonalize(v, Q, V, 0);
            nrm = v.norm();
        }
        v /= nrm;

        Eigen::Index j = 0;
        for (; j < basis_cap; ++j) {
            V.col(j) = v;
            Eigen::VectorXd w = A * v;
            alpha(j) = v.dot(w);
            w.noalias() -= alpha(j) * v;
            if (j > 0) w.noalias() -= beta(j - 1) * V.col(j - 1);
            orthogonalize(w, Q, V, j + 1);
            beta(j) = w.norm();

            const bool breakdown = beta(j) < 1e-13;
            const bool check = j < 64 || j % 8 == 7 || j + 1 == basis_cap || breakdown;
            if (check) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
                tri.computeFromTridiagonal(alpha.head(j + 1), beta.head(j),
                                           Eigen::ComputeEigenvectors);
                const Eigen::VectorXd s = tri.eigenvectors().col(0);
                const double theta = tri.eigenvalues()(0);
                const double residual = beta(j) * std::abs(s(j));
                best.value = theta;
                best.vector.noalias() = V.leftCols(j + 1) * s;
                if (residual <= tol) {
                    best.converged = true;
                    // One clean-up projection: the assembled Ritz vector can
                    // pick up locked-space components of order residual.
                    orthogonalize(best.vector, Q, V, 0);
                    best.vector.normalize();
                    return best;
                }
            }
            if (breakdown) {
                // Invariant subspace without convergence: continue the basis
                // in a fresh random direction, decoupled from the chain.
                beta(j) = 0.0;
                Eigen::VectorXd r = random_vector(m, rng);
                orthogonalize(r, Q, V, j + 1);
                const double rn = r.norm();
                if (rn < 1e-8) break;
                v = r / rn;
            } else {
                v = w / beta(j);
            }
        }
        start = best.vector;
    }
    return best;
}

// Upper bound of the spectrum from a short undeflated Lanczos run. Used only
// to scale relative tolerances, so a few percent of slack is irrelevant.
inline double estimate_lambda_max(const Eigen::SparseMatrix<double>& A,
                                  std::mt19937_64& rng) {
    const Eigen::Index m = A.rows();
    const Eigen::Index steps = std::min<Eigen::Index>(40, m);
    Eigen::MatrixXd V(m, steps);
    Eigen::VectorXd alpha(steps), beta(steps);
    Eigen::MatrixXd no_locked(m, 0);

    Eigen::VectorXd v = random_vector(m, rng);
    v.normalize();
    Eigen::Index j = 0;
    for (; j < steps; ++j) {
        V.col(j) = v;
        Eigen::VectorXd w = A * v;
        alpha(j) = v.dot(w);
        w.noalias() -= alpha(j) * v;
        if (j > 0) w.noalias() -= beta(j - 1) * V.col(j - 1);
        orthogonalize(w, no_locked, V, j + 1);
        beta(j) = w.norm();
        if (beta(j) < 1e-13) {
            ++j;
            break;
        }
        v = w / beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(alpha.head(j), beta.head(j > 0 ? j - 1 : 0),
                               Eigen::EigenvaluesOnly);
    return tri.eigenvalues()(j - 1);
}

} // namespace detail

// Computes the n_eigenvectors smallest nonzero eigenpairs of the Laplacian
// (every zero eigenpair below them is computed and kept as well). Eigenvalues
// at or below zero_tolerance_rel times the largest eigenvalue count as zero.
//
// The nonsymmetric L is never factored directly: Lsym = S^{-1/2} L S^{1/2} is
// symmetric positive semidefinite with the same eigenvalues, and u maps back
// to v = S^{1/2} u. Small problems go through a dense solve; large ones use
// Lanczos with full reorthogonalization, locking one pair at a time so
// repeated eigenvalues (for instance one zero per component) are found copy
// by copy.
inline SpectralEmbedding compute_embedding(const LaplacianMatrix& laplacian,
                                           std::size_t n_eigenvectors,
                                           double zero_tolerance_rel = 1e-9,
                                           const EmbeddingOptions& options = {}) {
    const Eigen::Index m = laplacian.entries.rows();
    if (n_eigenvectors < 1)
        throw std::invalid_argument("compute_embedding: n_eigenvectors must be >= 1");
    if (!(zero_tolerance_rel > 0.0) || !(zero_tolerance_rel < 1.0))
        throw std::invalid_argument("compute_embedding: zero_tolerance_rel must be in (0, 1)");
    if (static_cast<Eigen::Index>(n_eigenvectors) >= m) {
        std::ostringstream msg;
        msg << "compute_embedding: " << n_eigenvectors
            << " nonzero eigenvectors requested from a " << m
            << "-node graph (at least one eigenvalue is always zero)";
        throw SpectrumExhausted(msg.str());
    }

    const Eigen::SparseMatrix<double> sym = symmetrized_form(laplacian);
    const Eigen::VectorXd sqrt_deg = laplacian.degree_vector.cwiseSqrt();

    Eigen::VectorXd values;     // ascending eigenvalues, zeros first
    Eigen::MatrixXd vectors_u;  // matching eigenvectors of Lsym, orthonormal
    double lambda_max = 0.0;

    if (static_cast<std::size_t>(m) <= options.dense_cutoff) {
        const Eigen::MatrixXd dense(sym);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success)
            throw ConvergenceFailure("compute_embedding: dense eigensolver failed");
        lambda_max = es.eigenvalues()(m - 1);
        const double tol = zero_tolerance_rel * lambda_max;

        Eigen::Index n_zero = 0;
        while (n_zero < m && es.eigenvalues()(n_zero) <= tol) ++n_zero;
        if (n_zero + static_cast<Eigen::Index>(n_eigenvectors) > m) {
            std::ostringstream msg;
            msg << "compute_embedding: " << n_eigenvectors << " nonzero eigenvectors requested but only "
                << (m - n_zero) << " exist (" << n_zero << " zero modes)";
            throw SpectrumExhausted(msg.str());
        }
        const Eigen::Index total = n_zero + static_cast<Eigen::Index>(n_eigenvectors);
        values = es.eigenvalues().head(total);
        vectors_u = es.eigenvectors().leftCols(total);
    } else {
        std::mt19937_64 rng(options.lanczos_seed);
        lambda_max = detail::estimate_lambda_max(sym, rng);
        const double tol = zero_tolerance_rel * lambda_max;
        const double residual_tol = options.residual_tol * lambda_max;

        std::vector<double> locked_values;
        Eigen::MatrixXd locked(m, 0);
        std::size_t n_nonzero = 0;
        while (n_nonzero < n_eigenvectors) {
            if (locked.cols() == m) {
                std::ostringstream msg;
                msg << "compute_embedding: spectrum exhausted after " << m << " eigenpairs with only "
                    << n_nonzero << " nonzero";
                throw SpectrumExhausted(msg.str());
            }
            detail::RitzPair pair = detail::lanczos_smallest(sym, locked, residual_tol, options, rng);
            if (!pair.converged) {
                std::ostringstream msg;
                msg << "compute_embedding: Lanczos failed to converge for eigenpair "
                    << (locked.cols() + 1) << " (best residual eigenvalue " << pair.value << ")";
                throw ConvergenceFailure(msg.str());
            }
            locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
            locked.col(locked.cols() - 1) = pair.vector;
            locked_values.push_back(pair.value);
            if (pair.value > tol) ++n_nonzero;
        }

        values = Eigen::Map<const Eigen::VectorXd>(locked_values.data(),
                                                   static_cast<Eigen::Index>(locked_values.size()));
        vectors_u = locked;
        // Deflation yields pairs in ascending order up to round-off; make the
        // order exact so callers can rely on it.
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(values.size()));
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
        std::stable_sort(perm.begin(), perm.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
        Eigen::VectorXd sorted_values(values.size());
        Eigen::MatrixXd sorted_vectors(m, values.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            sorted_values(static_cast<Eigen::Index>(i)) = values(perm[i]);
            sorted_vectors.col(static_cast<Eigen::Index>(i)) = vectors_u.col(perm[i]);
        }
        values = std::move(sorted_values);
        vectors_u = std::move(sorted_vectors);
    }

    SpectralEmbedding emb;
    emb.area_ids = laplacian.area_ids;
    emb.zero_tolerance = zero_tolerance_rel * lambda_max;
    emb.eigenvalues = values;
    for (Eigen::Index i = 0; i < emb.eigenvalues.size(); ++i)
        if (emb.eigenvalues(i) < 0.0) {
            if (emb.eigenvalues(i) < -emb.zero_tolerance)
                throw ConvergenceFailure("compute_embedding: negative eigenvalue beyond tolerance");
            emb.eigenvalues(i) = 0.0;
        }
    emb.n_components = 0;
    while (static_cast<Eigen::Index>(emb.n_components) < emb.eigenvalues.size() &&
           emb.eigenvalues(static_cast<Eigen::Index>(emb.n_components)) <= emb.zero_tolerance)
        ++emb.n_components;

    // Map back to eigenvectors of L and pin the orientation.
    emb.eigenvectors.resize(m, values.size());
    for (Eigen::Index c = 0; c < values.size(); ++c) {
        Eigen::VectorXd v = sqrt_deg.asDiagonal() * vectors_u.col(c);
        v.normalize();
        detail::fix_sign(v);
        emb.eigenvectors.col(c) = v;
    }

    // Every returned pair must satisfy the eigenpair equation in the original
    // (nonsymmetric) Laplacian, not merely in the symmetrized form.
    for (Eigen::Index c = 0; c < values.size(); ++c) {
        const Eigen::VectorXd v = emb.eigenvectors.col(c);
        const Eigen::VectorXd r = laplacian.entries * v - emb.eigenvalues(c) * v;
        if (r.lpNorm<Eigen::Infinity>() > 1e-8 * v.lpNorm<Eigen::Infinity>()) {
            std::ostringstream msg;
            msg << "compute_embedding: eigenpair " << c << " residual "
                << r.lpNorm<Eigen::Infinity>() << " exceeds tolerance";
            throw ConvergenceFailure(msg.str());
        }
    }
    return emb;
}

// The k-th nonzero eigenvector, 1-based: k = 1 is the first eigenvector past
// the zero modes (the Fiedler-like coordinate the deprivation analysis uses).
inline AreaVector select_eigenvector(const SpectralEmbedding& embedding, std::size_t k) {
    if (k < 1)
        throw std::invalid_argument("select_eigenvector: k is 1-based");
    if (k > embedding.n_nonzero()) {
        std::ostringstream msg;
        msg << "select_eigenvector: k = " << k << " but only " << embedding.n_nonzero()
            << " nonzero eigenvectors were computed";
        throw IndexOutOfRange(msg.str());
    }
    const Eigen::Index col = static_cast<Eigen::Index>(embedding.n_components + k - 1);
    return AreaVector{embedding.area_ids, embedding.eigenvectors.col(col)};
}

} // namespace diffmap
