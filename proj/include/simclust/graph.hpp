#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "simclust/errors.hpp"
#include "simclust/types.hpp"

namespace simclust {

struct EigenDecomposition {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // orthonormal columns, same order
};

/// Symmetric eigendecomposition. Contract: eigenvalues ascending and
/// reconstruction residual ||A - V diag(l) V^T||_F <= 1e-8 * max(1, ||A||_F).
inline EigenDecomposition sym_eigen(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw numeric_error("sym_eigen: matrix must be square");
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw numeric_error("sym_eigen: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
    if (solver.info() != Eigen::Success)
        throw numeric_error("sym_eigen: eigensolver failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

/// Deterministic sign convention: first nonzero entry of each column made
/// positive.
inline void fix_column_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m(i, j)) > 1e-12) {
                if (m(i, j) < 0.0) m.col(j) = -m.col(j);
                break;
            }
        }
    }
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
    return (m + m.transpose()) / 2.0;
}

}  // namespace detail

/// Unnormalized graph Laplacian L = D - W of the symmetrized input.
inline Eigen::MatrixXd laplacian(const Eigen::MatrixXd& theta) {
    if (theta.rows() != theta.cols()) throw data_error("laplacian: matrix must be square");
    Eigen::MatrixXd W = detail::symmetrize(theta);
    Eigen::MatrixXd L = -W;
    L.diagonal() += W.rowwise().sum();
    return L;
}

/// Orthonormal eigenvectors of the K smallest Laplacian eigenvalues; the
/// latent coordinates used by the two-step clustering procedure.
inline PartitionEmbedding spectral_embedding(const Eigen::MatrixXd& theta, int K) {
    const Eigen::Index n = theta.rows();
    if (K < 2 || K > n) throw data_error("spectral_embedding: need 2 <= K <= n");
    EigenDecomposition eig = sym_eigen(laplacian(theta));
    PartitionEmbedding V;
    V.v = eig.vectors.leftCols(K);
    detail::fix_column_signs(V.v);
    return V;
}

/// KNN-truncated diffusion parameters. steps = 0 degenerates to a pure
/// symmetrization pass, used to verify pipeline plumbing.
struct DiffusionConfig {
    double tau = 0.8;
    int neighbors = 10;
    int steps = 20;

    void validate() const {
        if (!(tau > 0.0 && tau < 1.0)) throw data_error("diffusion tau must be in (0,1)");
        if (neighbors < 1) throw data_error("diffusion neighbor count must be >= 1");
        if (steps < 0) throw data_error("diffusion step count must be >= 0");
    }
};

/// Row-stochastic transition matrix restricted to each node's top-N
/// neighbors; zero diagonal.
struct TransitionMatrix {
    Eigen::SparseMatrix<double> p;

    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(p); }
};

/// Keeps each row's N largest off-diagonal similarities and normalizes them
/// to sum to one. Ties at the cutoff resolve by larger similarity, then
/// lower index.
inline TransitionMatrix truncate_normalize(const Eigen::MatrixXd& theta, int N) {
    const Eigen::Index n = theta.rows();
    if (theta.cols() != n) throw data_error("truncate_normalize: matrix must be square");
    if (N < 1) throw data_error("truncate_normalize: N must be >= 1");
    const int keep = std::min<Eigen::Index>(N, n - 1);

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(n) * keep);
    std::vector<int> order;
    for (Eigen::Index i = 0; i < n; ++i) {
        order.resize(n - 1);
        int pos = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) order[pos++] = static_cast<int>(j);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (theta(i, a) != theta(i, b)) return theta(i, a) > theta(i, b);
            return a < b;
        });
        double sum = 0.0;
        for (int t = 0; t < keep; ++t) sum += theta(i, order[t]);
        if (!(sum > 0.0))
            throw data_error("truncate_normalize: row " + std::to_string(i) +
                             " has no positive similarity among its top neighbors");
        for (int t = 0; t < keep; ++t) {
            double v = theta(i, order[t]) / sum;
            if (v != 0.0) entries.emplace_back(static_cast<int>(i), order[t], v);
        }
    }
    TransitionMatrix P;
    P.p.resize(n, n);
    P.p.setFromTriplets(entries.begin(), entries.end());
    return P;
}

/// Graph diffusion: S^0 = theta, S^{t+1} = tau * S^t P + (1 - tau) * I,
/// returning the symmetrized final iterate. Iteration short-circuits once
/// successive iterates agree to 1e-9 in Frobenius norm.
inline Eigen::MatrixXd diffuse(const Eigen::MatrixXd& theta, const DiffusionConfig& config) {
    config.validate();
    const Eigen::Index n = theta.rows();
    if (config.steps == 0) return detail::symmetrize(theta);
    TransitionMatrix P = truncate_normalize(theta, config.neighbors);
    Eigen::MatrixXd S = theta;
    Eigen::MatrixXd next(n, n);
    for (int t = 0; t < config.steps; ++t) {
        next.noalias() = config.tau * (S * P.p);
        next.diagonal().array() += 1.0 - config.tau;
        double delta = (next - S).norm();
        S.swap(next);
        if (delta < 1e-9) break;
    }
    return detail::symmetrize(S);
}

}  // namespace simclust
