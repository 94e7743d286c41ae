#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "simclust/errors.hpp"
#include "simclust/graph.hpp"
#include "simclust/kernels.hpp"
#include "simclust/parallel.hpp"
#include "simclust/types.hpp"

namespace simclust {

/// Euclidean projection onto the probability simplex {x >= 0, sum x = 1},
/// sort-based. The result is renormalized so the row sum is exactly one.
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& y) {
    const Eigen::Index n = y.size();
    std::vector<double> u(y.data(), y.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double lambda = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += u[j];
        double candidate = (1.0 - cumsum) / static_cast<double>(j + 1);
        if (u[j] + candidate > 0.0) lambda = candidate;
    }
    Eigen::VectorXd x = (y.array() + lambda).max(0.0);
    double s = x.sum();
    if (s <= 0.0) {  // cannot happen for finite input; keep a safe fallback
        x.setConstant(1.0 / static_cast<double>(n));
        return x;
    }
    x /= s;
    // kill the last ulp of drift so row sums are exactly one
    Eigen::Index max_idx;
    x.maxCoeff(&max_idx);
    x(max_idx) += 1.0 - x.sum();
    return x;
}

/// Data-driven low-rank penalty: mean over nodes of half the gap between
/// the (k+1)-th and k-th nearest-neighbor distances, floored at 1e-12.
/// Callers set rho2 equal to the returned value.
inline double estimate_rho1(const DistanceMatrix& D, int k = 10) {
    const Eigen::Index n = D.n();
    if (n <= k + 1) throw data_error("estimate_rho1: need n > k + 1");
    NeighborLists nb = knn(D, k + 1);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        acc += (std::sqrt(nb.d2[i][k]) - std::sqrt(nb.d2[i][k - 1])) / 2.0;
    return std::max(acc / static_cast<double>(n), 1e-12);
}

/// Weighted kernel combination sum_l w_l K_l.
inline Eigen::MatrixXd fused_similarity(const KernelSet& kernels, const KernelWeights& w) {
    if (static_cast<Eigen::Index>(kernels.size()) != w.w.size())
        throw data_error("fused_similarity: weight count does not match kernel count");
    Eigen::MatrixXd fused = Eigen::MatrixXd::Zero(kernels.n(), kernels.n());
    for (std::size_t l = 0; l < kernels.size(); ++l) fused += w.w(l) * kernels.kernels[l];
    return fused;
}

/// Exact minimizer of the similarity subproblem holding (V, w) fixed: each
/// row is the simplex projection of (fused_i + rho1 * <v_i, v_.>) / (2 rho2).
inline SimilarityGraph update_theta(const Eigen::MatrixXd& fused, const PartitionEmbedding& V,
                                    double rho1, double rho2) {
    if (!(rho2 > 0.0)) throw data_error("update_theta: rho2 must be positive");
    const Eigen::Index n = fused.rows();
    Eigen::MatrixXd clustering_affinity = V.v * V.v.transpose();
    SimilarityGraph theta;
    theta.theta.resize(n, n);
    parallel_for(n, [&](long i) {
        Eigen::VectorXd c =
            (fused.row(i) + rho1 * clustering_affinity.row(i)).transpose() / (2.0 * rho2);
        theta.theta.row(i) = project_to_simplex(c).transpose();
    });
    return theta;
}

namespace detail {

/// Theta subproblem restricted to graphs without self-loops: per row, the
/// off-diagonal entries are projected onto the simplex and the diagonal is
/// pinned at zero. This is the exact minimizer over the no-self-loop
/// feasible set; the unit kernel diagonal would otherwise absorb the whole
/// row mass for data-driven rho2.
inline SimilarityGraph update_theta_no_self(const Eigen::MatrixXd& fused,
                                            const PartitionEmbedding& V, double rho1,
                                            double rho2) {
    if (!(rho2 > 0.0)) throw data_error("update_theta: rho2 must be positive");
    const Eigen::Index n = fused.rows();
    Eigen::MatrixXd clustering_affinity = V.v * V.v.transpose();
    SimilarityGraph theta;
    theta.theta.setZero(n, n);
    parallel_for(n, [&](long i) {
        Eigen::VectorXd c(n - 1);
        Eigen::Index pos = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            c(pos++) = (fused(i, j) + rho1 * clustering_affinity(i, j)) / (2.0 * rho2);
        }
        Eigen::VectorXd row = project_to_simplex(c);
        pos = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            theta.theta(i, j) = row(pos++);
        }
    });
    return theta;
}

/// Fused kernel with the diagonal removed, rows normalized to the simplex;
/// the no-self-loop initializer for fit.
inline Eigen::MatrixXd row_normalized_off_diagonal(const Eigen::MatrixXd& fused) {
    Eigen::MatrixXd theta = fused;
    theta.diagonal().setZero();
    Eigen::VectorXd sums = theta.rowwise().sum();
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        if (!(sums(i) > 0.0))
            throw data_error("SIMLR: subject " + std::to_string(i) +
                             " has no off-diagonal kernel similarity");
        theta.row(i) /= sums(i);
    }
    return theta;
}

/// Spectrum of the approximate Laplacian I - (theta + theta^T)/2.
inline EigenDecomposition approx_laplacian_spectrum(const Eigen::MatrixXd& theta) {
    Eigen::MatrixXd M = -symmetrize(theta);
    M.diagonal().array() += 1.0;
    return sym_eigen(M);
}

inline PartitionEmbedding embedding_from_spectrum(const EigenDecomposition& eig, int K) {
    PartitionEmbedding V;
    V.v = eig.vectors.leftCols(K);
    fix_column_signs(V.v);
    return V;
}

}  // namespace detail

/// Orthonormal eigenvectors of the K smallest eigenvalues of
/// I - (theta + theta^T)/2; the exact minimizer of the embedding subproblem.
inline PartitionEmbedding update_v(const SimilarityGraph& theta, int K) {
    if (K < 2 || K > theta.n()) throw data_error("update_v: need 2 <= K <= n");
    return detail::embedding_from_spectrum(detail::approx_laplacian_spectrum(theta.theta), K);
}

/// Exact minimizer of the weight subproblem: softmax over kernels of
/// a_l / rho3 with a_l = sum_ij K_l(i,j) theta_ij, computed stably.
inline KernelWeights update_w(const KernelSet& kernels, const SimilarityGraph& theta,
                              double rho3) {
    if (!(rho3 > 0.0)) throw data_error("update_w: rho3 must be positive");
    const std::size_t m = kernels.size();
    Eigen::VectorXd a(m);
    for (std::size_t l = 0; l < m; ++l)
        a(l) = kernels.kernels[l].cwiseProduct(theta.theta).sum();
    Eigen::VectorXd z = a / rho3;
    z.array() -= z.maxCoeff();
    Eigen::VectorXd e = z.array().exp();
    KernelWeights w;
    w.w = e / e.sum();
    return w;
}

/// Full objective value:
///   -sum_{l,i,j} w_l K_l(i,j) theta_ij + rho1 tr(V^T (I - Theta) V)
///   + rho2 ||Theta||_F^2 + rho3 sum_l w_l log w_l,   with 0 log 0 = 0.
inline double objective(const KernelSet& kernels, const SimilarityGraph& theta,
                        const PartitionEmbedding& v, const KernelWeights& w, double rho1,
                        double rho2, double rho3) {
    double fit_term = 0.0;
    for (std::size_t l = 0; l < kernels.size(); ++l)
        fit_term -= w.w(l) * kernels.kernels[l].cwiseProduct(theta.theta).sum();
    Eigen::MatrixXd M = -theta.theta;
    M.diagonal().array() += 1.0;
    double trace_term = rho1 * (v.v.transpose() * M * v.v).trace();
    double ridge_term = rho2 * theta.theta.squaredNorm();
    double entropy_term = 0.0;
    for (Eigen::Index l = 0; l < w.w.size(); ++l)
        if (w.w(l) > 0.0) entropy_term += w.w(l) * std::log(w.w(l));
    return fit_term + trace_term + ridge_term + rho3 * entropy_term;
}

/// Convergence monitor: difference between the (K+1)-th and K-th smallest
/// eigenvalues of I - (theta + theta^T)/2.
inline double eigengap(const SimilarityGraph& theta, int K) {
    if (K + 1 > theta.n()) throw data_error("eigengap: need K + 1 <= n");
    EigenDecomposition eig = detail::approx_laplacian_spectrum(theta.theta);
    return eig.values(K) - eig.values(K - 1);
}

struct SimlrConfig {
    int K = 2;
    double rho1 = 0.0;
    double rho2 = 1.0;
    double rho3 = 1.0;
    int max_outer_iters = 30;
    double tol = 1e-6;  // on eigengap change
    std::optional<DiffusionConfig> diffusion;
    bool interleave_diffusion = true;

    void validate(std::size_t m) const {
        if (K < 2) throw data_error("SIMLR: K must be >= 2");
        if (rho1 < 0.0) throw data_error("SIMLR: rho1 must be nonnegative");
        if (!(rho2 > 0.0)) throw data_error("SIMLR: rho2 must be positive");
        if (m > 1 && !(rho3 > 0.0)) throw data_error("SIMLR: rho3 must be positive for m > 1");
        if (max_outer_iters < 1) throw data_error("SIMLR: max_outer_iters must be >= 1");
        if (tol < 0.0) throw data_error("SIMLR: tol must be nonnegative");
        if (diffusion) diffusion->validate();
    }
};

struct SimlrResult {
    SimilarityGraph theta;
    PartitionEmbedding v;
    KernelWeights w;
    std::vector<double> objective_trace;  // index 0 is the initial point
    std::vector<double> eigengap_trace;
};

/// Block-coordinate descent on the joint similarity / embedding / weight
/// objective, over graphs without self-loops. Initialization: uniform w,
/// row-normalized off-diagonal fused kernel, its embedding. Each outer
/// iteration runs the exact theta, (optional diffusion), V, and w updates
/// and records the objective and eigengap; iteration stops when the
/// eigengap change falls below tol.
inline SimlrResult fit(const KernelSet& kernels, const SimlrConfig& config) {
    config.validate(kernels.size());
    if (kernels.size() == 0) throw data_error("SIMLR: kernel bank is empty");
    const Eigen::Index n = kernels.n();
    if (config.K + 1 > n) throw data_error("SIMLR: need K + 1 <= n for the eigengap monitor");

    const bool diffuse_between = config.interleave_diffusion && config.diffusion.has_value();

    SimlrResult res;
    res.w.w = Eigen::VectorXd::Constant(kernels.size(), 1.0 / kernels.size());
    Eigen::MatrixXd fused = fused_similarity(kernels, res.w);
    res.theta.theta = detail::row_normalized_off_diagonal(fused);
    EigenDecomposition spectrum = detail::approx_laplacian_spectrum(res.theta.theta);
    res.v = detail::embedding_from_spectrum(spectrum, config.K);
    double gap = spectrum.values(config.K) - spectrum.values(config.K - 1);
    res.objective_trace.push_back(objective(kernels, res.theta, res.v, res.w, config.rho1,
                                            config.rho2, config.rho3));
    res.eigengap_trace.push_back(gap);

    for (int iter = 0; iter < config.max_outer_iters; ++iter) {
        fused = fused_similarity(kernels, res.w);
        res.theta = detail::update_theta_no_self(fused, res.v, config.rho1, config.rho2);
        if (diffuse_between) {
            Eigen::MatrixXd diffused = diffuse(res.theta.theta, *config.diffusion);
            res.theta.theta =
                (diffused.array().colwise() / diffused.rowwise().sum().array()).matrix();
        }
        spectrum = detail::approx_laplacian_spectrum(res.theta.theta);
        res.v = detail::embedding_from_spectrum(spectrum, config.K);
        double new_gap = spectrum.values(config.K) - spectrum.values(config.K - 1);
        res.w = update_w(kernels, res.theta, config.rho3);

        double obj = objective(kernels, res.theta, res.v, res.w, config.rho1, config.rho2,
                               config.rho3);
        if (!std::isfinite(obj)) throw numeric_error("SIMLR: objective became non-finite");
        res.objective_trace.push_back(obj);
        res.eigengap_trace.push_back(new_gap);

        if (std::abs(new_gap - gap) < config.tol) break;
        gap = new_gap;
    }
    return res;
}

}  // namespace simclust
