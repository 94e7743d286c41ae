#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "simclust/data_matrix.hpp"
#include "simclust/errors.hpp"
#include "simclust/io.hpp"
#include "simclust/parallel.hpp"

namespace simclust {

/// Squared Euclidean distances between subjects. Symmetric, zero diagonal.
struct DistanceMatrix {
    Eigen::MatrixXd d2;
    Eigen::Index n() const { return d2.rows(); }
};

/// Per-node nearest neighbors ordered by ascending distance, self excluded.
/// Ties resolve toward the lower index.
struct NeighborLists {
    std::vector<std::vector<int>> idx;
    std::vector<std::vector<double>> d2;  // squared distances, same order
};

struct KernelParams {
    double sigma;
    int k;
};

/// Bank of symmetric similarity kernels with unit diagonal and entries in
/// [0, 1].
struct KernelSet {
    std::vector<Eigen::MatrixXd> kernels;
    std::vector<KernelParams> params;
    std::size_t size() const { return kernels.size(); }
    Eigen::Index n() const { return kernels.empty() ? 0 : kernels.front().rows(); }
};

inline const std::vector<double>& default_sigma_grid() {
    static const std::vector<double> grid = {1.0, 1.25, 1.5, 1.75, 2.0};
    return grid;
}

inline const std::vector<int>& default_k_grid() {
    static const std::vector<int> grid = {10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
    return grid;
}

inline DistanceMatrix pairwise_sq_dist(const DataMatrix& X) {
    if (X.has_missing())
        throw data_error("pairwise_sq_dist requires a fully observed matrix");
    return [](const Eigen::MatrixXd& V) {
        const Eigen::Index n = V.rows();
        Eigen::MatrixXd gram = V * V.transpose();
        DistanceMatrix D;
        D.d2.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            D.d2(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                double v = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
                if (v < 0.0) v = 0.0;  // rounding guard
                D.d2(i, j) = v;
                D.d2(j, i) = v;
            }
        }
        return D;
    }(X.values);
}

inline DistanceMatrix pairwise_sq_dist(const Eigen::MatrixXd& values) {
    DataMatrix X;
    X.values = values;
    X.missing.setZero(values.rows(), values.cols());
    X.subject_ids.resize(values.rows());
    X.feature_names.resize(values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) X.subject_ids[i] = std::to_string(i);
    for (Eigen::Index j = 0; j < values.cols(); ++j) X.feature_names[j] = "f" + std::to_string(j);
    return pairwise_sq_dist(X);
}

inline NeighborLists knn(const DistanceMatrix& D, int k) {
    const Eigen::Index n = D.n();
    if (k < 1 || k >= n) throw data_error("knn: k must satisfy 1 <= k <= n-1");
    NeighborLists lists;
    lists.idx.assign(n, {});
    lists.d2.assign(n, {});
    std::vector<int> order(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        order.resize(n - 1);
        int pos = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) order[pos++] = static_cast<int>(j);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (D.d2(i, a) != D.d2(i, b)) return D.d2(i, a) < D.d2(i, b);
            return a < b;
        });
        lists.idx[i].assign(order.begin(), order.begin() + k);
        for (int j : lists.idx[i]) lists.d2[i].push_back(D.d2(i, j));
    }
    return lists;
}

/// Single kernel entry at squared distance d2 and scale eps. eps = 0 is the
/// degenerate duplicated-point case: 1 at zero distance, 0 otherwise.
inline double gaussian_kernel_entry(double d2, double eps) {
    if (eps == 0.0) return d2 == 0.0 ? 1.0 : 0.0;
    return std::exp(-d2 / (2.0 * eps * eps));
}

/// Multi-scale Gaussian kernel bank: one kernel per (sigma, k) grid pair
/// with local scale eps_ij = sigma * (mu_i + mu_j) / 2, where mu_i is the
/// mean distance from i to its k nearest neighbors. k is clamped to n-1 for
/// small cohorts.
inline KernelSet build_kernel_set(const DistanceMatrix& D,
                                  const std::vector<double>& sigma_grid = default_sigma_grid(),
                                  const std::vector<int>& k_grid = default_k_grid()) {
    if (sigma_grid.empty() || k_grid.empty())
        throw data_error("build_kernel_set: empty parameter grid");
    const Eigen::Index n = D.n();
    if (n < 2) throw data_error("build_kernel_set: need at least two subjects");

    std::vector<int> ks;
    for (int k : k_grid) ks.push_back(std::clamp<int>(k, 1, static_cast<int>(n) - 1));

    // mean neighbor distance per node, one vector per distinct clamped k
    std::vector<int> distinct = ks;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    int kmax = distinct.back();
    NeighborLists nb = knn(D, kmax);
    auto mean_neighbor_dist = [&](int k) {
        Eigen::VectorXd mu(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += std::sqrt(nb.d2[i][j]);
            mu(i) = s / k;
        }
        return mu;
    };
    std::vector<Eigen::VectorXd> mu_by_k;
    for (int k : distinct) mu_by_k.push_back(mean_neighbor_dist(k));
    auto mu_for = [&](int k) -> const Eigen::VectorXd& {
        auto it = std::lower_bound(distinct.begin(), distinct.end(), k);
        return mu_by_k[static_cast<std::size_t>(it - distinct.begin())];
    };

    KernelSet set;
    set.kernels.resize(sigma_grid.size() * ks.size());
    set.params.resize(set.kernels.size());
    std::vector<std::pair<double, int>> grid;
    for (double sigma : sigma_grid)
        for (int k : ks) grid.emplace_back(sigma, k);

    parallel_for(static_cast<long>(grid.size()), [&](long g) {
        auto [sigma, k] = grid[g];
        const Eigen::VectorXd& mu = mu_for(k);
        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            K(i, i) = 1.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                double eps = sigma * (mu(i) + mu(j)) / 2.0;
                double v = gaussian_kernel_entry(D.d2(i, j), eps);
                K(i, j) = v;
                K(j, i) = v;
            }
        }
        set.kernels[g] = std::move(K);
        set.params[g] = KernelParams{sigma, k};
    });
    return set;
}

namespace detail {
template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace detail

/// Binary kernel-bank cache: magic + version header, (n, m), per-kernel
/// (sigma, k) params, then row-major 64-bit floats per kernel.
inline void save_kernel_bank(const std::string& path, const KernelSet& set) {
    atomic_write(path, [&](std::ostream& out) {
        out.write("SCKB", 4);
        detail::write_pod<std::uint32_t>(out, 1);
        detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(set.n()));
        detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(set.size()));
        for (const auto& p : set.params) {
            detail::write_pod<double>(out, p.sigma);
            detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(p.k));
        }
        for (const auto& K : set.kernels)
            for (Eigen::Index i = 0; i < K.rows(); ++i)
                for (Eigen::Index j = 0; j < K.cols(); ++j)
                    detail::write_pod<double>(out, K(i, j));
    });
}

inline KernelSet load_kernel_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SCKB", 4) != 0)
        throw data_error("not a kernel bank file: " + path);
    std::uint32_t version = 0;
    detail::read_pod(in, version);
    if (version != 1) throw data_error("unsupported kernel bank version in " + path);
    std::uint64_t n = 0, m = 0;
    detail::read_pod(in, n);
    detail::read_pod(in, m);
    KernelSet set;
    set.params.resize(m);
    for (auto& p : set.params) {
        std::uint64_t k = 0;
        detail::read_pod(in, p.sigma);
        detail::read_pod(in, k);
        p.k = static_cast<int>(k);
    }
    set.kernels.resize(m);
    for (auto& K : set.kernels) {
        K.resize(n, n);
        for (std::uint64_t i = 0; i < n; ++i)
            for (std::uint64_t j = 0; j < n; ++j) detail::read_pod(in, K(i, j));
    }
    if (!in) throw data_error("truncated kernel bank file: " + path);
    return set;
}

}  // namespace simclust
