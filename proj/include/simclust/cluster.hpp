#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "simclust/errors.hpp"
#include "simclust/graph.hpp"
#include "simclust/rng.hpp"
#include "simclust/types.hpp"

namespace simclust {

/// Per-subject labels in {1..K} with the producing method and its cost
/// (K-means inertia or the spectral trace value).
struct ClusterAssignment {
    std::vector<int> labels;
    int K = 0;
    std::string method;
    double inertia_or_cost = 0.0;

    std::vector<long> cluster_sizes() const {
        std::vector<long> sizes(K, 0);
        for (int l : labels) {
            if (l < 1 || l > K) throw data_error("cluster label out of range");
            ++sizes[l - 1];
        }
        return sizes;
    }
};

namespace detail {

struct LloydRun {
    std::vector<int> labels;  // 0-based internally
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // after each assignment phase
};

inline double sq_dist_to(const Eigen::MatrixXd& points, long i, const Eigen::MatrixXd& centroids,
                         int c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

/// k-means++ seeding: first center uniform, the rest by squared-distance
/// weighted sampling over points.
inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& points, int K, Rng& rng) {
    const long n = points.rows();
    Eigen::MatrixXd centroids(K, points.cols());
    std::vector<char> chosen(n, 0);
    long first = static_cast<long>(rng.uniform_index(n));
    centroids.row(0) = points.row(first);
    chosen[first] = 1;
    Eigen::VectorXd d2(n);
    for (long i = 0; i < n; ++i) d2(i) = sq_dist_to(points, i, centroids, 0);
    for (int c = 1; c < K; ++c) {
        double total = d2.sum();
        long pick = -1;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            double acc = 0.0;
            for (long i = 0; i < n; ++i) {
                acc += d2(i);
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;
        }
        if (pick < 0 || chosen[pick]) {
            // all mass on already-chosen duplicates: take lowest unchosen index
            for (long i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            if (pick < 0 || chosen[pick]) pick = c % n;
        }
        centroids.row(c) = points.row(pick);
        chosen[pick] = 1;
        for (long i = 0; i < n; ++i)
            d2(i) = std::min(d2(i), sq_dist_to(points, i, centroids, c));
    }
    return centroids;
}

inline LloydRun lloyd_run(const Eigen::MatrixXd& points, int K, Rng& rng, int max_iters,
                          double tol) {
    const long n = points.rows();
    LloydRun run;
    run.centroids = kmeanspp_seed(points, K, rng);
    run.labels.assign(n, 0);
    Eigen::MatrixXd new_centroids(K, points.cols());
    std::vector<long> counts(K);

    for (int iter = 0; iter < max_iters; ++iter) {
        // assignment; ties toward the lower centroid index
        double inertia = 0.0;
        for (long i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < K; ++c) {
                double d = sq_dist_to(points, i, run.centroids, c);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            run.labels[i] = best_c;
            inertia += best;
        }
        run.inertia_trace.push_back(inertia);
        run.inertia = inertia;

        // update
        new_centroids.setZero();
        std::fill(counts.begin(), counts.end(), 0);
        for (long i = 0; i < n; ++i) {
            new_centroids.row(run.labels[i]) += points.row(i);
            ++counts[run.labels[i]];
        }
        for (int c = 0; c < K; ++c) {
            if (counts[c] > 0) {
                new_centroids.row(c) /= static_cast<double>(counts[c]);
            } else {
                // re-seed an empty cluster at the point farthest from its centroid
                double far_d = -1.0;
                long far_i = 0;
                for (long i = 0; i < n; ++i) {
                    double d = sq_dist_to(points, i, run.centroids, run.labels[i]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                new_centroids.row(c) = points.row(far_i);
            }
        }
        double shift = 0.0;
        for (int c = 0; c < K; ++c)
            shift = std::max(shift, (new_centroids.row(c) - run.centroids.row(c)).norm());
        run.centroids = new_centroids;
        if (shift < tol) break;
    }

    // final assignment against the settled centroids
    double inertia = 0.0;
    for (long i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < K; ++c) {
            double d = sq_dist_to(points, i, run.centroids, c);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        run.labels[i] = best_c;
        inertia += best;
    }
    run.inertia_trace.push_back(inertia);
    run.inertia = inertia;
    return run;
}

}  // namespace detail

/// Best-of-n_init K-means with k-means++ seeding and Lloyd iterations.
/// Deterministic given the seed.
inline ClusterAssignment kmeans(const Eigen::MatrixXd& points, int K, std::uint64_t seed,
                                int n_init = 10, int max_iters = 300, double tol = 1e-6) {
    const long n = points.rows();
    if (K < 1) throw data_error("kmeans: K must be >= 1");
    if (K > n) throw data_error("kmeans: K must not exceed the number of points");
    if (!points.allFinite()) throw data_error("kmeans: input contains non-finite values");

    detail::LloydRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int init = 0; init < n_init; ++init) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(init));
        detail::LloydRun run = detail::lloyd_run(points, K, rng, max_iters, tol);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    ClusterAssignment out;
    out.K = K;
    out.method = "kmeans";
    out.inertia_or_cost = best.inertia;
    out.labels.resize(n);
    for (long i = 0; i < n; ++i) out.labels[i] = best.labels[i] + 1;
    return out;
}

/// Two-step spectral clustering: embed with the K smallest Laplacian
/// eigenvectors, then K-means on the embedding rows. The recorded cost is
/// the relaxed trace value tr(V^T L V).
inline ClusterAssignment spectral_clustering(const Eigen::MatrixXd& theta, int K,
                                             std::uint64_t seed) {
    const Eigen::Index n = theta.rows();
    if (K < 1 || K > n) throw data_error("spectral_clustering: need 1 <= K <= n");
    EigenDecomposition eig = sym_eigen(laplacian(theta));
    ClusterAssignment out;
    if (K == 1) {
        out.labels.assign(n, 1);
        out.K = 1;
        out.method = "spectral";
        out.inertia_or_cost = eig.values(0);
        return out;
    }
    PartitionEmbedding V;
    V.v = eig.vectors.leftCols(K);
    detail::fix_column_signs(V.v);
    out = kmeans(V.v, K, seed);
    out.method = "spectral";
    out.inertia_or_cost = eig.values.head(K).sum();
    return out;
}

/// RatioCut value: sum over clusters of cross-cluster weight divided by
/// cluster size.
inline double ratio_cut(const Eigen::MatrixXd& theta, const ClusterAssignment& assignment) {
    const Eigen::Index n = theta.rows();
    if (static_cast<Eigen::Index>(assignment.labels.size()) != n)
        throw data_error("ratio_cut: label count does not match matrix size");
    double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
    if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw data_error("ratio_cut: similarity matrix must be symmetric");
    std::vector<long> sizes = assignment.cluster_sizes();
    for (int k = 0; k < assignment.K; ++k)
        if (sizes[k] == 0) throw data_error("ratio_cut: empty cluster " + std::to_string(k + 1));
    double total = 0.0;
    for (int k = 1; k <= assignment.K; ++k) {
        double cut = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (assignment.labels[i] != k) continue;
            for (Eigen::Index j = 0; j < n; ++j)
                if (assignment.labels[j] != k) cut += theta(i, j);
        }
        total += cut / static_cast<double>(sizes[k - 1]);
    }
    return total;
}

enum class SelectionRule { argmin, largest_drop };

/// Separation-cost curve over candidate cluster counts.
struct KSelectionResult {
    std::vector<int> candidate_ks;
    std::vector<double> costs;
    std::vector<bool> converged;  // per-K rotation optimization status
    int chosen_k = 0;
    SelectionRule rule = SelectionRule::argmin;
};

namespace detail {

/// Alignment cost of a rotated eigenvector basis: each row contributes
/// sum_j z_ij^2 / max_j |z_ij|^2 (>= 1, and exactly 1 when the row has a
/// single nonzero). All-zero rows count as aligned.
inline double rotation_cost(const Eigen::MatrixXd& Z) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        double mx = Z.row(i).cwiseAbs().maxCoeff();
        if (mx == 0.0) {
            cost += 1.0;
            continue;
        }
        cost += Z.row(i).squaredNorm() / (mx * mx);
    }
    return cost;
}

inline Eigen::MatrixXd givens_product(int K, const std::vector<std::pair<int, int>>& pairs,
                                      const std::vector<double>& angles) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(K, K);
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        double c = std::cos(angles[r]);
        double s = std::sin(angles[r]);
        auto [a, b] = pairs[r];
        Eigen::VectorXd col_a = Q.col(a);
        Q.col(a) = c * col_a - s * Q.col(b);
        Q.col(b) = s * col_a + c * Q.col(b);
    }
    return Q;
}

struct RotationFit {
    double cost;
    bool converged;
};

/// Minimizes rotation_cost(Y Q) over rotations parameterized by
/// K(K-1)/2 Givens angles: coordinate descent, per-angle central-difference
/// gradient, backtracking from a 0.1 rad step.
inline RotationFit minimize_rotation_cost(const Eigen::MatrixXd& Y, int max_sweeps = 200,
                                          double tol = 1e-6) {
    const int K = static_cast<int>(Y.cols());
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b) pairs.emplace_back(a, b);
    std::vector<double> angles(pairs.size(), 0.0);
    auto eval = [&](const std::vector<double>& th) {
        return rotation_cost(Y * givens_product(K, pairs, th));
    };
    double cost = eval(angles);
    if (pairs.empty()) return {cost, true};

    const double h = 1e-4;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double sweep_start = cost;
        for (std::size_t r = 0; r < angles.size(); ++r) {
            std::vector<double> trial = angles;
            trial[r] = angles[r] + h;
            double fp = eval(trial);
            trial[r] = angles[r] - h;
            double fm = eval(trial);
            double grad = (fp - fm) / (2.0 * h);
            if (grad == 0.0) continue;
            double direction = grad > 0.0 ? -1.0 : 1.0;
            double step = 0.1;
            while (step > 1e-10) {
                trial[r] = angles[r] + direction * step;
                double f = eval(trial);
                if (f < cost) {
                    angles[r] = trial[r];
                    cost = f;
                    break;
                }
                step /= 2.0;
            }
        }
        if (sweep_start - cost < tol) return {cost, true};
    }
    return {cost, false};
}

}  // namespace detail

/// Self-tuning selection of the cluster count: for each K in the range,
/// minimize the separation cost of the rotated top-K Laplacian eigenvector
/// basis; pick the argmin (or the largest drop when requested).
inline KSelectionResult select_k(const Eigen::MatrixXd& theta, int k_min = 2, int k_max = 10,
                                 SelectionRule rule = SelectionRule::argmin) {
    const Eigen::Index n = theta.rows();
    if (k_min < 2) throw data_error("select_k: k_min must be >= 2");
    if (k_max < k_min) throw data_error("select_k: k_max must be >= k_min");
    if (k_max > n) throw data_error("select_k: k_max must not exceed n");
    EigenDecomposition eig = sym_eigen(laplacian(theta));

    KSelectionResult res;
    res.rule = rule;
    for (int K = k_min; K <= k_max; ++K) {
        Eigen::MatrixXd Y = eig.vectors.leftCols(K);
        detail::RotationFit fit = detail::minimize_rotation_cost(Y);
        res.candidate_ks.push_back(K);
        res.costs.push_back(fit.cost);
        res.converged.push_back(fit.converged);
    }
    if (rule == SelectionRule::argmin) {
        // ties can be exact on ideal block-diagonal inputs (any K below the
        // component count aligns perfectly); prefer the largest tied K
        double best_cost = *std::min_element(res.costs.begin(), res.costs.end());
        std::size_t best = 0;
        for (std::size_t i = 0; i < res.costs.size(); ++i)
            if (res.costs[i] <= best_cost + 1e-6) best = i;
        res.chosen_k = res.candidate_ks[best];
    } else {
        // K maximizing cost(K-1) - cost(K); falls back to argmin for a
        // single candidate
        if (res.costs.size() == 1) {
            res.chosen_k = res.candidate_ks[0];
        } else {
            std::size_t best = 1;
            double best_drop = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < res.costs.size(); ++i) {
                double drop = res.costs[i - 1] - res.costs[i];
                if (drop > best_drop) {
                    best_drop = drop;
                    best = i;
                }
            }
            res.chosen_k = res.candidate_ks[best];
        }
    }
    return res;
}

/// Adjusted Rand index between two labelings; 1 for identical partitions,
/// about 0 for independent ones.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty())
        throw data_error("adjusted_rand_index: label vectors must be nonempty and equal length");
    auto relabel = [](const std::vector<int>& v) {
        std::vector<int> out(v.size());
        std::vector<int> seen;
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto it = std::find(seen.begin(), seen.end(), v[i]);
            if (it == seen.end()) {
                seen.push_back(v[i]);
                out[i] = static_cast<int>(seen.size()) - 1;
            } else {
                out[i] = static_cast<int>(it - seen.begin());
            }
        }
        return std::make_pair(out, static_cast<int>(seen.size()));
    };
    auto [ra, ka] = relabel(a);
    auto [rb, kb] = relabel(b);
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
    for (std::size_t i = 0; i < ra.size(); ++i) table(ra[i], rb[i]) += 1.0;
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_ij = 0.0;
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j) sum_ij += choose2(table(i, j));
    double sum_a = 0.0, sum_b = 0.0;
    for (Eigen::Index i = 0; i < table.rows(); ++i) sum_a += choose2(table.row(i).sum());
    for (Eigen::Index j = 0; j < table.cols(); ++j) sum_b += choose2(table.col(j).sum());
    double total = choose2(static_cast<double>(a.size()));
    double expected = sum_a * sum_b / total;
    double max_index = (sum_a + sum_b) / 2.0;
    double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (sum_ij - expected) / denom;
}

}  // namespace simclust
