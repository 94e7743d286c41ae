#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "simclust/data_matrix.hpp"
#include "simclust/errors.hpp"
#include "simclust/rng.hpp"

namespace simclust {

/// Gaussian-blob cohort: K clusters around rejection-separated centers.
struct BlobSpec {
    int K = 5;
    std::vector<int> n_per_cluster;  // one entry per cluster, or a single shared count
    int p = 63;
    double center_scale = 10.0;
    double noise_std = 1.0;
    std::uint64_t seed = 0;

    std::vector<int> counts() const {
        if (K < 1) throw data_error("BlobSpec: K must be >= 1");
        if (n_per_cluster.empty()) throw data_error("BlobSpec: n_per_cluster is empty");
        std::vector<int> c = n_per_cluster;
        if (c.size() == 1) c.assign(K, c[0]);
        if (static_cast<int>(c.size()) != K)
            throw data_error("BlobSpec: n_per_cluster size must be 1 or K");
        for (int v : c)
            if (v < 1) throw data_error("BlobSpec: cluster counts must be positive");
        if (p < 1) throw data_error("BlobSpec: dimension must be >= 1");
        if (noise_std < 0.0) throw data_error("BlobSpec: noise_std must be nonnegative");
        return c;
    }
};

/// Block-structured similarity with additive uniform noise.
struct PlantedGraphSpec {
    std::vector<int> block_sizes;
    double in_weight = 1.0;
    double out_weight = 0.0;
    double noise_amplitude = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (block_sizes.empty()) throw data_error("PlantedGraphSpec: no blocks");
        for (int b : block_sizes)
            if (b < 1) throw data_error("PlantedGraphSpec: block sizes must be positive");
        if (!(in_weight > out_weight) || out_weight < 0.0)
            throw data_error("PlantedGraphSpec: need in_weight > out_weight >= 0");
        if (noise_amplitude < 0.0)
            throw data_error("PlantedGraphSpec: noise amplitude must be nonnegative");
    }
};

/// Draws cluster centers uniformly in [-center_scale, center_scale]^p with
/// pairwise distance >= 4 * noise_std enforced by rejection, then adds
/// Gaussian noise per point. Deterministic per seed.
inline std::pair<DataMatrix, std::vector<int>> make_blobs(const BlobSpec& spec) {
    std::vector<int> counts = spec.counts();
    Rng center_rng = Rng::substream(spec.seed, 0);

    Eigen::MatrixXd centers(spec.K, spec.p);
    const double min_dist = 4.0 * spec.noise_std;
    for (int k = 0; k < spec.K; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            for (int j = 0; j < spec.p; ++j)
                centers(k, j) = center_rng.uniform(-spec.center_scale, spec.center_scale);
            placed = true;
            for (int prev = 0; prev < k && placed; ++prev)
                if ((centers.row(k) - centers.row(prev)).norm() < min_dist) placed = false;
        }
        if (!placed)
            throw data_error("make_blobs: could not place separated centers; "
                             "increase center_scale or lower noise_std");
    }

    long n = 0;
    for (int c : counts) n += c;
    DataMatrix X;
    X.values.resize(n, spec.p);
    X.missing.setZero(n, spec.p);
    std::vector<int> labels(n);
    long row = 0;
    for (int k = 0; k < spec.K; ++k) {
        Rng rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(k) + 1);
        for (int i = 0; i < counts[k]; ++i, ++row) {
            for (int j = 0; j < spec.p; ++j)
                X.values(row, j) = centers(k, j) + rng.normal(0.0, spec.noise_std);
            labels[row] = k + 1;
        }
    }
    X.subject_ids.resize(n);
    for (long i = 0; i < n; ++i) X.subject_ids[i] = "s" + std::to_string(i + 1);
    X.feature_names.resize(spec.p);
    for (int j = 0; j < spec.p; ++j) X.feature_names[j] = "f" + std::to_string(j + 1);
    return {std::move(X), std::move(labels)};
}

/// Block-constant similarity (in_weight within, out_weight across) plus
/// symmetric uniform noise in [0, noise_amplitude]; diagonal pinned to
/// in_weight, entries clipped at 0. Deterministic per seed.
inline std::pair<Eigen::MatrixXd, std::vector<int>> make_planted_similarity(
    const PlantedGraphSpec& spec) {
    spec.validate();
    long n = 0;
    for (int b : spec.block_sizes) n += b;
    std::vector<int> labels(n);
    long row = 0;
    for (std::size_t k = 0; k < spec.block_sizes.size(); ++k)
        for (int i = 0; i < spec.block_sizes[k]; ++i, ++row) labels[row] = static_cast<int>(k) + 1;

    Rng rng(spec.seed);
    Eigen::MatrixXd S(n, n);
    for (long i = 0; i < n; ++i) {
        S(i, i) = spec.in_weight;
        for (long j = i + 1; j < n; ++j) {
            double base = labels[i] == labels[j] ? spec.in_weight : spec.out_weight;
            double v = base + rng.uniform(0.0, spec.noise_amplitude);
            v = std::max(v, 0.0);
            S(i, j) = v;
            S(j, i) = v;
        }
    }
    return {std::move(S), std::move(labels)};
}

}  // namespace simclust
