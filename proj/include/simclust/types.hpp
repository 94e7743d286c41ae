#pragma once

#include <Eigen/Dense>

#include "simclust/errors.hpp"

namespace simclust {

/// Learned n-by-n similarity: nonnegative with unit row sums.
struct SimilarityGraph {
    Eigen::MatrixXd theta;

    Eigen::Index n() const { return theta.rows(); }

    void validate(double tol = 1e-9) const {
        if (theta.rows() != theta.cols()) throw data_error("similarity matrix must be square");
        if ((theta.array() < 0.0).any()) throw data_error("similarity entries must be nonnegative");
        for (Eigen::Index i = 0; i < theta.rows(); ++i)
            if (std::abs(theta.row(i).sum() - 1.0) > tol)
                throw data_error("similarity rows must sum to one");
    }
};

/// Relaxed partition matrix: n-by-K with orthonormal columns.
struct PartitionEmbedding {
    Eigen::MatrixXd v;

    Eigen::Index n() const { return v.rows(); }
    Eigen::Index k() const { return v.cols(); }

    void validate(double tol = 1e-8) const {
        Eigen::MatrixXd gram = v.transpose() * v;
        gram -= Eigen::MatrixXd::Identity(v.cols(), v.cols());
        if (gram.cwiseAbs().maxCoeff() > tol)
            throw numeric_error("embedding columns are not orthonormal");
    }
};

/// Convex combination weights over the kernel bank.
struct KernelWeights {
    Eigen::VectorXd w;

    void validate(double tol = 1e-12) const {
        if ((w.array() < 0.0).any()) throw data_error("kernel weights must be nonnegative");
        if (std::abs(w.sum() - 1.0) > tol) throw data_error("kernel weights must sum to one");
    }
};

}  // namespace simclust
