#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "simclust/cluster.hpp"
#include "simclust/errors.hpp"
#include "simclust/special_functions.hpp"

namespace simclust {

struct GroupedSamples {
    std::vector<std::vector<double>> groups;
    std::vector<std::string> names;

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.size();
        return n;
    }

    void validate() const {
        if (groups.size() < 2) throw data_error("need at least two groups");
        for (const auto& g : groups)
            if (g.empty()) throw data_error("groups must be nonempty");
        if (!names.empty() && names.size() != groups.size())
            throw data_error("group name count mismatch");
    }
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double df1 = 0.0;
    double df2 = 0.0;  // unused for single-df tests
    std::string method;
    std::string flag;  // nonempty when a degenerate case was handled
};

/// Mean silhouette coefficient over points, Euclidean distance. Singleton
/// clusters contribute 0.
inline double silhouette(const Eigen::MatrixXd& points, const ClusterAssignment& assignment) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw data_error("silhouette: need at least two points");
    if (assignment.K < 2) throw data_error("silhouette: not defined for a single cluster");
    if (static_cast<Eigen::Index>(assignment.labels.size()) != n)
        throw data_error("silhouette: label count mismatch");
    std::vector<long> sizes = assignment.cluster_sizes();
    for (int k = 0; k < assignment.K; ++k)
        if (sizes[k] == 0) throw data_error("silhouette: empty cluster");

    double total = 0.0;
    std::vector<double> mean_dist(assignment.K);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = assignment.labels[i] - 1;
        if (sizes[own] == 1) continue;  // s_i = 0
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[assignment.labels[j] - 1] += (points.row(i) - points.row(j)).norm();
        }
        double a = mean_dist[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int k = 0; k < assignment.K; ++k) {
            if (k == own) continue;
            b = std::min(b, mean_dist[k] / static_cast<double>(sizes[k]));
        }
        double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

namespace detail {

/// Midranks of the pooled sample plus the tie term sum(t^3 - t).
struct RankInfo {
    std::vector<double> ranks;  // aligned with the input order
    double tie_term = 0.0;
};

inline RankInfo midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    RankInfo info;
    info.ranks.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) info.ranks[order[t]] = rank;
        double ties = static_cast<double>(j - i + 1);
        info.tie_term += ties * ties * ties - ties;
        i = j + 1;
    }
    return info;
}

}  // namespace detail

/// One-way analysis of variance; p from the F upper tail.
inline TestResult anova_oneway(const GroupedSamples& g) {
    g.validate();
    const std::size_t ngroups = g.groups.size();
    const std::size_t N = g.total_size();
    if (N <= ngroups) throw data_error("anova: need more observations than groups");
    bool any_pair = false;
    for (const auto& grp : g.groups)
        if (grp.size() >= 2) any_pair = true;
    if (!any_pair) throw data_error("anova: need at least one group with two observations");

    double grand = 0.0;
    for (const auto& grp : g.groups) grand += std::accumulate(grp.begin(), grp.end(), 0.0);
    grand /= static_cast<double>(N);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& grp : g.groups) {
        double mean = std::accumulate(grp.begin(), grp.end(), 0.0) / grp.size();
        ss_between += static_cast<double>(grp.size()) * (mean - grand) * (mean - grand);
        for (double v : grp) ss_within += (v - mean) * (v - mean);
    }
    TestResult res;
    res.method = "anova";
    res.df1 = static_cast<double>(ngroups - 1);
    res.df2 = static_cast<double>(N - ngroups);
    if (ss_within == 0.0) {
        if (ss_between == 0.0) {
            res.statistic = 0.0;
            res.p_value = 1.0;
            res.flag = "zero variance in all groups";
        } else {
            res.statistic = std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
            res.flag = "zero within-group variance";
        }
        return res;
    }
    res.statistic = (ss_between / res.df1) / (ss_within / res.df2);
    res.p_value = f_upper_tail(res.statistic, res.df1, res.df2);
    return res;
}

/// Kruskal-Wallis H test with midranks and tie correction; p from the
/// chi-square upper tail with g - 1 degrees of freedom.
inline TestResult kruskal_wallis(const GroupedSamples& g) {
    g.validate();
    const std::size_t ngroups = g.groups.size();
    const std::size_t N = g.total_size();
    if (N < 3) throw data_error("kruskal_wallis: need at least three observations");

    std::vector<double> pooled;
    pooled.reserve(N);
    for (const auto& grp : g.groups) pooled.insert(pooled.end(), grp.begin(), grp.end());
    detail::RankInfo info = detail::midranks(pooled);

    TestResult res;
    res.method = "kruskal-wallis";
    res.df1 = static_cast<double>(ngroups - 1);
    double correction =
        1.0 - info.tie_term / (static_cast<double>(N) * N * N - static_cast<double>(N));
    if (correction <= 0.0) {
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.flag = "all values tied";
        return res;
    }
    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& grp : g.groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < grp.size(); ++i) rank_sum += info.ranks[offset + i];
        double mean_rank = rank_sum / static_cast<double>(grp.size());
        h += static_cast<double>(grp.size()) * mean_rank * mean_rank;
        offset += grp.size();
    }
    h = 12.0 / (static_cast<double>(N) * (N + 1.0)) * h - 3.0 * (N + 1.0);
    res.statistic = h / correction;
    res.p_value = chi_square_upper_tail(res.statistic, res.df1);
    return res;
}

struct DunnComparison {
    std::size_t group_a = 0;
    std::size_t group_b = 0;
    std::string name_a;
    std::string name_b;
    double z = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
};

/// Dunn's post-hoc rank comparisons over all group pairs, tie-corrected,
/// with Bonferroni adjustment capped at 1.
inline std::vector<DunnComparison> dunn_test(const GroupedSamples& g) {
    g.validate();
    const std::size_t ngroups = g.groups.size();
    const double N = static_cast<double>(g.total_size());

    std::vector<double> pooled;
    for (const auto& grp : g.groups) pooled.insert(pooled.end(), grp.begin(), grp.end());
    detail::RankInfo info = detail::midranks(pooled);

    double variance = N * (N + 1.0) / 12.0 - info.tie_term / (12.0 * (N - 1.0));
    if (variance <= 0.0) throw data_error("dunn_test: all observations tied");

    std::vector<double> mean_ranks(ngroups);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ngroups; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < g.groups[k].size(); ++i) sum += info.ranks[offset + i];
        mean_ranks[k] = sum / static_cast<double>(g.groups[k].size());
        offset += g.groups[k].size();
    }

    const double npairs = static_cast<double>(ngroups * (ngroups - 1) / 2);
    std::vector<DunnComparison> out;
    for (std::size_t a = 0; a < ngroups; ++a) {
        for (std::size_t b = a + 1; b < ngroups; ++b) {
            DunnComparison cmp;
            cmp.group_a = a;
            cmp.group_b = b;
            if (!g.names.empty()) {
                cmp.name_a = g.names[a];
                cmp.name_b = g.names[b];
            }
            double se = std::sqrt(variance * (1.0 / g.groups[a].size() + 1.0 / g.groups[b].size()));
            cmp.z = (mean_ranks[a] - mean_ranks[b]) / se;
            cmp.p_raw = two_sided_normal_p(cmp.z);
            cmp.p_adjusted = std::min(1.0, cmp.p_raw * npairs);
            out.push_back(cmp);
        }
    }
    return out;
}

struct LogisticFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd standard_errors;
    Eigen::VectorXd wald_z;
    Eigen::VectorXd p_values;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    std::vector<double> deviance_trace;
    std::string diagnostic;
};

namespace detail {

inline double bernoulli_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double m = std::clamp(mu(i), 1e-12, 1.0 - 1e-12);
        ll += y(i) * std::log(m) + (1.0 - y(i)) * std::log1p(-m);
    }
    return -2.0 * ll;
}

}  // namespace detail

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares with step-halving. X must include the intercept column. Suspected
/// (quasi-)complete separation is reported via converged=false and a
/// diagnostic instead of a penalized fit.
inline LogisticFit logistic_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
    const Eigen::Index n = y.size();
    const Eigen::Index q = X.cols();
    if (X.rows() != n) throw data_error("logistic_fit: row count mismatch");
    if (q > n) throw data_error("logistic_fit: more predictors than observations");
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) == 0.0) has0 = true;
        else if (y(i) == 1.0) has1 = true;
        else throw data_error("logistic_fit: response must be 0/1");
    }
    if (!has0 || !has1) throw data_error("logistic_fit: response has a single class");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < q) throw data_error("logistic_fit: predictor matrix is rank deficient");

    LogisticFit fit;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 0.5);
    double deviance = detail::bernoulli_deviance(y, mu);
    fit.deviance_trace.push_back(deviance);

    const int max_iters = 25;
    bool converged = false;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        Eigen::VectorXd weights = mu.array() * (1.0 - mu.array());
        weights = weights.cwiseMax(1e-12);
        Eigen::MatrixXd xtwx = X.transpose() * weights.asDiagonal() * X;
        Eigen::VectorXd score = X.transpose() * (y - mu);
        Eigen::VectorXd delta = xtwx.ldlt().solve(score);

        // step-halving keeps the deviance non-increasing
        double step = 1.0;
        Eigen::VectorXd new_beta;
        double new_dev = deviance;
        for (int half = 0; half < 30; ++half) {
            new_beta = beta + step * delta;
            Eigen::VectorXd eta = X * new_beta;
            Eigen::VectorXd trial_mu =
                (1.0 / (1.0 + (-eta.array()).exp())).matrix();
            new_dev = detail::bernoulli_deviance(y, trial_mu);
            if (new_dev <= deviance + 1e-12) {
                mu = trial_mu;
                break;
            }
            step /= 2.0;
        }
        beta = new_beta;
        double change = std::abs(deviance - new_dev);
        deviance = new_dev;
        fit.deviance_trace.push_back(deviance);
        if (change < 1e-8) {
            converged = true;
            ++iter;
            break;
        }
    }

    fit.coefficients = beta;
    fit.iterations = iter;
    fit.deviance = deviance;

    // standard errors from the inverse Fisher information at the optimum
    Eigen::VectorXd weights = mu.array() * (1.0 - mu.array());
    weights = weights.cwiseMax(1e-12);
    Eigen::MatrixXd info = X.transpose() * weights.asDiagonal() * X;
    Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
    fit.standard_errors.resize(q);
    fit.wald_z.resize(q);
    fit.p_values.resize(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        fit.standard_errors(j) = std::sqrt(std::max(cov(j, j), 0.0));
        fit.wald_z(j) = fit.standard_errors(j) > 0.0 ? beta(j) / fit.standard_errors(j) : 0.0;
        fit.p_values(j) = two_sided_normal_p(fit.wald_z(j));
    }

    // separation check on standardized predictor scale
    bool separated = false;
    for (Eigen::Index j = 0; j < q; ++j) {
        double mean = X.col(j).mean();
        double sd = std::sqrt((X.col(j).array() - mean).square().sum() / n);
        double scale = sd > 0.0 ? sd : 1.0;
        if (std::abs(beta(j)) * scale > 15.0) separated = true;
    }
    if (separated) {
        fit.converged = false;
        fit.diagnostic = "suspected (quasi-)complete separation: coefficient diverged";
    } else if (!converged) {
        fit.converged = false;
        fit.diagnostic = "IRLS did not converge within 25 iterations";
    } else {
        fit.converged = true;
    }
    return fit;
}

}  // namespace simclust
