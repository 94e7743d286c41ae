#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "simclust/data_matrix.hpp"
#include "simclust/errors.hpp"
#include "simclust/io.hpp"

namespace simclust {

struct LoadOptions {
    std::string id_column = "id";
    std::optional<std::vector<std::string>> feature_columns;
    std::vector<std::string> missing_tokens = {"", "NA"};
};

struct PreprocessOptions {
    double max_missing_fraction = 0.5;
    double iqr_factor = 1.5;
};

struct PreprocessReport {
    std::vector<std::pair<std::string, double>> dropped_features;  // name, missing fraction
    std::vector<std::pair<std::string, long>> winsorized_counts;   // per retained feature
    std::vector<double> column_means;
    std::vector<double> column_stds;
    std::vector<std::string> warnings;
    long imputed_cells = 0;

    void merge(const PreprocessReport& other) {
        dropped_features.insert(dropped_features.end(), other.dropped_features.begin(),
                                other.dropped_features.end());
        winsorized_counts.insert(winsorized_counts.end(), other.winsorized_counts.begin(),
                                 other.winsorized_counts.end());
        if (!other.column_means.empty()) column_means = other.column_means;
        if (!other.column_stds.empty()) column_stds = other.column_stds;
        warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
        imputed_cells += other.imputed_cells;
    }
};

/// Linear-interpolation quantile between order statistics (the "type 7"
/// convention). `sorted` must be ascending and nonempty.
inline double quantile_type7(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = static_cast<double>(n - 1) * q;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Loads a UTF-8 comma-separated table: first row header, one subject per
/// row. Empty cells and configured missing tokens become masked cells.
inline DataMatrix load_matrix(const std::string& path, const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw data_error("no header row in " + path);

    auto id_it = std::find(header.begin(), header.end(), opts.id_column);
    if (id_it == header.end())
        throw data_error("id column '" + opts.id_column + "' not found in " + path);
    std::size_t id_idx = static_cast<std::size_t>(id_it - header.begin());

    std::vector<std::size_t> feat_idx;
    if (opts.feature_columns) {
        for (const auto& name : *opts.feature_columns) {
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end())
                throw data_error("feature column '" + name + "' not found in " + path);
            feat_idx.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    } else {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (j != id_idx) feat_idx.push_back(j);
    }
    if (feat_idx.empty()) throw data_error("zero feature columns in " + path);

    const std::unordered_set<std::string> missing_tokens(opts.missing_tokens.begin(),
                                                         opts.missing_tokens.end());
    std::vector<std::string> ids;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::uint8_t>> missing;
    std::unordered_set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw data_error("row width mismatch at " + path + ":" + std::to_string(lineno));
        const std::string& id = fields[id_idx];
        if (!seen_ids.insert(id).second)
            throw data_error("duplicate subject id '" + id + "' at " + path + ":" +
                             std::to_string(lineno));
        ids.push_back(id);
        std::vector<double> row(feat_idx.size());
        std::vector<std::uint8_t> mask(feat_idx.size(), 0);
        for (std::size_t j = 0; j < feat_idx.size(); ++j) {
            const std::string& tok = fields[feat_idx[j]];
            if (missing_tokens.count(tok)) {
                row[j] = std::numeric_limits<double>::quiet_NaN();
                mask[j] = 1;
            } else {
                row[j] = parse_double(tok, "in feature column '" + header[feat_idx[j]] +
                                               "' at " + path + ":" + std::to_string(lineno));
            }
        }
        values.push_back(std::move(row));
        missing.push_back(std::move(mask));
    }
    if (ids.empty()) throw data_error("no data rows in " + path);

    DataMatrix X;
    X.values.resize(ids.size(), feat_idx.size());
    X.missing.resize(ids.size(), feat_idx.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < feat_idx.size(); ++j) {
            X.values(i, j) = values[i][j];
            X.missing(i, j) = missing[i][j];
        }
    X.subject_ids = std::move(ids);
    for (std::size_t j : feat_idx) X.feature_names.push_back(header[j]);
    X.validate();
    return X;
}

/// Writes a DataMatrix in the same format load_matrix consumes. Optional
/// leading '#' comment lines carry provenance (generator id, seed).
inline void write_data_csv(const std::string& path, const DataMatrix& X,
                           const std::vector<std::string>& comments = {}) {
    atomic_write(path, [&](std::ostream& out) {
        char buf[32];
        for (const auto& c : comments) out << "# " << c << '\n';
        out << "id";
        for (const auto& f : X.feature_names) out << ',' << f;
        out << '\n';
        for (Eigen::Index i = 0; i < X.n(); ++i) {
            out << X.subject_ids[i];
            for (Eigen::Index j = 0; j < X.p(); ++j) {
                out << ',';
                if (!X.missing(i, j)) {
                    std::snprintf(buf, sizeof(buf), "%.17g", X.values(i, j));
                    out << buf;
                }
            }
            out << '\n';
        }
    });
}

/// Removes features whose missing fraction exceeds the threshold; feature
/// order is preserved.
inline std::pair<DataMatrix, PreprocessReport> drop_sparse_features(
    const DataMatrix& X, double max_missing_fraction) {
    PreprocessReport report;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < X.p(); ++j) {
        long miss = 0;
        for (Eigen::Index i = 0; i < X.n(); ++i) miss += X.missing(i, j) ? 1 : 0;
        double frac = static_cast<double>(miss) / static_cast<double>(X.n());
        if (frac > max_missing_fraction)
            report.dropped_features.emplace_back(X.feature_names[j], frac);
        else
            keep.push_back(j);
    }
    if (keep.empty()) throw data_error("all features exceed the missing-fraction threshold");

    DataMatrix out;
    out.values.resize(X.n(), static_cast<Eigen::Index>(keep.size()));
    out.missing.resize(X.n(), static_cast<Eigen::Index>(keep.size()));
    out.subject_ids = X.subject_ids;
    for (std::size_t jj = 0; jj < keep.size(); ++jj) {
        out.values.col(jj) = X.values.col(keep[jj]);
        out.missing.col(jj) = X.missing.col(keep[jj]);
        out.feature_names.push_back(X.feature_names[keep[jj]]);
    }
    return {std::move(out), std::move(report)};
}

/// Clamps per-feature outliers: values below Q1 - factor*IQR or above
/// Q3 + factor*IQR move to the threshold. Quartiles use quantile_type7 over
/// observed cells; masked cells are untouched.
inline std::pair<DataMatrix, PreprocessReport> winsorize_iqr(const DataMatrix& X,
                                                             double factor = 1.5) {
    DataMatrix out = X;
    PreprocessReport report;
    for (Eigen::Index j = 0; j < X.p(); ++j) {
        std::vector<double> observed;
        for (Eigen::Index i = 0; i < X.n(); ++i)
            if (!X.missing(i, j)) observed.push_back(X.values(i, j));
        if (observed.empty())
            throw data_error("feature '" + X.feature_names[j] + "' has no observed values");
        std::sort(observed.begin(), observed.end());
        double q1 = quantile_type7(observed, 0.25);
        double q3 = quantile_type7(observed, 0.75);
        double iqr = q3 - q1;
        double lo = q1 - factor * iqr;
        double hi = q3 + factor * iqr;
        long clamped = 0;
        for (Eigen::Index i = 0; i < X.n(); ++i) {
            if (X.missing(i, j)) continue;
            double v = X.values(i, j);
            if (v < lo) {
                out.values(i, j) = lo;
                ++clamped;
            } else if (v > hi) {
                out.values(i, j) = hi;
                ++clamped;
            }
        }
        report.winsorized_counts.emplace_back(X.feature_names[j], clamped);
    }
    return {std::move(out), std::move(report)};
}

/// Fills masked cells with the feature mean over observed cells and clears
/// the mask. Count of filled cells is reported.
inline std::pair<DataMatrix, PreprocessReport> impute_missing(const DataMatrix& X) {
    DataMatrix out = X;
    PreprocessReport report;
    for (Eigen::Index j = 0; j < X.p(); ++j) {
        double sum = 0.0;
        long count = 0;
        for (Eigen::Index i = 0; i < X.n(); ++i)
            if (!X.missing(i, j)) {
                sum += X.values(i, j);
                ++count;
            }
        if (count == 0)
            throw data_error("feature '" + X.feature_names[j] + "' has no observed values");
        double mean = sum / static_cast<double>(count);
        for (Eigen::Index i = 0; i < X.n(); ++i)
            if (X.missing(i, j)) {
                out.values(i, j) = mean;
                out.missing(i, j) = 0;
                ++report.imputed_cells;
            }
    }
    return {std::move(out), std::move(report)};
}

/// Centers and scales each feature over observed cells to zero mean and
/// unit population (divide-by-n) standard deviation. Zero-variance features
/// become all-zeros with a warning.
inline std::pair<DataMatrix, PreprocessReport> zscore(const DataMatrix& X) {
    DataMatrix out = X;
    PreprocessReport report;
    for (Eigen::Index j = 0; j < X.p(); ++j) {
        double sum = 0.0;
        long count = 0;
        for (Eigen::Index i = 0; i < X.n(); ++i)
            if (!X.missing(i, j)) {
                sum += X.values(i, j);
                ++count;
            }
        if (count == 0)
            throw data_error("feature '" + X.feature_names[j] + "' has no observed values");
        double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (Eigen::Index i = 0; i < X.n(); ++i)
            if (!X.missing(i, j)) {
                double d = X.values(i, j) - mean;
                ss += d * d;
            }
        double sd = std::sqrt(ss / static_cast<double>(count));
        report.column_means.push_back(mean);
        report.column_stds.push_back(sd);
        if (sd == 0.0) {
            for (Eigen::Index i = 0; i < X.n(); ++i)
                if (!X.missing(i, j)) out.values(i, j) = 0.0;
            report.warnings.push_back("feature '" + X.feature_names[j] +
                                      "' has zero variance; set to zeros");
        } else {
            for (Eigen::Index i = 0; i < X.n(); ++i)
                if (!X.missing(i, j)) out.values(i, j) = (X.values(i, j) - mean) / sd;
        }
    }
    return {std::move(out), std::move(report)};
}

/// Full preparation chain: sparse-feature removal, IQR winsorization, mean
/// imputation of residual missingness, z-normalization.
inline std::pair<DataMatrix, PreprocessReport> preprocess(const DataMatrix& X,
                                                          const PreprocessOptions& opts = {}) {
    PreprocessReport report;
    auto [dropped, r1] = drop_sparse_features(X, opts.max_missing_fraction);
    report.merge(r1);
    auto [winsorized, r2] = winsorize_iqr(dropped, opts.iqr_factor);
    report.merge(r2);
    auto [imputed, r3] = impute_missing(winsorized);
    report.merge(r3);
    auto [scaled, r4] = zscore(imputed);
    report.merge(r4);
    return {std::move(scaled), std::move(report)};
}

}  // namespace simclust
