#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simclust/errors.hpp"

namespace simclust {

/// Atomic file write: stream into <path>.tmp, then rename over the target.
inline void atomic_write(const std::string& path,
                         const std::function<void(std::ostream&)>& writer) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw data_error("cannot open for writing: " + tmp);
        writer(out);
        out.flush();
        if (!out) throw data_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double(const std::string& tok, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw data_error("non-numeric value '" + tok + "' " + context);
    }
}

/// Dense matrix exchange format: headerless, comma-separated, row-major.
inline void write_dense_csv(const std::string& path, const Eigen::MatrixXd& m) {
    atomic_write(path, [&](std::ostream& out) {
        char buf[32];
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
                if (j) out << ',';
                out << buf;
            }
            out << '\n';
        }
    });
}

inline Eigen::MatrixXd read_dense_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields)
            row.push_back(parse_double(f, "at " + path + ":" + std::to_string(lineno)));
        if (!rows.empty() && row.size() != rows.front().size())
            throw data_error("ragged row at " + path + ":" + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error("empty matrix file: " + path);
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

/// Two-column (subject_id, label) assignment file with a header row.
inline void write_labels_csv(const std::string& path,
                             const std::vector<std::string>& ids,
                             const std::vector<int>& labels) {
    if (ids.size() != labels.size()) throw data_error("ids/labels length mismatch");
    atomic_write(path, [&](std::ostream& out) {
        out << "subject_id,label\n";
        for (std::size_t i = 0; i < ids.size(); ++i)
            out << ids[i] << ',' << labels[i] << '\n';
    });
}

/// Reads (subject_id, label) pairs; labels stay strings so that control
/// groups and non-numeric tags survive.
inline std::vector<std::pair<std::string, std::string>> read_labels_csv(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 2) throw data_error("expected two columns in " + path);
        if (first) {
            first = false;
            if (fields[0] == "subject_id") continue;  // header row
        }
        out.emplace_back(fields[0], fields[1]);
    }
    if (out.empty()) throw data_error("no label rows in " + path);
    return out;
}

/// Two-column (iteration, value) trace file.
inline void write_trace_csv(const std::string& path, const std::vector<double>& values) {
    atomic_write(path, [&](std::ostream& out) {
        char buf[32];
        out << "iteration,value\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            out << i << ',' << buf << '\n';
        }
    });
}

}  // namespace simclust
