#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "simclust/cluster.hpp"
#include "simclust/errors.hpp"
#include "simclust/graph.hpp"
#include "simclust/ingest.hpp"
#include "simclust/io.hpp"
#include "simclust/kernels.hpp"
#include "simclust/simlr.hpp"
#include "simclust/stats.hpp"
#include "simclust/synth.hpp"
#include "simclust/types.hpp"

namespace simclust {

enum class Method { kmeans, sc, sc_diffusion, simlr, simlr_diffusion };

inline Method parse_method(const std::string& name) {
    if (name == "kmeans") return Method::kmeans;
    if (name == "sc") return Method::sc;
    if (name == "sc-diffusion") return Method::sc_diffusion;
    if (name == "simlr") return Method::simlr;
    if (name == "simlr-diffusion") return Method::simlr_diffusion;
    throw data_error("unknown method '" + name +
                     "' (expected kmeans, sc, sc-diffusion, simlr, simlr-diffusion)");
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::kmeans: return "kmeans";
        case Method::sc: return "sc";
        case Method::sc_diffusion: return "sc-diffusion";
        case Method::simlr: return "simlr";
        case Method::simlr_diffusion: return "simlr-diffusion";
    }
    return "?";
}

struct PipelineConfig {
    Method method = Method::simlr_diffusion;
    int K = 5;
    bool auto_k = false;  // run select_k over [k_min, k_max] first
    int k_min = 2;
    int k_max = 10;
    SelectionRule selection_rule = SelectionRule::argmin;
    DiffusionConfig diffusion;
    double rho3 = 1.0;
    int max_outer_iters = 30;
    double tol = 1e-6;
    int rho_neighbors = 10;  // k for the distance-gap estimate of rho1
    std::vector<double> sigma_grid = default_sigma_grid();
    std::vector<int> k_grid = default_k_grid();
    std::uint64_t seed = 0;

    void validate() const {
        if (!auto_k && K < 1) throw data_error("cluster count must be >= 1");
        if (auto_k && (k_min < 2 || k_max < k_min))
            throw data_error("invalid auto-K range");
        diffusion.validate();
    }
};

struct RunReport {
    std::string method;
    int K = 0;
    std::string labels_path;
    std::string similarity_path;  // graph methods only
    std::string embedding_path;
    std::string report_txt_path;
    std::string report_json_path;
    double silhouette_value = 0.0;
    bool silhouette_defined = false;
    std::string silhouette_note;
    std::optional<KSelectionResult> selection;
    std::string selection_path;
    std::string contingency;  // formatted table, empty when no diagnosis given
    std::string contingency_path;
    double rho1 = 0.0;  // SIMLR methods
    std::vector<double> objective_trace;
    std::vector<double> eigengap_trace;
    double elapsed_seconds = 0.0;

    std::vector<std::string> file_manifest() const {
        std::vector<std::string> files = {labels_path, embedding_path, report_txt_path,
                                          report_json_path};
        if (!similarity_path.empty()) files.push_back(similarity_path);
        if (!selection_path.empty()) files.push_back(selection_path);
        if (!contingency_path.empty()) files.push_back(contingency_path);
        return files;
    }
};

/// Contingency block: rows per cluster, one count column per diagnosis
/// group, and a total column formatted "count (percent%)".
inline std::string format_contingency(const std::vector<std::string>& ids,
                                      const std::vector<int>& labels,
                                      const std::map<std::string, std::string>& diagnosis) {
    if (ids.size() != labels.size()) throw data_error("contingency: ids/labels mismatch");
    std::vector<std::string> diag_order;
    std::map<std::string, std::size_t> diag_col;
    std::map<int, std::vector<long>> counts;
    long total = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = diagnosis.find(ids[i]);
        if (it == diagnosis.end())
            throw data_error("contingency: no diagnosis for subject '" + ids[i] + "'");
        if (!diag_col.count(it->second)) {
            diag_col[it->second] = diag_order.size();
            diag_order.push_back(it->second);
        }
        auto& row = counts[labels[i]];
        row.resize(diag_order.size(), 0);
        ++row[diag_col[it->second]];
        ++total;
    }
    std::vector<long> diag_totals(diag_order.size(), 0);
    for (auto& [label, row] : counts) {
        row.resize(diag_order.size(), 0);
        for (std::size_t d = 0; d < row.size(); ++d) diag_totals[d] += row[d];
    }

    std::ostringstream out;
    out << "Subtype";
    for (std::size_t d = 0; d < diag_order.size(); ++d)
        out << ",\t" << diag_order[d] << " (n=" << diag_totals[d] << ")";
    out << ",\tTotal (n=" << total << ")\n";
    char buf[64];
    for (const auto& [label, row] : counts) {
        long row_total = 0;
        for (long c : row) row_total += c;
        out << "Subtype " << label;
        for (long c : row) out << ",\t" << c;
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * static_cast<double>(row_total) /
                                                    static_cast<double>(total));
        out << ",\t" << row_total << " (" << buf << "%)\n";
    }
    return out.str();
}

namespace detail {

/// Uniform-weight fused kernel bank, row-normalized then symmetrized; the
/// common input similarity for the plain spectral methods and the SIMLR
/// initialization.
inline Eigen::MatrixXd baseline_similarity(const KernelSet& kernels) {
    KernelWeights w;
    w.w = Eigen::VectorXd::Constant(kernels.size(), 1.0 / kernels.size());
    Eigen::MatrixXd fused = fused_similarity(kernels, w);
    Eigen::MatrixXd theta =
        (fused.array().colwise() / fused.rowwise().sum().array()).matrix();
    return symmetrize(theta);
}

inline Eigen::MatrixXd embedding_for(const Eigen::MatrixXd& similarity, int K) {
    if (K == 1) return sym_eigen(laplacian(similarity)).vectors.leftCols(1);
    return spectral_embedding(similarity, K).v;
}

}  // namespace detail

struct ClusterOutcome {
    ClusterAssignment assignment;
    Eigen::MatrixXd embedding;               // silhouette input
    std::optional<Eigen::MatrixXd> similarity;  // graph methods
    double rho1 = 0.0;
    std::vector<double> objective_trace;
    std::vector<double> eigengap_trace;
};

/// Method dispatch on a fully observed feature matrix. The similarity fed
/// to sc / sc-diffusion is the uniform-weight fused kernel bank, so all
/// graph methods start from the same input and differ only by learning and
/// diffusion stages.
inline ClusterOutcome run_method(const DataMatrix& X, const PipelineConfig& config, int K) {
    ClusterOutcome out;
    if (config.method == Method::kmeans) {
        out.assignment = kmeans(X.values, K, config.seed);
        out.embedding = X.values;
        return out;
    }

    DistanceMatrix D = pairwise_sq_dist(X);
    KernelSet kernels = build_kernel_set(D, config.sigma_grid, config.k_grid);
    Eigen::MatrixXd base = detail::baseline_similarity(kernels);

    switch (config.method) {
        case Method::sc: {
            out.similarity = base;
            break;
        }
        case Method::sc_diffusion: {
            out.similarity = diffuse(base, config.diffusion);
            break;
        }
        case Method::simlr:
        case Method::simlr_diffusion: {
            const Eigen::Index n = X.n();
            int rho_k = std::min<int>(config.rho_neighbors, static_cast<int>(n) - 2);
            if (rho_k < 1) throw data_error("cohort too small for the rho1 estimate");
            out.rho1 = estimate_rho1(D, rho_k);
            SimlrConfig sc;
            sc.K = K;
            sc.rho1 = out.rho1;
            sc.rho2 = out.rho1;
            sc.rho3 = config.rho3;
            sc.max_outer_iters = config.max_outer_iters;
            sc.tol = config.tol;
            if (config.method == Method::simlr_diffusion) {
                sc.diffusion = config.diffusion;
                sc.interleave_diffusion = true;
            } else {
                sc.interleave_diffusion = false;
            }
            SimlrResult res = fit(kernels, sc);
            out.similarity = res.theta.theta;
            out.objective_trace = res.objective_trace;
            out.eigengap_trace = res.eigengap_trace;
            break;
        }
        default:
            break;
    }

    out.embedding = detail::embedding_for(*out.similarity, K);
    ClusterAssignment labels = kmeans(out.embedding, K, config.seed);
    labels.method = method_name(config.method);
    out.assignment = labels;
    return out;
}

/// Full preprocess step: load, drop sparse features, winsorize, impute,
/// z-normalize; writes the matrix and both report forms.
inline PreprocessReport run_preprocess(const std::string& input_path,
                                       const std::string& output_path,
                                       const std::string& report_prefix,
                                       const PreprocessOptions& popts = {},
                                       const LoadOptions& lopts = {}) {
    DataMatrix X = load_matrix(input_path, lopts);
    auto [clean, report] = preprocess(X, popts);
    write_data_csv(output_path, clean);

    atomic_write(report_prefix + ".txt", [&](std::ostream& out) {
        out << "preprocess report\n";
        out << "input: " << input_path << "\n";
        out << "subjects: " << clean.n() << "\n";
        out << "features_retained: " << clean.p() << "\n";
        out << "features_dropped: " << report.dropped_features.size() << "\n";
        for (const auto& [name, frac] : report.dropped_features)
            out << "  dropped " << name << " missing_fraction=" << frac << "\n";
        long winsorized = 0;
        for (const auto& [name, count] : report.winsorized_counts) winsorized += count;
        out << "winsorized_cells: " << winsorized << "\n";
        out << "imputed_cells: " << report.imputed_cells << "\n";
        for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    });

    nlohmann::json j;
    j["input"] = input_path;
    j["subjects"] = clean.n();
    j["features_retained"] = clean.p();
    j["dropped_features"] = nlohmann::json::array();
    for (const auto& [name, frac] : report.dropped_features)
        j["dropped_features"].push_back({{"name", name}, {"missing_fraction", frac}});
    j["winsorized_counts"] = nlohmann::json::array();
    for (const auto& [name, count] : report.winsorized_counts)
        j["winsorized_counts"].push_back({{"name", name}, {"count", count}});
    j["column_means"] = report.column_means;
    j["column_stds"] = report.column_stds;
    j["imputed_cells"] = report.imputed_cells;
    j["warnings"] = report.warnings;
    atomic_write(report_prefix + ".json", [&](std::ostream& out) { out << j.dump(2) << "\n"; });
    return report;
}

/// Cluster subcommand: dispatch, evaluate, write the artifact set.
inline RunReport run_cluster(const std::string& input_path, const std::string& out_prefix,
                             const PipelineConfig& config,
                             const std::string& diagnosis_path = "") {
    config.validate();
    auto t0 = std::chrono::steady_clock::now();
    DataMatrix X = load_matrix(input_path);
    if (X.has_missing())
        throw data_error("cluster input still has missing cells; run preprocess first");

    RunReport report;
    report.method = method_name(config.method);

    int K = config.K;
    if (config.auto_k) {
        if (config.k_max > X.n()) throw data_error("auto-K range exceeds the cohort size");
        DistanceMatrix D = pairwise_sq_dist(X);
        KernelSet kernels = build_kernel_set(D, config.sigma_grid, config.k_grid);
        Eigen::MatrixXd base = detail::baseline_similarity(kernels);
        report.selection = select_k(base, config.k_min, config.k_max, config.selection_rule);
        K = report.selection->chosen_k;
        report.selection_path = out_prefix + ".kselect.csv";
        atomic_write(report.selection_path, [&](std::ostream& out) {
            out << "K,cost\n";
            for (std::size_t i = 0; i < report.selection->candidate_ks.size(); ++i)
                out << report.selection->candidate_ks[i] << ',' << report.selection->costs[i]
                    << '\n';
        });
    }
    report.K = K;
    if (K > X.n()) throw data_error("cluster count exceeds the cohort size");

    ClusterOutcome outcome = run_method(X, config, K);
    report.rho1 = outcome.rho1;
    report.objective_trace = outcome.objective_trace;
    report.eigengap_trace = outcome.eigengap_trace;

    if (K >= 2) {
        report.silhouette_value = silhouette(outcome.embedding, outcome.assignment);
        report.silhouette_defined = true;
    } else {
        report.silhouette_note = "silhouette not defined for K=1";
    }

    report.labels_path = out_prefix + ".labels.csv";
    write_labels_csv(report.labels_path, X.subject_ids, outcome.assignment.labels);
    report.embedding_path = out_prefix + ".embedding.csv";
    write_dense_csv(report.embedding_path, outcome.embedding);
    if (outcome.similarity) {
        report.similarity_path = out_prefix + ".similarity.csv";
        write_dense_csv(report.similarity_path, *outcome.similarity);
    }
    if (!outcome.objective_trace.empty()) {
        write_trace_csv(out_prefix + ".objective.csv", outcome.objective_trace);
        write_trace_csv(out_prefix + ".eigengap.csv", outcome.eigengap_trace);
    }

    if (!diagnosis_path.empty()) {
        std::map<std::string, std::string> diag;
        for (const auto& [id, d] : read_labels_csv(diagnosis_path)) diag[id] = d;
        report.contingency =
            format_contingency(X.subject_ids, outcome.assignment.labels, diag);
        report.contingency_path = out_prefix + ".contingency.txt";
        atomic_write(report.contingency_path,
                     [&](std::ostream& out) { out << report.contingency; });
    }

    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    report.report_txt_path = out_prefix + ".report.txt";
    report.report_json_path = out_prefix + ".report.json";
    atomic_write(report.report_txt_path, [&](std::ostream& out) {
        out << "method: " << report.method << "\n";
        out << "K: " << report.K << "\n";
        out << "seed: " << config.seed << "\n";
        if (config.method == Method::sc || config.method == Method::sc_diffusion)
            out << "similarity_input: uniform-weight fused kernel bank (row-normalized, "
                   "symmetrized)\n";
        if (report.rho1 > 0.0) out << "rho1: " << report.rho1 << " (rho2 = rho1)\n";
        out << "embedding: eigenvectors of the K smallest eigenvalues of L = D - W\n";
        if (report.silhouette_defined)
            out << "silhouette: " << report.silhouette_value << "\n";
        else
            out << "silhouette: " << report.silhouette_note << "\n";
        out << "labels: " << report.labels_path << "\n";
        out << "embedding_file: " << report.embedding_path << "\n";
        if (!report.similarity_path.empty()) out << "similarity: " << report.similarity_path << "\n";
        if (report.selection) {
            out << "auto_k_chosen: " << report.selection->chosen_k << "\n";
            out << "kselect: " << report.selection_path << "\n";
        }
        if (!report.contingency.empty()) out << "\n" << report.contingency;
        out << "elapsed_seconds: " << report.elapsed_seconds << "\n";
    });
    nlohmann::json j;
    j["method"] = report.method;
    j["K"] = report.K;
    j["seed"] = config.seed;
    j["silhouette"] = report.silhouette_defined ? nlohmann::json(report.silhouette_value)
                                                : nlohmann::json(nullptr);
    j["labels"] = report.labels_path;
    j["embedding"] = report.embedding_path;
    if (!report.similarity_path.empty()) j["similarity"] = report.similarity_path;
    if (report.selection) {
        j["auto_k_chosen"] = report.selection->chosen_k;
        j["kselect"] = report.selection_path;
    }
    if (report.rho1 > 0.0) j["rho1"] = report.rho1;
    j["elapsed_seconds"] = report.elapsed_seconds;
    atomic_write(report.report_json_path, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
    return report;
}

/// Select-K subcommand over either a feature table or a similarity matrix.
inline KSelectionResult run_select_k(const std::string& input_path, bool input_is_similarity,
                                     int k_min, int k_max, const std::string& out_csv,
                                     SelectionRule rule = SelectionRule::argmin,
                                     const std::vector<double>& sigma_grid = default_sigma_grid(),
                                     const std::vector<int>& k_grid = default_k_grid()) {
    Eigen::MatrixXd similarity;
    if (input_is_similarity) {
        similarity = read_dense_csv(input_path);
        if (similarity.rows() != similarity.cols())
            throw data_error("similarity input must be square");
    } else {
        DataMatrix X = load_matrix(input_path);
        if (X.has_missing())
            throw data_error("select-k input still has missing cells; run preprocess first");
        DistanceMatrix D = pairwise_sq_dist(X);
        KernelSet kernels = build_kernel_set(D, sigma_grid, k_grid);
        similarity = detail::baseline_similarity(kernels);
    }
    KSelectionResult res = select_k(similarity, k_min, k_max, rule);
    if (!out_csv.empty()) {
        atomic_write(out_csv, [&](std::ostream& out) {
            out << "K,cost\n";
            for (std::size_t i = 0; i < res.candidate_ks.size(); ++i)
                out << res.candidate_ks[i] << ',' << res.costs[i] << '\n';
        });
    }
    return res;
}

struct CharacterizeResult {
    std::vector<std::string> features;
    std::vector<TestResult> anova;
    std::vector<TestResult> kruskal;
    std::vector<std::string> flags;   // per feature, empty when clean
    std::vector<std::string> pair_names;
    // pairwise adjusted p-values: pair_names.size() rows x features.size() cols
    std::vector<std::vector<double>> pairwise_p;
};

/// Characterize subcommand: omnibus tests over the subtypes and Dunn
/// pairwise comparisons over subtypes plus the optional control group.
inline CharacterizeResult run_characterize(const std::string& labels_path,
                                           const std::string& features_path,
                                           const std::string& control_label,
                                           const std::string& out_prefix) {
    auto label_rows = read_labels_csv(labels_path);
    DataMatrix X = load_matrix(features_path);
    std::map<std::string, Eigen::Index> row_of;
    for (Eigen::Index i = 0; i < X.n(); ++i) row_of[X.subject_ids[i]] = i;

    std::vector<std::string> group_names;  // subtypes first, control last
    std::map<std::string, std::size_t> group_idx;
    std::vector<std::vector<Eigen::Index>> members;
    for (const auto& [id, label] : label_rows) {
        auto it = row_of.find(id);
        if (it == row_of.end())
            throw data_error("characterize: subject '" + id + "' not found in features");
        if (!group_idx.count(label)) {
            group_idx[label] = group_names.size();
            group_names.push_back(label);
            members.emplace_back();
        }
        members[group_idx[label]].push_back(it->second);
    }
    bool has_control = !control_label.empty();
    std::size_t control = 0;
    if (has_control) {
        auto it = group_idx.find(control_label);
        if (it == group_idx.end())
            throw data_error("characterize: control label '" + control_label +
                             "' not present in the labels file");
        control = it->second;
    }

    CharacterizeResult res;
    res.features.assign(X.feature_names.begin(), X.feature_names.end());

    // pair list: subtype-vs-control first, then subtype-vs-subtype
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> subtype_ids;
    for (std::size_t g = 0; g < group_names.size(); ++g)
        if (!has_control || g != control) subtype_ids.push_back(g);
    if (has_control)
        for (std::size_t g : subtype_ids) pairs.emplace_back(g, control);
    for (std::size_t a = 0; a < subtype_ids.size(); ++a)
        for (std::size_t b = a + 1; b < subtype_ids.size(); ++b)
            pairs.emplace_back(subtype_ids[a], subtype_ids[b]);
    for (const auto& [a, b] : pairs)
        res.pair_names.push_back(group_names[a] + " vs " + group_names[b]);
    res.pairwise_p.assign(pairs.size(),
                          std::vector<double>(res.features.size(),
                                              std::numeric_limits<double>::quiet_NaN()));

    for (std::size_t f = 0; f < res.features.size(); ++f) {
        std::string flag;
        auto observed_group = [&](std::size_t g) {
            std::vector<double> vals;
            for (Eigen::Index i : members[g])
                if (!X.missing(i, static_cast<Eigen::Index>(f)))
                    vals.push_back(X.values(i, static_cast<Eigen::Index>(f)));
            return vals;
        };

        // omnibus over subtypes with >= 2 observed values
        GroupedSamples omni;
        for (std::size_t g : subtype_ids) {
            auto vals = observed_group(g);
            if (vals.size() < 2) {
                flag += "skipped group " + group_names[g] + " (<2 observations); ";
                continue;
            }
            omni.groups.push_back(std::move(vals));
            omni.names.push_back(group_names[g]);
        }
        TestResult a, k;
        if (omni.groups.size() >= 2) {
            a = anova_oneway(omni);
            k = kruskal_wallis(omni);
            if (!a.flag.empty()) flag += "anova: " + a.flag + "; ";
            if (!k.flag.empty()) flag += "kruskal-wallis: " + k.flag + "; ";
        } else {
            a.method = "anova";
            k.method = "kruskal-wallis";
            a.p_value = k.p_value = std::numeric_limits<double>::quiet_NaN();
            flag += "omnibus skipped (<2 usable groups); ";
        }
        res.anova.push_back(a);
        res.kruskal.push_back(k);

        // Dunn over all usable groups (subtypes + control)
        GroupedSamples all;
        std::map<std::size_t, bool> usable;
        for (std::size_t g = 0; g < group_names.size(); ++g) {
            auto vals = observed_group(g);
            usable[g] = vals.size() >= 2;
            if (usable[g]) {
                all.groups.push_back(std::move(vals));
                all.names.push_back(group_names[g]);
            }
        }
        if (all.groups.size() >= 2) {
            bool all_tied = true;
            double first = all.groups[0][0];
            for (const auto& grp : all.groups)
                for (double v : grp)
                    if (v != first) all_tied = false;
            if (all_tied) {
                flag += "dunn skipped (all values tied); ";
            } else {
                auto comparisons = dunn_test(all);
                std::map<std::pair<std::string, std::string>, double> padj;
                for (const auto& c : comparisons) {
                    padj[{c.name_a, c.name_b}] = c.p_adjusted;
                    padj[{c.name_b, c.name_a}] = c.p_adjusted;
                }
                for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
                    auto key = std::make_pair(group_names[pairs[pi].first],
                                              group_names[pairs[pi].second]);
                    auto it = padj.find(key);
                    if (it != padj.end()) res.pairwise_p[pi][f] = it->second;
                }
            }
        }
        res.flags.push_back(flag);
    }

    if (!out_prefix.empty()) {
        atomic_write(out_prefix + ".omnibus.csv", [&](std::ostream& out) {
            out << "feature,F,p_anova,H,p_kw,flags\n";
            for (std::size_t f = 0; f < res.features.size(); ++f) {
                out << res.features[f] << ',' << res.anova[f].statistic << ','
                    << res.anova[f].p_value << ',' << res.kruskal[f].statistic << ','
                    << res.kruskal[f].p_value << ',' << res.flags[f] << '\n';
            }
        });
        atomic_write(out_prefix + ".pairwise.csv", [&](std::ostream& out) {
            out << "pair";
            for (const auto& f : res.features) out << ',' << f;
            out << '\n';
            for (std::size_t pi = 0; pi < res.pair_names.size(); ++pi) {
                out << res.pair_names[pi];
                for (std::size_t f = 0; f < res.features.size(); ++f)
                    out << ',' << res.pairwise_p[pi][f];
                out << '\n';
            }
        });
    }
    return res;
}

struct AssocRow {
    std::string variant;
    std::string contrast;
    long n = 0;
    double coefficient = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p = 1.0;
    bool converged = false;
    bool significant = false;
    std::string note;
};

/// Association subcommand: per variant and contrast, covariate-adjusted
/// univariate logistic regression with a Wald test. p < 0.05 drives the
/// significance flag; no multiple-testing correction is applied.
inline std::vector<AssocRow> run_assoc(const std::string& labels_path,
                                       const std::string& variants_path,
                                       const std::string& covariates_path,
                                       std::vector<std::pair<std::string, std::string>> contrasts,
                                       const std::string& out_csv) {
    auto label_rows = read_labels_csv(labels_path);
    std::map<std::string, std::string> label_of;
    std::vector<std::string> label_order;
    for (const auto& [id, label] : label_rows) {
        label_of[id] = label;
        if (std::find(label_order.begin(), label_order.end(), label) == label_order.end())
            label_order.push_back(label);
    }
    DataMatrix variants = load_matrix(variants_path);
    std::optional<DataMatrix> covariates;
    if (!covariates_path.empty()) covariates = load_matrix(covariates_path);

    std::map<std::string, Eigen::Index> variant_row, covariate_row;
    for (Eigen::Index i = 0; i < variants.n(); ++i) variant_row[variants.subject_ids[i]] = i;
    if (covariates)
        for (Eigen::Index i = 0; i < covariates->n(); ++i)
            covariate_row[covariates->subject_ids[i]] = i;
    for (const auto& [id, label] : label_rows) {
        (void)label;
        if (!variant_row.count(id))
            throw data_error("assoc: subject '" + id + "' not found in variants file");
        if (covariates && !covariate_row.count(id))
            throw data_error("assoc: subject '" + id + "' not found in covariates file");
    }

    if (contrasts.empty())
        for (std::size_t a = 0; a < label_order.size(); ++a)
            for (std::size_t b = a + 1; b < label_order.size(); ++b)
                contrasts.emplace_back(label_order[a], label_order[b]);

    std::vector<AssocRow> rows;
    for (const auto& [group_a, group_b] : contrasts) {
        std::vector<std::string> subjects;
        for (const auto& [id, label] : label_rows)
            if (label == group_a || label == group_b) subjects.push_back(id);
        long n_a = 0, n_b = 0;
        for (const auto& id : subjects) (label_of[id] == group_a ? n_a : n_b) += 1;
        if (n_a == 0 || n_b == 0)
            throw data_error("assoc: contrast " + group_a + " vs " + group_b +
                             " has a single class");

        const Eigen::Index n_cov = covariates ? covariates->p() : 0;
        for (Eigen::Index v = 0; v < variants.p(); ++v) {
            AssocRow row;
            row.variant = variants.feature_names[v];
            row.contrast = group_a + " vs " + group_b;
            // complete-case rows for this variant + covariates
            std::vector<std::string> used;
            for (const auto& id : subjects) {
                if (variants.missing(variant_row[id], v)) continue;
                bool cov_ok = true;
                if (covariates) {
                    Eigen::Index r = covariate_row[id];
                    for (Eigen::Index c = 0; c < n_cov; ++c)
                        if (covariates->missing(r, c)) cov_ok = false;
                }
                if (cov_ok) used.push_back(id);
            }
            row.n = static_cast<long>(used.size());
            Eigen::VectorXd y(used.size());
            Eigen::MatrixXd design(used.size(), 2 + n_cov);
            for (std::size_t i = 0; i < used.size(); ++i) {
                y(i) = label_of[used[i]] == group_a ? 1.0 : 0.0;
                design(i, 0) = 1.0;
                design(i, 1) = variants.values(variant_row[used[i]], v);
                if (covariates) {
                    Eigen::Index r = covariate_row[used[i]];
                    for (Eigen::Index c = 0; c < n_cov; ++c)
                        design(i, 2 + c) = covariates->values(r, c);
                }
            }
            try {
                LogisticFit fit = logistic_fit(y, design);
                row.coefficient = fit.coefficients(1);
                row.std_error = fit.standard_errors(1);
                row.z = fit.wald_z(1);
                row.p = fit.p_values(1);
                row.converged = fit.converged;
                row.significant = fit.converged && row.p < 0.05;
                row.note = fit.diagnostic;
            } catch (const data_error& err) {
                row.converged = false;
                row.note = err.what();
                row.p = std::numeric_limits<double>::quiet_NaN();
            }
            rows.push_back(std::move(row));
        }
    }

    if (!out_csv.empty()) {
        atomic_write(out_csv, [&](std::ostream& out) {
            out << "variant,contrast,n,coefficient,std_error,z,p,converged,significant,note\n";
            for (const auto& r : rows)
                out << r.variant << ',' << r.contrast << ',' << r.n << ',' << r.coefficient
                    << ',' << r.std_error << ',' << r.z << ',' << r.p << ','
                    << (r.converged ? 1 : 0) << ',' << (r.significant ? 1 : 0) << ',' << r.note
                    << '\n';
        });
    }
    return rows;
}

/// Synth subcommand: blob cohorts or planted similarity matrices, in the
/// formats the rest of the pipeline consumes. Emitted files carry the
/// generator id and seed in comment headers.
inline void run_synth_blobs(const BlobSpec& spec, const std::string& out_prefix) {
    auto [X, labels] = make_blobs(spec);
    std::vector<std::string> comments = {
        std::string("generator: ") + Rng::algorithm(),
        "seed: " + std::to_string(spec.seed),
        "kind: blobs K=" + std::to_string(spec.K) + " p=" + std::to_string(spec.p) +
            " noise_std=" + std::to_string(spec.noise_std)};
    write_data_csv(out_prefix + ".features.csv", X, comments);
    write_labels_csv(out_prefix + ".labels.csv", X.subject_ids, labels);
}

inline void run_synth_similarity(const PlantedGraphSpec& spec, const std::string& out_prefix) {
    auto [S, labels] = make_planted_similarity(spec);
    write_dense_csv(out_prefix + ".similarity.csv", S);
    std::vector<std::string> ids(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) ids[i] = "s" + std::to_string(i + 1);
    write_labels_csv(out_prefix + ".labels.csv", ids, labels);
}

}  // namespace simclust
