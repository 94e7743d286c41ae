// Command-line front end for the clustering toolkit: preprocess, cluster,
// select-k, characterize, assoc, synth.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "simclust/pipeline.hpp"

namespace {

simclust::SelectionRule parse_rule(const std::string& rule) {
    if (rule == "argmin") return simclust::SelectionRule::argmin;
    if (rule == "largest-drop") return simclust::SelectionRule::largest_drop;
    throw simclust::data_error("unknown selection rule '" + rule +
                               "' (expected argmin or largest-drop)");
}

std::pair<std::string, std::string> parse_contrast(const std::string& spec) {
    auto pos = spec.find(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 == spec.size())
        throw simclust::data_error("contrast must look like GROUPA:GROUPB, got '" + spec + "'");
    return {spec.substr(0, pos), spec.substr(pos + 1)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simclust: multi-kernel similarity learning, graph diffusion, and "
                 "spectral clustering for cohort subtyping"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file (flags win on conflict)");

    // preprocess
    std::string pre_input, pre_output, pre_report;
    simclust::PreprocessOptions popts;
    simclust::LoadOptions lopts;
    bool clear_default_tokens = false;
    auto* pre = app.add_subcommand("preprocess",
                                   "drop sparse features, winsorize, impute, z-normalize");
    pre->add_option("--input", pre_input, "input feature CSV")->required();
    pre->add_option("--output", pre_output, "output matrix CSV")->required();
    pre->add_option("--report", pre_report, "report path prefix (default <output>.report)");
    pre->add_option("--max-missing-fraction", popts.max_missing_fraction,
                    "drop features missing in more than this fraction of subjects");
    pre->add_option("--iqr-factor", popts.iqr_factor, "winsorization IQR multiple");
    pre->add_option("--id-column", lopts.id_column, "name of the subject id column");
    std::vector<std::string> extra_tokens;
    pre->add_option("--missing-token", extra_tokens, "additional missing-value token");
    pre->add_flag("--no-default-missing-tokens", clear_default_tokens,
                  "treat only --missing-token values as missing");

    // cluster
    std::string cl_input, cl_out, cl_method = "simlr-diffusion", cl_k = "5", cl_rule = "argmin";
    std::string cl_diagnosis;
    simclust::PipelineConfig pcfg;
    auto* cl = app.add_subcommand("cluster", "run a clustering method end to end");
    cl->add_option("--input", cl_input, "preprocessed feature CSV")->required();
    cl->add_option("--out", cl_out, "output path prefix")->required();
    cl->add_option("--method", cl_method,
                   "kmeans | sc | sc-diffusion | simlr | simlr-diffusion");
    cl->add_option("--k", cl_k, "cluster count, or 'auto' for self-tuning selection");
    cl->add_option("--k-min", pcfg.k_min, "auto-K lower bound");
    cl->add_option("--k-max", pcfg.k_max, "auto-K upper bound");
    cl->add_option("--rule", cl_rule, "auto-K rule: argmin | largest-drop");
    cl->add_option("--seed", pcfg.seed, "random seed");
    cl->add_option("--tau", pcfg.diffusion.tau, "diffusion mixing parameter");
    cl->add_option("--neighbors", pcfg.diffusion.neighbors, "diffusion neighbor count");
    cl->add_option("--steps", pcfg.diffusion.steps, "diffusion iteration count");
    cl->add_option("--rho3", pcfg.rho3, "kernel-weight entropy penalty");
    cl->add_option("--max-iters", pcfg.max_outer_iters, "SIMLR outer iteration cap");
    cl->add_option("--tol", pcfg.tol, "SIMLR eigengap convergence tolerance");
    cl->add_option("--rho-neighbors", pcfg.rho_neighbors,
                   "neighbor index for the rho1 distance-gap estimate");
    cl->add_option("--diagnosis", cl_diagnosis,
                   "optional (subject_id,diagnosis) CSV for a contingency table");

    // select-k
    std::string sk_input, sk_out, sk_rule = "argmin";
    bool sk_similarity = false;
    int sk_min = 2, sk_max = 10;
    auto* sk = app.add_subcommand("select-k", "separation-cost curve over candidate K");
    sk->add_option("--input", sk_input, "feature CSV or similarity CSV")->required();
    sk->add_option("--out", sk_out, "output (K,cost) CSV")->required();
    sk->add_flag("--similarity", sk_similarity, "input is a dense similarity matrix");
    sk->add_option("--k-min", sk_min, "smallest candidate K");
    sk->add_option("--k-max", sk_max, "largest candidate K");
    sk->add_option("--rule", sk_rule, "argmin | largest-drop");

    // characterize
    std::string ch_labels, ch_features, ch_control, ch_out;
    auto* ch = app.add_subcommand("characterize",
                                  "omnibus and pairwise statistics per feature");
    ch->add_option("--labels", ch_labels, "(subject_id,label) CSV")->required();
    ch->add_option("--features", ch_features, "feature CSV")->required();
    ch->add_option("--control-label", ch_control, "label value marking the control group");
    ch->add_option("--out", ch_out, "output path prefix")->required();

    // assoc
    std::string as_labels, as_variants, as_covariates, as_out;
    std::vector<std::string> as_contrasts;
    auto* as = app.add_subcommand("assoc", "covariate-adjusted logistic association tests");
    as->add_option("--labels", as_labels, "(subject_id,label) CSV")->required();
    as->add_option("--variants", as_variants, "numeric variant CSV")->required();
    as->add_option("--covariates", as_covariates, "numeric covariate CSV");
    as->add_option("--contrast", as_contrasts, "GROUPA:GROUPB (repeatable; default all pairs)");
    as->add_option("--out", as_out, "output CSV")->required();

    // synth
    std::string sy_kind = "blobs", sy_out;
    simclust::BlobSpec blob;
    simclust::PlantedGraphSpec planted;
    std::vector<int> per_cluster = {100};
    std::vector<int> block_sizes;
    std::uint64_t sy_seed = 0;
    auto* sy = app.add_subcommand("synth", "generate synthetic cohorts with planted labels");
    sy->add_option("--kind", sy_kind, "blobs | similarity");
    sy->add_option("--out", sy_out, "output path prefix")->required();
    sy->add_option("--seed", sy_seed, "random seed");
    sy->add_option("--clusters", blob.K, "blob cluster count");
    sy->add_option("--per-cluster", per_cluster, "subjects per cluster (one value or K values)");
    sy->add_option("--dim", blob.p, "feature dimension");
    sy->add_option("--center-scale", blob.center_scale, "center coordinate range");
    sy->add_option("--noise-std", blob.noise_std, "per-point Gaussian noise");
    sy->add_option("--block-sizes", block_sizes, "similarity block sizes");
    sy->add_option("--in-weight", planted.in_weight, "within-block similarity");
    sy->add_option("--out-weight", planted.out_weight, "cross-block similarity");
    sy->add_option("--noise", planted.noise_amplitude, "uniform noise amplitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*pre) {
            if (pre_report.empty()) pre_report = pre_output + ".report";
            if (clear_default_tokens) lopts.missing_tokens.clear();
            for (const auto& t : extra_tokens) lopts.missing_tokens.push_back(t);
            if (lopts.missing_tokens.empty()) lopts.missing_tokens = {""};
            simclust::run_preprocess(pre_input, pre_output, pre_report, popts, lopts);
            std::cout << "wrote " << pre_output << " and " << pre_report << ".{txt,json}\n";
        } else if (*cl) {
            pcfg.method = simclust::parse_method(cl_method);
            pcfg.selection_rule = parse_rule(cl_rule);
            if (cl_k == "auto") {
                pcfg.auto_k = true;
            } else {
                try {
                    pcfg.K = std::stoi(cl_k);
                } catch (const std::exception&) {
                    throw simclust::data_error("--k must be an integer or 'auto'");
                }
            }
            simclust::RunReport report = simclust::run_cluster(cl_input, cl_out, pcfg,
                                                               cl_diagnosis);
            std::cout << "method=" << report.method << " K=" << report.K;
            if (report.silhouette_defined)
                std::cout << " silhouette=" << report.silhouette_value;
            std::cout << " elapsed=" << report.elapsed_seconds << "s\n";
            std::cout << "report: " << report.report_txt_path << "\n";
        } else if (*sk) {
            auto res = simclust::run_select_k(sk_input, sk_similarity, sk_min, sk_max, sk_out,
                                              parse_rule(sk_rule));
            std::cout << "chosen K = " << res.chosen_k << "\n";
        } else if (*ch) {
            simclust::run_characterize(ch_labels, ch_features, ch_control, ch_out);
            std::cout << "wrote " << ch_out << ".omnibus.csv and " << ch_out
                      << ".pairwise.csv\n";
        } else if (*as) {
            std::vector<std::pair<std::string, std::string>> contrasts;
            for (const auto& c : as_contrasts) contrasts.push_back(parse_contrast(c));
            auto rows = simclust::run_assoc(as_labels, as_variants, as_covariates, contrasts,
                                            as_out);
            long hits = 0;
            for (const auto& r : rows) hits += r.significant ? 1 : 0;
            std::cout << rows.size() << " tests, " << hits << " with p < 0.05; wrote "
                      << as_out << "\n";
        } else if (*sy) {
            if (sy_kind == "blobs") {
                blob.n_per_cluster = per_cluster;
                blob.seed = sy_seed;
                simclust::run_synth_blobs(blob, sy_out);
                std::cout << "wrote " << sy_out << ".features.csv and " << sy_out
                          << ".labels.csv\n";
            } else if (sy_kind == "similarity") {
                planted.block_sizes = block_sizes;
                planted.seed = sy_seed;
                simclust::run_synth_similarity(planted, sy_out);
                std::cout << "wrote " << sy_out << ".similarity.csv and " << sy_out
                          << ".labels.csv\n";
            } else {
                throw simclust::data_error("--kind must be blobs or similarity");
            }
        }
    } catch (const simclust::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const simclust::numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
