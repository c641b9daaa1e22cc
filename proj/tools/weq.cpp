// weq: word embeddings from length-squared-sampled contexts of a PPMI matrix.
//
// Subcommands mirror the pipeline stages (cooc, matrix, sample, svd, embed,
// eval), `run` executes the whole pipeline with caching, and `verify` hosts
// the statistical experiments. Exit codes: 0 ok, 2 validation error, 3 stage
// failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "weq/error.hpp"
#include "weq/evalsim.hpp"
#include "weq/kernels.hpp"
#include "weq/pipeline.hpp"
#include "weq/stats.hpp"
#include "weq/verify.hpp"

namespace {

struct CommonPipelineFlags {
    std::optional<std::string> config_path;
    weq::PipelineConfig cfg;
};

void add_pipeline_options(CLI::App* cmd, CommonPipelineFlags& flags) {
    cmd->add_option("--config", flags.config_path, "flat key=value config file");
    cmd->add_option("--corpus", flags.cfg.corpus, "input corpus (plain text)");
    cmd->add_option("--out-dir", flags.cfg.out_dir, "artifact directory");
    cmd->add_option("--window", flags.cfg.window, "half window size");
    cmd->add_option("--min-count", flags.cfg.min_count, "vocabulary frequency cutoff");
    cmd->add_option_function<std::string>(
        "--weighting", [&](const std::string& v) { flags.cfg.weighting = weq::weighting_from_name(v); },
        "flat|harmonic");
    cmd->add_option_function<std::string>(
        "--kind", [&](const std::string& v) { flags.cfg.kind = weq::info_kind_from_name(v); },
        "pmi|ppmi|spmi|sppmi");
    cmd->add_option("--shift", flags.cfg.shift, "shift parameter kappa");
    cmd->add_option_function<std::string>(
        "--method", [&](const std::string& v) { flags.cfg.method = weq::method_from_name(v); },
        "weq|mf");
    cmd->add_option_function<std::string>(
        "--sampler", [&](const std::string& v) { flags.cfg.sampler = weq::sampler_from_name(v); },
        "l2|uniform");
    cmd->add_option("--samples", flags.cfg.samples, "row sample count k");
    cmd->add_option("--col-samples", flags.cfg.col_samples, "column sample count k' (0 = off)");
    cmd->add_option("--dim", flags.cfg.dim, "embedding dimension");
    cmd->add_option("--seed", flags.cfg.seed, "sampling seed");
    cmd->add_option("--svd-tol", flags.cfg.svd_tol, "relative Ritz-change tolerance");
    cmd->add_option("--svd-max-iter", flags.cfg.svd_max_iter, "subspace iteration cap");
    cmd->add_option("--svd-oversample", flags.cfg.svd_oversample, "block oversampling");
    cmd->add_flag("--no-cache", [&](std::int64_t) { flags.cfg.cache = false; },
                  "recompute every stage");
}

// Config file first, CLI flags override.
weq::PipelineConfig resolve_config(const CommonPipelineFlags& flags, const CLI::App* cmd) {
    if (!flags.config_path.has_value()) return flags.cfg;
    weq::PipelineConfig cfg = weq::load_config(*flags.config_path);
    const weq::PipelineConfig& cli = flags.cfg;
    if (cmd->count("--corpus") > 0) cfg.corpus = cli.corpus;
    if (cmd->count("--out-dir") > 0) cfg.out_dir = cli.out_dir;
    if (cmd->count("--window") > 0) cfg.window = cli.window;
    if (cmd->count("--min-count") > 0) cfg.min_count = cli.min_count;
    if (cmd->count("--weighting") > 0) cfg.weighting = cli.weighting;
    if (cmd->count("--kind") > 0) cfg.kind = cli.kind;
    if (cmd->count("--shift") > 0) cfg.shift = cli.shift;
    if (cmd->count("--method") > 0) cfg.method = cli.method;
    if (cmd->count("--sampler") > 0) cfg.sampler = cli.sampler;
    if (cmd->count("--samples") > 0) cfg.samples = cli.samples;
    if (cmd->count("--col-samples") > 0) cfg.col_samples = cli.col_samples;
    if (cmd->count("--dim") > 0) cfg.dim = cli.dim;
    if (cmd->count("--seed") > 0) cfg.seed = cli.seed;
    if (cmd->count("--svd-tol") > 0) cfg.svd_tol = cli.svd_tol;
    if (cmd->count("--svd-max-iter") > 0) cfg.svd_max_iter = cli.svd_max_iter;
    if (cmd->count("--svd-oversample") > 0) cfg.svd_oversample = cli.svd_oversample;
    if (cmd->count("--no-cache") > 0) cfg.cache = false;
    return cfg;
}

std::vector<std::size_t> parse_k_grid(const std::string& csv) {
    std::vector<std::size_t> grid;
    std::size_t at = 0;
    while (at < csv.size()) {
        std::size_t comma = csv.find(',', at);
        if (comma == std::string::npos) comma = csv.size();
        try {
            grid.push_back(std::stoull(csv.substr(at, comma - at)));
        } catch (const std::exception&) {
            throw weq::validation_error("bad k grid entry in '" + csv + "'");
        }
        at = comma + 1;
    }
    if (grid.empty()) throw weq::validation_error("empty k grid");
    return grid;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"word embeddings from sampled contexts of an information matrix"};
    app.require_subcommand(1);

    // --- run -------------------------------------------------------------
    CommonPipelineFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "execute the full pipeline");
    add_pipeline_options(run_cmd, run_flags);

    // --- stage subcommands -----------------------------------------------
    CommonPipelineFlags cooc_flags;
    CLI::App* cooc_cmd = app.add_subcommand("cooc", "tokenize, build vocab, count pairs");
    add_pipeline_options(cooc_cmd, cooc_flags);

    CommonPipelineFlags matrix_flags;
    CLI::App* matrix_cmd = app.add_subcommand("matrix", "build the information matrix");
    add_pipeline_options(matrix_cmd, matrix_flags);

    CommonPipelineFlags sample_flags;
    CLI::App* sample_cmd = app.add_subcommand("sample", "sample the Q-contexts matrix");
    add_pipeline_options(sample_cmd, sample_flags);

    CommonPipelineFlags svd_flags;
    CLI::App* svd_cmd = app.add_subcommand("svd", "top-d singular structure");
    add_pipeline_options(svd_cmd, svd_flags);

    CommonPipelineFlags embed_flags;
    CLI::App* embed_cmd = app.add_subcommand("embed", "assemble embedding vectors");
    add_pipeline_options(embed_cmd, embed_flags);

    // --- eval --------------------------------------------------------------
    std::string eval_embeddings, eval_pairs;
    CLI::App* eval_cmd = app.add_subcommand("eval", "word-similarity evaluation");
    eval_cmd->add_option("--embeddings", eval_embeddings, "word2vec text file")->required();
    eval_cmd->add_option("--pairs", eval_pairs, "word_a<TAB>word_b<TAB>score file")->required();

    // --- verify ------------------------------------------------------------
    CLI::App* verify_cmd = app.add_subcommand("verify", "statistical experiments");
    verify_cmd->require_subcommand(1);

    std::string conc_matrix, conc_out, conc_grid = "8,32,128";
    std::size_t conc_trials = 20;
    std::uint64_t conc_seed = 1;
    bool conc_plot = false;
    CLI::App* conc_cmd = verify_cmd->add_subcommand("concentration", "Gram approximation error");
    conc_cmd->add_option("--matrix", conc_matrix, "information matrix file")->required();
    conc_cmd->add_option("--k-grid", conc_grid, "comma-separated sample counts");
    conc_cmd->add_option("--trials", conc_trials, "trials per k");
    conc_cmd->add_option("--seed", conc_seed, "base seed");
    conc_cmd->add_option("--out", conc_out, "report file (tsv)");
    conc_cmd->add_flag("--plot-data", conc_plot, "emit per-k (k, score, time-ratio) series");

    std::string abl_matrix;
    std::size_t abl_samples = 64, abl_trials = 200;
    std::uint64_t abl_seed = 1;
    CLI::App* abl_cmd = verify_cmd->add_subcommand("ablation", "l2 vs uniform sampling");
    abl_cmd->add_option("--matrix", abl_matrix, "information matrix file")->required();
    abl_cmd->add_option("--samples", abl_samples, "row sample count k");
    abl_cmd->add_option("--trials", abl_trials, "paired trials");
    abl_cmd->add_option("--seed", abl_seed, "base seed");

    std::vector<std::string> nnz_matrices;
    std::size_t nnz_dim = 16, nnz_repeats = 5;
    CLI::App* nnz_cmd = verify_cmd->add_subcommand("nnztime", "nnz vs time-excluding-SVD");
    nnz_cmd->add_option("--matrices", nnz_matrices, "information matrix files")->required();
    nnz_cmd->add_option("--dim", nnz_dim, "probe dimension");
    nnz_cmd->add_option("--repeats", nnz_repeats, "timing repeats (median)");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        const weq::PipelineConfig cfg = resolve_config(run_flags, run_cmd);
        const weq::PipelineSummary summary = weq::run_pipeline(cfg);
        for (std::size_t i = 0; i < summary.stages.size(); ++i) {
            const weq::StageTiming& t = summary.stages[i];
            std::printf("%-18s %9.3fs %6.2f%%%s\n", t.name.c_str(), t.seconds,
                        100.0 * summary.fraction(i), t.skipped ? "  (cached)" : "");
        }
        std::printf("%-18s %9.3fs\n", "total", summary.total_seconds);
        std::printf("embeddings: %s\n", summary.embeddings_path.c_str());
        std::printf("simd: %s\n", weq::kernels::active_level_name());
        return 0;
    }
    if (cooc_cmd->parsed()) {
        weq::PipelineConfig cfg = resolve_config(cooc_flags, cooc_cmd);
        if (cfg.corpus.empty()) throw weq::validation_error("--corpus is required");
        std::filesystem::create_directories(cfg.out_dir);
        weq::stage_cooc(cfg);
        return 0;
    }
    if (matrix_cmd->parsed()) {
        weq::PipelineConfig cfg = resolve_config(matrix_flags, matrix_cmd);
        std::filesystem::create_directories(cfg.out_dir);
        weq::stage_matrix(cfg);
        return 0;
    }
    if (sample_cmd->parsed()) {
        weq::PipelineConfig cfg = resolve_config(sample_flags, sample_cmd);
        if (cfg.samples == 0) throw weq::validation_error("--samples must be >= 1");
        std::filesystem::create_directories(cfg.out_dir);
        weq::stage_sample(cfg);
        return 0;
    }
    if (svd_cmd->parsed()) {
        weq::PipelineConfig cfg = resolve_config(svd_flags, svd_cmd);
        std::filesystem::create_directories(cfg.out_dir);
        weq::stage_svd(cfg);
        return 0;
    }
    if (embed_cmd->parsed()) {
        weq::PipelineConfig cfg = resolve_config(embed_flags, embed_cmd);
        std::filesystem::create_directories(cfg.out_dir);
        weq::stage_embed(cfg);
        return 0;
    }
    if (eval_cmd->parsed()) {
        const weq::EmbeddingMatrix e = weq::load_embeddings_word2vec(eval_embeddings);
        const weq::SimilarityDataset ds = weq::load_similarity_dataset(eval_pairs);
        const weq::EvalResult r = weq::evaluate(e, ds);
        std::printf("%s %.6f %zu %zu\n", ds.name.c_str(), r.score, r.covered, r.skipped);
        return 0;
    }
    if (conc_cmd->parsed()) {
        const weq::SparseMatrix m = weq::load_sparse_square(conc_matrix, "WEQM");
        const std::vector<std::size_t> grid = parse_k_grid(conc_grid);
        const auto rows = weq::concentration_experiment(m, grid, conc_trials, conc_seed);
        if (!conc_out.empty()) weq::save_report(conc_out, rows);
        for (const weq::ConcentrationReport& r : rows) {
            std::printf("%zu\t%zu\t%.6e\t%.6e\t%.6e\t%.6f\n", r.k, r.trial, r.eps_op, r.eps_frob,
                        r.bound_sigma_op, r.seconds);
        }
        if (conc_plot) {
            // Desk-scale series: per k, the median relative operator error and
            // the median (build+measure) time against one baseline SVD on M.
            const std::size_t d_probe = std::min<std::size_t>(32, std::min(m.n_rows(), m.n_cols()));
            weq::SvdOptions probe_opts;
            probe_opts.tol = 1e-4;
            probe_opts.max_iter = 200;
            const double t0 = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now().time_since_epoch())
                                  .count();
            (void)weq::truncated_svd(m, d_probe, probe_opts);
            const double mf_seconds = std::chrono::duration<double>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count() -
                                      t0;
            std::vector<double> tmp;
            std::printf("# plot-data: k\tscore\ttime_ratio\n");
            const double mop = weq::operator_norm(
                [&](const double* x, double* y) {
                    std::vector<double> mid(m.n_rows());
                    m.mul_vec(x, mid.data());
                    m.tmul_vec(mid.data(), y);
                },
                m.n_cols());
            for (const std::size_t k : grid) {
                std::vector<double> errs, secs;
                for (const weq::ConcentrationReport& r : rows) {
                    if (r.k == k) {
                        errs.push_back(r.eps_op / mop);
                        secs.push_back(r.seconds);
                    }
                }
                std::printf("%zu\t%.6e\t%.6f\n", k, weq::median(errs),
                            weq::median(secs) / mf_seconds);
            }
        }
        return 0;
    }
    if (abl_cmd->parsed()) {
        const weq::SparseMatrix m = weq::load_sparse_square(abl_matrix, "WEQM");
        const weq::AblationResult r = weq::sampler_ablation(m, abl_samples, abl_trials, abl_seed);
        std::printf("k=%zu trials=%zu median_l2=%.6e median_uniform=%.6e median_ratio=%.4f "
                    "l2_wins=%zu sign_p=%.3e\n",
                    r.k, r.trials, weq::median(r.l2_frob_errors),
                    weq::median(r.uniform_frob_errors), r.median_ratio, r.l2_wins, r.sign_test_p);
        return 0;
    }
    if (nnz_cmd->parsed()) {
        std::vector<weq::SparseMatrix> ms;
        ms.reserve(nnz_matrices.size());
        for (const std::string& path : nnz_matrices) {
            ms.push_back(weq::load_sparse_square(path, "WEQM"));
        }
        const weq::NnzTimeResult r = weq::nnz_time_probe(ms, nnz_dim, nnz_repeats);
        for (const weq::NnzTimeRow& row : r.rows) {
            std::printf("%zu\t%.6f\n", row.nnz, row.tes_seconds);
        }
        if (r.pearson.has_value()) std::printf("pearson\t%.4f\n", *r.pearson);
        else std::printf("pearson\tundefined\n");
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const weq::validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const weq::compute_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
