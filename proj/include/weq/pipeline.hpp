#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weq/corpus.hpp"
#include "weq/factorize.hpp"
#include "weq/infomatrix.hpp"
#include "weq/qsampler.hpp"

namespace weq {

enum class Method { weq, mf };

const char* method_name(Method m);
Method method_from_name(std::string_view name);

struct PipelineConfig {
    std::string corpus;
    std::string out_dir = ".";
    int window = 10;
    std::uint64_t min_count = 5;
    Weighting weighting = Weighting::harmonic;
    InfoKind kind = InfoKind::ppmi;
    double shift = 5.0;
    Method method = Method::weq;
    SamplerKind sampler = SamplerKind::l2;
    std::uint64_t samples = 0;      // k; required for the weq method
    std::uint64_t col_samples = 0;  // k'; 0 disables column sampling
    std::size_t dim = 300;
    std::uint64_t seed = 1;
    double svd_tol = 1e-10;
    std::size_t svd_max_iter = 300;
    std::size_t svd_oversample = 8;
    bool cache = true;

    std::string vocab_path() const { return out_dir + "/vocab.tsv"; }
    std::string cooc_path() const { return out_dir + "/cooc.weqx"; }
    std::string matrix_path() const { return out_dir + "/matrix.weqm"; }
    std::string qcontexts_path() const { return out_dir + "/qcontexts.weqq"; }
    std::string colctx_path() const { return out_dir + "/colctx.weqq"; }
    std::string svd_path() const { return out_dir + "/svd.wequ"; }
    std::string embeddings_path() const { return out_dir + "/embeddings.txt"; }
    std::string summary_path() const { return out_dir + "/summary.tsv"; }

    SvdOptions svd_options() const { return {svd_tol, svd_max_iter, svd_oversample}; }
};

// Flat key=value config file; unknown keys are rejected, round-trips are
// lossless.
PipelineConfig load_config(const std::string& path);
void save_config(const std::string& path, const PipelineConfig& cfg);
void apply_config_line(PipelineConfig& cfg, std::string_view key, std::string_view value);
void validate_config(const PipelineConfig& cfg);

struct StageTiming {
    std::string name;
    double seconds = 0.0;
    bool skipped = false;  // cache hit
};

struct PipelineSummary {
    std::vector<StageTiming> stages;
    double total_seconds = 0.0;
    std::string embeddings_path;

    double fraction(std::size_t i) const;
};

// Outputs are written to "<path>.partial" and renamed on success, so a failed
// stage leaves its partial artifact behind.
void stage_cooc(const PipelineConfig& cfg, StageTiming* timing = nullptr);
void stage_matrix(const PipelineConfig& cfg, StageTiming* timing = nullptr);
void stage_sample(const PipelineConfig& cfg, StageTiming* state_timing = nullptr,
                  StageTiming* sample_timing = nullptr);
void stage_svd(const PipelineConfig& cfg, StageTiming* timing = nullptr);
void stage_embed(const PipelineConfig& cfg, StageTiming* timing = nullptr);

// Loads the sparse rows behind either container magic ("WEQM"/"WEQX" square
// matrices or "WEQQ" sampled rows).
SparseMatrix load_rows_any(const std::string& path);

PipelineSummary run_pipeline(const PipelineConfig& cfg);

void save_summary(const std::string& path, const PipelineSummary& summary);

// FNV-1a over a file's bytes; cache stamps combine it with the config subset.
std::uint64_t hash_file(const std::string& path);

}  // namespace weq
