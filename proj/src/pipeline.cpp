#include "weq/pipeline.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "weq/error.hpp"

namespace weq {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(std::string_view v, const std::string& key) {
    try {
        return std::stod(std::string(v));
    } catch (const std::exception&) {
        throw validation_error("bad numeric value for '" + key + "'");
    }
}

std::uint64_t parse_u64(std::string_view v, const std::string& key) {
    try {
        return std::stoull(std::string(v));
    } catch (const std::exception&) {
        throw validation_error("bad integer value for '" + key + "'");
    }
}

class StageClock {
  public:
    explicit StageClock(StageTiming* out, std::string name) : out_(out), start_(now_seconds()) {
        if (out_ != nullptr) {
            out_->name = std::move(name);
            out_->seconds = 0.0;
            out_->skipped = false;
        }
    }
    void mark_skipped() {
        if (out_ != nullptr) out_->skipped = true;
    }
    void stop() {
        if (out_ != nullptr && !out_->skipped) out_->seconds = now_seconds() - start_;
        if (out_ != nullptr && out_->skipped) out_->seconds = 0.0;
    }

  private:
    StageTiming* out_;
    double start_;
};

// Atomic-ish output: write to <path>.partial, rename into place on success.
class StagedOutput {
  public:
    explicit StagedOutput(std::string path) : path_(std::move(path)) {}
    const std::string& partial() const { return partial_path_; }
    void commit() {
        std::error_code ec;
        fs::rename(partial_path_, path_, ec);
        if (ec) throw compute_error("cannot move '" + partial_path_ + "' into place");
    }

  private:
    std::string path_;
    std::string partial_path_ = path_ + ".partial";
};

std::uint64_t fnv1a_update(std::uint64_t h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t hash_with_params(const std::vector<std::string>& inputs, const std::string& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const std::string& path : inputs) {
        const std::uint64_t fh = hash_file(path);
        h = fnv1a_update(h, &fh, sizeof(fh));
    }
    h = fnv1a_update(h, params.data(), params.size());
    return h;
}

bool stamp_matches(const std::string& output, std::uint64_t key) {
    std::ifstream in(output + ".stamp");
    if (!in) return false;
    std::string hex;
    in >> hex;
    char expect[32];
    std::snprintf(expect, sizeof(expect), "%016" PRIx64, key);
    return hex == expect && fs::exists(output);
}

void write_stamp(const std::string& output, std::uint64_t key) {
    std::ofstream out(output + ".stamp", std::ios::trunc);
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, key);
    out << hex << '\n';
}

}  // namespace

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "' for hashing");
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::vector<char> buf(1 << 16);
    while (in.good()) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a_update(h, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h;
}

const char* method_name(Method m) { return m == Method::weq ? "weq" : "mf"; }

Method method_from_name(std::string_view name) {
    if (name == "weq") return Method::weq;
    if (name == "mf") return Method::mf;
    throw validation_error("unknown method '" + std::string(name) + "'");
}

void apply_config_line(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    const std::string k(key);
    if (k == "corpus") cfg.corpus = value;
    else if (k == "out_dir") cfg.out_dir = value;
    else if (k == "window") cfg.window = static_cast<int>(parse_u64(value, k));
    else if (k == "min_count") cfg.min_count = parse_u64(value, k);
    else if (k == "weighting") cfg.weighting = weighting_from_name(value);
    else if (k == "kind") cfg.kind = info_kind_from_name(value);
    else if (k == "shift") cfg.shift = parse_double(value, k);
    else if (k == "method") cfg.method = method_from_name(value);
    else if (k == "sampler") cfg.sampler = sampler_from_name(value);
    else if (k == "samples") cfg.samples = parse_u64(value, k);
    else if (k == "col_samples") cfg.col_samples = parse_u64(value, k);
    else if (k == "dim") cfg.dim = parse_u64(value, k);
    else if (k == "seed") cfg.seed = parse_u64(value, k);
    else if (k == "svd_tol") cfg.svd_tol = parse_double(value, k);
    else if (k == "svd_max_iter") cfg.svd_max_iter = parse_u64(value, k);
    else if (k == "svd_oversample") cfg.svd_oversample = parse_u64(value, k);
    else if (k == "cache") cfg.cache = value == "true" || value == "1";
    else throw validation_error("unknown config key '" + k + "'");
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config '" + path + "'");
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) + " has no '='");
        apply_config_line(cfg, std::string_view(line).substr(0, eq),
                          std::string_view(line).substr(eq + 1));
    }
    return cfg;
}

void save_config(const std::string& path, const PipelineConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw compute_error("cannot open config '" + path + "' for writing");
    out << "corpus=" << cfg.corpus << '\n'
        << "out_dir=" << cfg.out_dir << '\n'
        << "window=" << cfg.window << '\n'
        << "min_count=" << cfg.min_count << '\n'
        << "weighting=" << weighting_name(cfg.weighting) << '\n'
        << "kind=" << info_kind_name(cfg.kind) << '\n'
        << "shift=" << format_double(cfg.shift) << '\n'
        << "method=" << method_name(cfg.method) << '\n'
        << "sampler=" << sampler_name(cfg.sampler) << '\n'
        << "samples=" << cfg.samples << '\n'
        << "col_samples=" << cfg.col_samples << '\n'
        << "dim=" << cfg.dim << '\n'
        << "seed=" << cfg.seed << '\n'
        << "svd_tol=" << format_double(cfg.svd_tol) << '\n'
        << "svd_max_iter=" << cfg.svd_max_iter << '\n'
        << "svd_oversample=" << cfg.svd_oversample << '\n'
        << "cache=" << (cfg.cache ? "true" : "false") << '\n';
    if (!out) throw compute_error("write failed for '" + path + "'");
}

void validate_config(const PipelineConfig& cfg) {
    if (cfg.corpus.empty()) throw validation_error("config: corpus path is required");
    if (cfg.window < 1) throw validation_error("config: window must be >= 1");
    if (cfg.min_count < 1) throw validation_error("config: min_count must be >= 1");
    if (cfg.dim < 1) throw validation_error("config: dim must be >= 1");
    if (cfg.method == Method::weq && cfg.samples == 0)
        throw validation_error("config: samples (k) must be >= 1 for the weq method");
    const bool shifted = cfg.kind == InfoKind::spmi || cfg.kind == InfoKind::sppmi;
    if (shifted && !(cfg.shift >= 1.0)) throw validation_error("config: shift must be >= 1");
    if (!(cfg.svd_tol > 0.0)) throw validation_error("config: svd_tol must be positive");
    if (cfg.svd_max_iter < 2) throw validation_error("config: svd_max_iter must be >= 2");
}

double PipelineSummary::fraction(std::size_t i) const {
    return total_seconds > 0.0 ? stages[i].seconds / total_seconds : 0.0;
}

void stage_cooc(const PipelineConfig& cfg, StageTiming* timing) {
    StageClock clock(timing, "cooccurrence");
    const std::uint64_t key = hash_with_params(
        {cfg.corpus}, std::string("cooc|w=") + std::to_string(cfg.window) +
                          "|m=" + std::to_string(cfg.min_count) +
                          "|g=" + weighting_name(cfg.weighting));
    if (cfg.cache && stamp_matches(cfg.cooc_path(), key) && stamp_matches(cfg.vocab_path(), key)) {
        clock.mark_skipped();
        clock.stop();
        return;
    }

    std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts;
    {
        std::ifstream in(cfg.corpus, std::ios::binary);
        if (!in) throw validation_error("cannot open corpus '" + cfg.corpus + "'");
        tokenize_stream(in, [&](std::string_view t) {
            auto it = counts.find(t);
            if (it == counts.end()) counts.emplace(std::string(t), 1);
            else ++it->second;
        });
    }
    const Vocabulary vocab = build_vocab_from_counts(std::move(counts), cfg.min_count);

    CooccurrenceAccumulator acc(vocab, cfg.window, cfg.weighting);
    {
        std::ifstream in(cfg.corpus, std::ios::binary);
        if (!in) throw validation_error("cannot open corpus '" + cfg.corpus + "'");
        tokenize_stream(in, [&](std::string_view t) { acc.add_token(t); });
    }
    const CooccurrenceCounts counts_matrix = acc.finish();

    StagedOutput vocab_out(cfg.vocab_path());
    save_vocab(vocab_out.partial(), vocab);
    vocab_out.commit();
    StagedOutput cooc_out(cfg.cooc_path());
    save_sparse_square(cooc_out.partial(), counts_matrix.matrix, "WEQX");
    cooc_out.commit();
    write_stamp(cfg.vocab_path(), key);
    write_stamp(cfg.cooc_path(), key);
    clock.stop();
}

void stage_matrix(const PipelineConfig& cfg, StageTiming* timing) {
    StageClock clock(timing, "info_matrix");
    const std::uint64_t key = hash_with_params(
        {cfg.cooc_path()}, std::string("matrix|k=") + info_kind_name(cfg.kind) +
                               "|s=" + format_double(cfg.shift));
    if (cfg.cache && stamp_matches(cfg.matrix_path(), key)) {
        clock.mark_skipped();
        clock.stop();
        return;
    }
    const SparseMatrix x = load_sparse_square(cfg.cooc_path(), "WEQX");
    const SparseMatrix m = build_info_matrix(x, InfoMatrixSpec{cfg.kind, cfg.shift});
    StagedOutput out(cfg.matrix_path());
    save_sparse_square(out.partial(), m, "WEQM");
    out.commit();
    write_stamp(cfg.matrix_path(), key);
    clock.stop();
}

void stage_sample(const PipelineConfig& cfg, StageTiming* state_timing,
                  StageTiming* sample_timing) {
    StageClock state_clock(state_timing, "state_preparation");
    const std::string params = std::string("sample|k=") + std::to_string(cfg.samples) +
                               "|c=" + std::to_string(cfg.col_samples) +
                               "|s=" + sampler_name(cfg.sampler) +
                               "|seed=" + std::to_string(cfg.seed);
    const std::uint64_t key = hash_with_params({cfg.matrix_path()}, params);
    const bool need_col = cfg.col_samples > 0;
    if (cfg.cache && stamp_matches(cfg.qcontexts_path(), key) &&
        (!need_col || stamp_matches(cfg.colctx_path(), key))) {
        state_clock.mark_skipped();
        state_clock.stop();
        if (sample_timing != nullptr) {
            sample_timing->name = "sampling";
            sample_timing->seconds = 0.0;
            sample_timing->skipped = true;
        }
        return;
    }

    const SparseMatrix m = load_sparse_square(cfg.matrix_path(), "WEQM");
    const double state_start = now_seconds();
    const SamplerState state = prepare_state(m, cfg.seed);
    (void)state;
    if (state_timing != nullptr) state_timing->seconds = now_seconds() - state_start;

    StageClock sample_clock(sample_timing, "sampling");
    const QContexts q = cfg.sampler == SamplerKind::l2
                            ? build_qcontexts(m, cfg.samples, cfg.seed)
                            : build_qcontexts_uniform(m, cfg.samples, cfg.seed);
    StagedOutput qout(cfg.qcontexts_path());
    save_qcontexts(qout.partial(), q);
    qout.commit();
    write_stamp(cfg.qcontexts_path(), key);
    if (need_col) {
        const QContexts c = column_sample(q, cfg.col_samples, SplitMix64::derive(cfg.seed, 0xc0));
        StagedOutput cout_file(cfg.colctx_path());
        save_qcontexts(cout_file.partial(), c);
        cout_file.commit();
        write_stamp(cfg.colctx_path(), key);
    }
    sample_clock.stop();
    // State preparation was timed inline above; suppress the wrapper clock.
    if (state_timing != nullptr) state_timing->skipped = false;
}

SparseMatrix load_rows_any(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw validation_error("cannot open '" + path + "'");
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    const std::string tag(magic, 4);
    if (tag == "WEQM") return load_sparse_square(path, "WEQM");
    if (tag == "WEQX") return load_sparse_square(path, "WEQX");
    if (tag == "WEQQ") return load_qcontexts(path).matrix;
    throw validation_error("bad magic in '" + path + "': expected 'WEQM', 'WEQX' or 'WEQQ'");
}

void stage_svd(const PipelineConfig& cfg, StageTiming* timing) {
    StageClock clock(timing, "singular_vectors");
    const std::string input = cfg.method == Method::mf
                                  ? cfg.matrix_path()
                                  : (cfg.col_samples > 0 ? cfg.colctx_path()
                                                         : cfg.qcontexts_path());
    const std::string params = std::string("svd|d=") + std::to_string(cfg.dim) +
                               "|t=" + format_double(cfg.svd_tol) +
                               "|i=" + std::to_string(cfg.svd_max_iter) +
                               "|o=" + std::to_string(cfg.svd_oversample);
    const std::uint64_t key = hash_with_params({input}, params);
    if (cfg.cache && stamp_matches(cfg.svd_path(), key)) {
        clock.mark_skipped();
        clock.stop();
        return;
    }
    const SparseMatrix a = load_rows_any(input);
    const std::size_t d = std::min(cfg.dim, std::min(a.n_rows(), a.n_cols()));
    const SvdResult svd = truncated_svd(a, d, cfg.svd_options());
    StagedOutput out(cfg.svd_path());
    save_svd(out.partial(), svd);
    out.commit();
    write_stamp(cfg.svd_path(), key);
    clock.stop();
}

void stage_embed(const PipelineConfig& cfg, StageTiming* timing) {
    StageClock clock(timing, "embedding");
    const std::string rows_path =
        cfg.method == Method::mf ? cfg.matrix_path() : cfg.qcontexts_path();
    const std::uint64_t key =
        hash_with_params({rows_path, cfg.svd_path(), cfg.vocab_path()}, "embed");
    if (cfg.cache && stamp_matches(cfg.embeddings_path(), key)) {
        clock.mark_skipped();
        clock.stop();
        return;
    }
    const SparseMatrix rows = load_rows_any(rows_path);
    const SvdResult svd = load_svd(cfg.svd_path());
    const Vocabulary vocab = load_vocab(cfg.vocab_path());
    if (rows.n_cols() != vocab.size())
        throw validation_error("vocabulary size does not match matrix columns");
    EmbeddingMatrix e = EmbeddingMatrix::bind(embedding_from_rows(rows, svd), vocab);
    StagedOutput out(cfg.embeddings_path());
    save_embeddings_word2vec(out.partial(), e);
    out.commit();
    write_stamp(cfg.embeddings_path(), key);
    clock.stop();
}

PipelineSummary run_pipeline(const PipelineConfig& cfg) {
    validate_config(cfg);
    if (!fs::exists(cfg.corpus)) throw validation_error("corpus '" + cfg.corpus + "' not found");
    fs::create_directories(cfg.out_dir);

    PipelineSummary summary;
    const double start = now_seconds();
    auto run_stage = [&](const char* name, auto&& fn) {
        StageTiming t;
        try {
            fn(&t);
        } catch (const std::exception& e) {
            throw compute_error(std::string("stage '") + name + "' failed: " + e.what());
        }
        summary.stages.push_back(std::move(t));
    };

    run_stage("cooccurrence", [&](StageTiming* t) { stage_cooc(cfg, t); });
    run_stage("info_matrix", [&](StageTiming* t) { stage_matrix(cfg, t); });
    if (cfg.method == Method::weq) {
        StageTiming state_t, sample_t;
        try {
            stage_sample(cfg, &state_t, &sample_t);
        } catch (const std::exception& e) {
            throw compute_error(std::string("stage 'sampling' failed: ") + e.what());
        }
        summary.stages.push_back(std::move(state_t));
        summary.stages.push_back(std::move(sample_t));
    }
    run_stage("singular_vectors", [&](StageTiming* t) { stage_svd(cfg, t); });
    run_stage("embedding", [&](StageTiming* t) { stage_embed(cfg, t); });

    summary.total_seconds = 0.0;
    for (const StageTiming& t : summary.stages) summary.total_seconds += t.seconds;
    summary.embeddings_path = cfg.embeddings_path();
    (void)start;
    save_summary(cfg.summary_path(), summary);
    return summary;
}

void save_summary(const std::string& path, const PipelineSummary& summary) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw compute_error("cannot open '" + path + "' for writing");
    out << "stage\tseconds\tfraction\tnote\n";
    for (std::size_t i = 0; i < summary.stages.size(); ++i) {
        const StageTiming& t = summary.stages[i];
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.2f%%\t%s\n", t.name.c_str(), t.seconds,
                      100.0 * summary.fraction(i), t.skipped ? "cached" : "");
        out << buf;
    }
    char total[64];
    std::snprintf(total, sizeof(total), "total\t%.6f\t100.00%%\t\n", summary.total_seconds);
    out << total;
}

}  // namespace weq
