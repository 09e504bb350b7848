// spintok: learn Spin/DC-Spin codebooks on feature corpora, tokenize offline
// or in chunk-wise streaming mode, and evaluate tokenizers with proxy metrics,
// pairwise zero-shot tasks, and cross-metric correlation.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "spintok/analysis.hpp"
#include "spintok/corpus_io.hpp"
#include "spintok/metrics.hpp"
#include "spintok/quantizer.hpp"
#include "spintok/slm.hpp"
#include "spintok/spin.hpp"
#include "spintok/streaming.hpp"
#include "spintok/synth.hpp"
#include "spintok/util.hpp"

namespace {

using namespace spintok;

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 1;
};

// Loads either model kind by magic and wraps it as a tokenize function.
TokenizeFn load_tokenizer(const std::filesystem::path& path, std::uint32_t* vocab_out = nullptr) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open model: " + path.string());
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::string(magic, 4) == "SPCK") {
        auto model = std::make_shared<DCSpinModel>(load_checkpoint(path));
        if (vocab_out) *vocab_out = static_cast<std::uint32_t>(model->primary.K());
        return [model](const FeatureSequence& seq) { return model->tokenize(seq); };
    }
    if (std::string(magic, 4) == "SPKM") {
        auto model = std::make_shared<KMeansModel>(load_kmeans(path));
        if (vocab_out) *vocab_out = static_cast<std::uint32_t>(model->K());
        return [model](const FeatureSequence& seq) { return quantize(seq, *model); };
    }
    throw FormatError("unrecognized model file (expected SPCK or SPKM): " + path.string());
}

std::vector<TokenSequence> tokenize_corpus(const CorpusManifest& manifest, const TokenizeFn& tokenize,
                                           int threads) {
    std::vector<TokenSequence> tokens(manifest.entries.size());
    parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
        tokens[i] = tokenize(read_feature_file(manifest.entries[i].feature_path));
    });
    return tokens;
}

std::vector<TokenTriplet> sample_abx_triplets(const std::vector<TokenSequence>& tokens,
                                              const std::vector<AlignmentSequence>& alignments, int count,
                                              std::uint64_t seed) {
    struct SegmentRef {
        std::size_t utt;
        std::size_t begin;
        std::size_t end;
    };
    std::uint32_t symbols = alignments.front().symbol_count;
    std::vector<std::vector<SegmentRef>> by_phone(symbols);
    for (std::size_t u = 0; u < alignments.size(); ++u) {
        const auto& labels = alignments[u].labels;
        for (std::size_t i = 0; i < labels.size();) {
            std::size_t j = i;
            while (j < labels.size() && labels[j] == labels[i]) ++j;
            by_phone[labels[i]].push_back({u, i, j});
            i = j;
        }
    }
    std::vector<std::uint32_t> usable;
    for (std::uint32_t p = 0; p < symbols; ++p)
        if (by_phone[p].size() >= 2) usable.push_back(p);
    if (usable.size() < 2) throw ValidationError("ABX sampling needs two phones with at least two segments each");

    auto slice = [&](const SegmentRef& s) {
        return std::vector<std::uint32_t>(tokens[s.utt].tokens.begin() + static_cast<std::ptrdiff_t>(s.begin),
                                          tokens[s.utt].tokens.begin() + static_cast<std::ptrdiff_t>(s.end));
    };
    Rng rng(seed);
    std::vector<TokenTriplet> triplets;
    triplets.reserve(count);
    while (static_cast<int>(triplets.size()) < count) {
        std::uint32_t p = usable[rng.uniform_int(usable.size())];
        std::uint32_t q = p;
        while (q == p) q = usable[rng.uniform_int(usable.size())];
        const auto& ps = by_phone[p];
        std::size_t ia = rng.uniform_int(ps.size());
        std::size_t ix = ia;
        while (ix == ia) ix = rng.uniform_int(ps.size());
        const auto& qs = by_phone[q];
        triplets.push_back({slice(ps[ia]), slice(qs[rng.uniform_int(qs.size())]), slice(ps[ix])});
    }
    return triplets;
}

int run_synth(const GlobalOpts& g, const SynthConfig& cfg, const std::string& out_dir) {
    auto corpus = generate_synthetic_corpus(cfg, g.seed);
    auto manifest = write_synthetic_corpus(corpus, cfg, out_dir);
    std::cout << "wrote " << manifest.entries.size() << " utterances under " << out_dir << "\n";
    return 0;
}

int run_kmeans(const GlobalOpts& g, const std::string& manifest_path, int k, int max_iters, double tol,
               const std::string& out) {
    auto manifest = read_manifest(manifest_path);
    MatrixD frames = pool_frames(manifest);
    KMeansModel model = kmeans_fit(frames, k, g.seed, max_iters, tol);
    save_kmeans(model, out);
    std::cout << "fit " << k << " centroids on " << frames.rows() << " frames -> " << out << "\n";
    return 0;
}

int run_spin_train(const GlobalOpts& g, const std::string& manifest_path, SpinConfig cfg,
                   const std::string& out, const std::string& loss_log) {
    cfg.seed = g.seed;
    auto manifest = read_manifest(manifest_path);
    auto corpus = load_pairs(manifest);
    auto result = train(corpus, cfg);
    save_checkpoint(result.model, out);
    if (!loss_log.empty()) {
        std::ofstream log(loss_log);
        for (const auto& rec : result.state.loss_history)
            log << rec.step << ' ' << format_double(rec.primary_loss) << ' ' << format_double(rec.auxiliary_loss)
                << "\n";
    }
    const auto& last = result.state.loss_history.back();
    std::cout << "trained " << result.state.step << " steps, final loss " << format_double(last.primary_loss);
    if (cfg.k_auxiliary > 0) std::cout << " + " << format_double(last.auxiliary_loss);
    std::cout << " -> " << out << "\n";
    return 0;
}

int run_tokenize(const GlobalOpts& g, const std::string& manifest_path, const std::string& model_path,
                 const std::string& out, bool dedup) {
    auto manifest = read_manifest(manifest_path);
    TokenizeFn tokenize = load_tokenizer(model_path);
    auto tokens = tokenize_corpus(manifest, tokenize, g.threads);
    if (dedup)
        for (auto& t : tokens) t = deduplicate(t);
    write_token_file(tokens, out);
    std::cout << "tokenized " << tokens.size() << " utterances -> " << out << "\n";
    return 0;
}

int run_stream(const GlobalOpts& g, const std::string& manifest_path, const std::string& model_path,
               const StreamConfig& cfg, const std::string& out) {
    auto manifest = read_manifest(manifest_path);
    TokenizeFn tokenize = load_tokenizer(model_path);
    std::vector<TokenSequence> streamed(manifest.entries.size());
    std::vector<StreamStats> stats(manifest.entries.size());
    parallel_for(manifest.entries.size(), g.threads, [&](std::size_t i) {
        FeatureSequence seq = read_feature_file(manifest.entries[i].feature_path);
        streamed[i] = stream_tokenize(seq, tokenize, cfg);
        stats[i] = streaming_divergence(seq, tokenize, cfg);
    });
    write_token_file(streamed, out);
    for (std::size_t i = 0; i < stats.size(); ++i)
        std::cout << manifest.entries[i].utterance_id << ' ' << format_double(stats[i].ued_percent) << ' '
                  << format_double(stats[i].mean_chunk_ms) << ' ' << format_double(stats[i].rtf) << "\n";
    return 0;
}

int run_metrics(const GlobalOpts& g, const std::string& manifest_path, const std::string& tokens_path,
                const std::string& tokenizer_id, int ngram_order, int abx_triplets,
                const std::string& char_align_path, const std::string& distorted_path,
                const std::string& pgc_out, const std::string& out) {
    auto manifest = read_manifest(manifest_path);
    auto tokens = read_token_file(tokens_path);
    if (tokens.size() != manifest.entries.size())
        throw LengthError("token file utterance count does not match manifest");

    MetricReport report;
    report.tokenizer_id = tokenizer_id;

    double audio_seconds = 0.0;
    for (const auto& t : tokens) audio_seconds += static_cast<double>(t.size()) / t.framerate;

    std::vector<TokenSequence> dedup;
    dedup.reserve(tokens.size());
    for (const auto& t : tokens) dedup.push_back(t.deduplicated ? t : deduplicate(t));
    auto br = bitrate(dedup, audio_seconds);
    report.set("bitrate", br.bitrate_bps, Orientation::LowerBetter);
    report.set("bitrate_bound", br.bound_bps, Orientation::LowerBetter);

    NGramModel lm = ngram_train(dedup, ngram_order);
    report.set("ngram_ppl", ngram_perplexity(lm, dedup), Orientation::LowerBetter);

    if (!manifest.entries.empty() && manifest.entries.front().alignment_path) {
        auto alignments = load_alignments(manifest);
        auto table = JointCountTable::from_corpus(tokens, alignments);
        report.set("pnmi", nmi(table), Orientation::HigherBetter);
        auto pur = purity(table);
        report.set("cluster_purity", pur.cluster_purity, Orientation::HigherBetter);
        report.set("phone_purity", pur.phone_purity, Orientation::HigherBetter);
        if (abx_triplets > 0) {
            auto triplets = sample_abx_triplets(tokens, alignments, abx_triplets, Rng::derive_seed(g.seed, 17));
            report.set("abx", abx_error_rate(triplets), Orientation::LowerBetter);
        }
        if (!pgc_out.empty()) {
            auto pgc = phone_given_code(table);
            std::ofstream pg(pgc_out);
            pg << "#tokens=" << pgc.rows.rows() << " symbols=" << pgc.rows.cols() << "\n";
            for (Eigen::Index k = 0; k < pgc.rows.rows(); ++k) {
                pg << k;
                for (Eigen::Index s = 0; s < pgc.rows.cols(); ++s) pg << ' ' << format_double(pgc.rows(k, s));
                pg << (pgc.empty_rows[static_cast<std::size_t>(k)] ? " empty" : " ok") << "\n";
            }
        }
    }

    if (!char_align_path.empty()) {
        auto char_aligns = read_alignment_file(char_align_path);
        report.set("cnmi", nmi(JointCountTable::from_corpus(tokens, char_aligns)), Orientation::HigherBetter);
    }

    if (!distorted_path.empty()) {
        auto distorted = read_token_file(distorted_path);
        if (distorted.size() != tokens.size())
            throw LengthError("distorted token file utterance count does not match");
        double total = 0.0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            auto d = distorted[i].deduplicated ? distorted[i] : deduplicate(distorted[i]);
            total += ued(dedup[i], d);
        }
        report.set("ued", total / static_cast<double>(tokens.size()), Orientation::LowerBetter);
    }

    report.save(out);
    std::cout << "wrote " << report.values.size() << " metrics for '" << tokenizer_id << "' -> " << out << "\n";
    return 0;
}

int run_slm_eval(const GlobalOpts& g, const std::string& manifest_path, const std::string& model_path,
                 int ngram_order, int n_tasks, bool dedup, const std::string& tasks_path,
                 const std::string& scores_path, const std::string& tasks_out, const std::string& out,
                 const std::string& tokenizer_id) {
    double accuracy = 0.0;
    if (!scores_path.empty()) {
        if (tasks_path.empty()) throw ConfigError("--scores needs --tasks");
        auto ids = load_task_ids(tasks_path);
        auto scores = ExternalScores::load(scores_path);
        if (ids.empty()) throw ValidationError("task file is empty");
        double correct = 0.0;
        for (const auto& t : ids) {
            auto pos = scores.by_utterance.find(t.pos_utt_id);
            auto neg = scores.by_utterance.find(t.neg_utt_id);
            if (pos == scores.by_utterance.end() || neg == scores.by_utterance.end())
                throw LookupError("task '" + t.id + "' references an utterance missing from the score file");
            double ps = pos->second.total_log2prob / static_cast<double>(pos->second.length);
            double ns = neg->second.total_log2prob / static_cast<double>(neg->second.length);
            correct += ps > ns ? 1.0 : (ps == ns ? 0.5 : 0.0);
        }
        accuracy = 100.0 * correct / static_cast<double>(ids.size());
    } else {
        auto manifest = read_manifest(manifest_path);
        TokenizeFn tokenize = load_tokenizer(model_path);
        auto features = load_features(manifest);
        auto alignments = load_alignments(manifest);
        std::vector<std::string> ids;
        for (const auto& e : manifest.entries) ids.push_back(e.utterance_id);

        std::vector<TokenSequence> corpus_tokens = tokenize_corpus(manifest, tokenize, g.threads);
        if (dedup)
            for (auto& t : corpus_tokens) t = deduplicate(t);
        NGramModel lm = ngram_train(corpus_tokens, ngram_order);

        auto tasks = generate_minimal_pairs(ids, features, alignments, tokenize, n_tasks,
                                            Rng::derive_seed(g.seed, 23), dedup);
        if (!tasks_out.empty()) save_tasks(tasks, tasks_out);
        accuracy = pairwise_eval(tasks, ScoreSource(lm));
    }

    MetricReport report;
    report.tokenizer_id = tokenizer_id;
    report.set("pairwise_accuracy", accuracy, Orientation::HigherBetter);
    report.save(out);
    std::cout << "pairwise accuracy " << format_double(accuracy) << " -> " << out << "\n";
    return 0;
}

int run_correlate(const std::vector<std::string>& report_paths, const std::string& out_prefix) {
    std::vector<MetricReport> reports;
    for (const auto& p : report_paths) reports.push_back(MetricReport::load(p));
    MetricMatrix matrix = MetricMatrix::from_reports(reports);
    sign_adjust(matrix);
    CorrelationResult corr = correlation_matrix(matrix);
    corr.save(out_prefix + ".kv");
    std::ofstream table(out_prefix + ".txt");
    table << corr.render_table();
    std::cout << corr.render_table();
    return 0;
}

int run_report(const std::vector<std::string>& report_paths) {
    std::vector<MetricReport> reports;
    for (const auto& p : report_paths) reports.push_back(MetricReport::load(p));
    MetricMatrix matrix = MetricMatrix::from_reports(reports);
    std::cout << render_metric_table(matrix);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin/DC-Spin speech token codebooks: training, streaming tokenization, and evaluation"};
    app.set_config("--config");
    GlobalOpts g;
    app.add_option("--seed", g.seed, "Seed for every stochastic stage");
    app.add_option("--threads", g.threads, "Worker threads for per-utterance stages");
    app.require_subcommand(1);

    SynthConfig synth_cfg;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic paired-view corpus");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--n-utterances", synth_cfg.n_utterances);
    synth->add_option("--min-frames", synth_cfg.min_frames);
    synth->add_option("--max-frames", synth_cfg.max_frames);
    synth->add_option("--dim", synth_cfg.dim);
    synth->add_option("--phones", synth_cfg.n_phones);
    synth->add_option("--speakers", synth_cfg.n_speakers);
    synth->add_option("--noise-std", synth_cfg.noise_std);
    synth->add_option("--framerate", synth_cfg.framerate);

    std::string km_manifest, km_out;
    int km_k = 500, km_iters = 100;
    double km_tol = 1e-6;
    auto* km = app.add_subcommand("kmeans", "Fit a k-means quantizer on pooled frames");
    km->add_option("--manifest", km_manifest)->required();
    km->add_option("--k", km_k)->required();
    km->add_option("--max-iters", km_iters);
    km->add_option("--tol", km_tol);
    km->add_option("--out", km_out, "Model file (SPKM)")->required();

    std::string st_manifest, st_out, st_config, st_loss_log;
    SpinConfig spin_cfg;
    auto* st = app.add_subcommand("spin-train", "Train Spin or DC-Spin codebooks on paired views");
    st->add_option("--manifest", st_manifest)->required();
    st->add_option("--out", st_out, "Checkpoint file (SPCK)")->required();
    st->add_option("--spin-config", st_config, "key=value config file");
    st->add_option("--k-primary", spin_cfg.k_primary);
    st->add_option("--k-auxiliary", spin_cfg.k_auxiliary);
    st->add_option("--d-code", spin_cfg.d_code);
    st->add_option("--temperature", spin_cfg.temperature);
    st->add_option("--sinkhorn-eps", spin_cfg.sinkhorn_eps);
    st->add_option("--sinkhorn-iters", spin_cfg.sinkhorn_iters);
    st->add_flag("--hard-targets,!--soft-targets", spin_cfg.hard_targets);
    st->add_option("--mask-prob", spin_cfg.mask_prob);
    st->add_option("--mask-len", spin_cfg.mask_len);
    st->add_option("--lr-peak", spin_cfg.lr_peak);
    st->add_option("--warmup-steps", spin_cfg.warmup_steps);
    st->add_option("--total-steps", spin_cfg.total_steps);
    st->add_option("--batch-frames", spin_cfg.batch_frames);
    st->add_option("--loss-log", st_loss_log, "Write per-step losses here");

    std::string tk_manifest, tk_model, tk_out;
    bool tk_dedup = false;
    auto* tk = app.add_subcommand("tokenize", "Tokenize a corpus with a trained model");
    tk->add_option("--manifest", tk_manifest)->required();
    tk->add_option("--model", tk_model)->required();
    tk->add_option("--out", tk_out)->required();
    tk->add_flag("--dedup", tk_dedup, "Merge repeated consecutive tokens");

    std::string sm_manifest, sm_model, sm_out;
    StreamConfig stream_cfg;
    auto* sm = app.add_subcommand("stream", "Chunk-wise streaming tokenization and divergence report");
    sm->add_option("--manifest", sm_manifest)->required();
    sm->add_option("--model", sm_model)->required();
    sm->add_option("--t-chunk", stream_cfg.t_chunk, "Chunk duration in seconds");
    sm->add_option("--t-shift", stream_cfg.t_shift, "Chunk growth in seconds");
    sm->add_option("--context-window", stream_cfg.context_window, "Moving-average width in frames");
    sm->add_option("--out", sm_out, "Streamed token file")->required();

    std::string mt_manifest, mt_tokens, mt_id = "tokenizer", mt_char, mt_distorted, mt_pgc, mt_out;
    int mt_order = 4, mt_abx = 200;
    auto* mt = app.add_subcommand("metrics", "Proxy metric suite for a token corpus");
    mt->add_option("--manifest", mt_manifest)->required();
    mt->add_option("--tokens", mt_tokens, "Frame-level (non-dedup) token file")->required();
    mt->add_option("--tokenizer-id", mt_id);
    mt->add_option("--ngram-order", mt_order);
    mt->add_option("--abx-triplets", mt_abx, "0 disables ABX");
    mt->add_option("--char-alignments", mt_char, "Character alignment file for CNMI");
    mt->add_option("--distorted", mt_distorted, "Distorted token file for UED");
    mt->add_option("--pgc-out", mt_pgc, "Write the P(phone|code) table here");
    mt->add_option("--out", mt_out, "Metric report file")->required();

    std::string sl_manifest, sl_model, sl_tasks, sl_scores, sl_tasks_out, sl_out, sl_id = "tokenizer";
    int sl_order = 4, sl_tasks_n = 500;
    bool sl_dedup = true;
    auto* sl = app.add_subcommand("slm-eval", "Zero-shot pairwise evaluation");
    sl->add_option("--manifest", sl_manifest);
    sl->add_option("--model", sl_model);
    sl->add_option("--ngram-order", sl_order);
    sl->add_option("--n-tasks", sl_tasks_n);
    sl->add_flag("--dedup,!--no-dedup", sl_dedup, "Score deduplicated sequences");
    sl->add_option("--tasks", sl_tasks, "Existing task file (external scoring mode)");
    sl->add_option("--scores", sl_scores, "External per-utterance score file");
    sl->add_option("--tasks-out", sl_tasks_out, "Write generated tasks here");
    sl->add_option("--tokenizer-id", sl_id);
    sl->add_option("--out", sl_out, "Metric report file")->required();

    std::vector<std::string> co_reports;
    std::string co_prefix;
    auto* co = app.add_subcommand("correlate", "Cross-metric Pearson correlation with sign adjustment");
    co->add_option("--reports", co_reports, "Metric report files")->required()->expected(-1);
    co->add_option("--out-prefix", co_prefix)->required();

    std::vector<std::string> rp_reports;
    auto* rp = app.add_subcommand("report", "Render metric reports as an aligned table");
    rp->add_option("--reports", rp_reports, "Metric report files")->required()->expected(-1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(g, synth_cfg, synth_out);
        if (km->parsed()) return run_kmeans(g, km_manifest, km_k, km_iters, km_tol, km_out);
        if (st->parsed()) {
            SpinConfig cfg = spin_cfg;
            if (!st_config.empty()) {
                // config file is the base; explicit flags override single fields
                cfg = load_spin_config(st_config);
                if (st->count("--k-primary")) cfg.k_primary = spin_cfg.k_primary;
                if (st->count("--k-auxiliary")) cfg.k_auxiliary = spin_cfg.k_auxiliary;
                if (st->count("--d-code")) cfg.d_code = spin_cfg.d_code;
                if (st->count("--temperature")) cfg.temperature = spin_cfg.temperature;
                if (st->count("--sinkhorn-eps")) cfg.sinkhorn_eps = spin_cfg.sinkhorn_eps;
                if (st->count("--sinkhorn-iters")) cfg.sinkhorn_iters = spin_cfg.sinkhorn_iters;
                if (st->count("--hard-targets") || st->count("--soft-targets"))
                    cfg.hard_targets = spin_cfg.hard_targets;
                if (st->count("--mask-prob")) cfg.mask_prob = spin_cfg.mask_prob;
                if (st->count("--mask-len")) cfg.mask_len = spin_cfg.mask_len;
                if (st->count("--lr-peak")) cfg.lr_peak = spin_cfg.lr_peak;
                if (st->count("--warmup-steps")) cfg.warmup_steps = spin_cfg.warmup_steps;
                if (st->count("--total-steps")) cfg.total_steps = spin_cfg.total_steps;
                if (st->count("--batch-frames")) cfg.batch_frames = spin_cfg.batch_frames;
            }
            return run_spin_train(g, st_manifest, cfg, st_out, st_loss_log);
        }
        if (tk->parsed()) return run_tokenize(g, tk_manifest, tk_model, tk_out, tk_dedup);
        if (sm->parsed()) return run_stream(g, sm_manifest, sm_model, stream_cfg, sm_out);
        if (mt->parsed())
            return run_metrics(g, mt_manifest, mt_tokens, mt_id, mt_order, mt_abx, mt_char, mt_distorted, mt_pgc,
                               mt_out);
        if (sl->parsed())
            return run_slm_eval(g, sl_manifest, sl_model, sl_order, sl_tasks_n, sl_dedup, sl_tasks, sl_scores,
                                sl_tasks_out, sl_out, sl_id);
        if (co->parsed()) return run_correlate(co_reports, co_prefix);
        if (rp->parsed()) return run_report(rp_reports);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
