#include "spintok/streaming.hpp"

#include <chrono>
#include <cmath>

#include "spintok/metrics.hpp"

namespace spintok {

void StreamConfig::validate() const {
    if (t_shift <= 0.0) throw ConfigError("t_shift must be positive");
    if (t_chunk < t_shift) throw ConfigError("t_chunk must be >= t_shift");
    if (context_window < 0) throw ConfigError("context_window must be >= 0");
}

ChunkPlan plan_chunks(Eigen::Index total_frames, double framerate, const StreamConfig& config) {
    config.validate();
    if (framerate <= 0.0) throw ConfigError("framerate must be positive");
    if (total_frames < 0) throw ConfigError("total_frames must be >= 0");

    ChunkPlan plan;
    plan.l_chunk = static_cast<Eigen::Index>(std::llround(config.t_chunk * framerate));
    plan.l_shift = static_cast<Eigen::Index>(std::llround(config.t_shift * framerate));
    if (plan.l_shift <= 0) throw ConfigError("t_shift rounds to zero frames at this framerate");
    plan.l_overlap = (plan.l_chunk - plan.l_shift) / 2;

    if (total_frames == 0) return plan;
    Eigen::Index emit_start = 0;
    for (Eigen::Index i = 0;; ++i) {
        Eigen::Index end = plan.l_chunk + i * plan.l_shift;
        bool final = end >= total_frames;
        if (final) end = total_frames;
        Eigen::Index emit_end = final ? total_frames : end - plan.l_overlap;
        plan.chunks.push_back({end, emit_start, emit_end});
        if (final) break;
        emit_start = emit_end;
    }
    return plan;
}

MatrixF moving_average(const MatrixF& frames, int window) {
    if (window <= 1 || frames.rows() == 0) return frames;
    const Eigen::Index n = frames.rows();
    const Eigen::Index left = (window - 1) / 2;
    const Eigen::Index right = window - 1 - left;
    MatrixF out(n, frames.cols());
    for (Eigen::Index t = 0; t < n; ++t) {
        Eigen::Index lo = std::max<Eigen::Index>(0, t - left);
        Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + right);
        out.row(t) = frames.middleRows(lo, hi - lo + 1).colwise().mean();
    }
    return out;
}

TokenSequence offline_tokenize(const FeatureSequence& seq, const TokenizeFn& tokenize,
                               const StreamConfig& config) {
    FeatureSequence smoothed{moving_average(seq.data, config.context_window), seq.framerate};
    return tokenize(smoothed);
}

TokenSequence stream_tokenize(const FeatureSequence& seq, const TokenizeFn& tokenize, const StreamConfig& config) {
    ChunkPlan plan = plan_chunks(seq.frames(), seq.framerate, config);
    TokenSequence out;
    out.framerate = seq.framerate;
    out.deduplicated = false;
    out.vocab_size = 1;  // fixed up from the first chunk's output
    out.tokens.reserve(seq.frames());
    for (const auto& chunk : plan.chunks) {
        FeatureSequence prefix{seq.data.topRows(chunk.end_frame), seq.framerate};
        FeatureSequence smoothed{moving_average(prefix.data, config.context_window), seq.framerate};
        TokenSequence chunk_tokens = tokenize(smoothed);
        out.vocab_size = chunk_tokens.vocab_size;
        for (Eigen::Index t = chunk.emit_start; t < chunk.emit_end; ++t)
            out.tokens.push_back(chunk_tokens.tokens[t]);
    }
    if (out.tokens.empty() && seq.frames() == 0) {
        // empty utterance: vocab from a zero-frame tokenize call
        FeatureSequence empty{MatrixF(0, seq.dim()), seq.framerate};
        out.vocab_size = tokenize(empty).vocab_size;
    }
    if (static_cast<Eigen::Index>(out.tokens.size()) != seq.frames())
        throw LengthError("streaming emitted " + std::to_string(out.tokens.size()) + " tokens for " +
                          std::to_string(seq.frames()) + " frames");
    return out;
}

StreamStats streaming_divergence(const FeatureSequence& seq, const TokenizeFn& tokenize,
                                 const StreamConfig& config) {
    using clock = std::chrono::steady_clock;
    TokenSequence offline = offline_tokenize(seq, tokenize, config);

    ChunkPlan plan = plan_chunks(seq.frames(), seq.framerate, config);
    StreamStats stats;
    stats.chunks = plan.chunks.size();
    TokenSequence streamed;
    streamed.vocab_size = offline.vocab_size;
    streamed.framerate = seq.framerate;
    streamed.deduplicated = false;
    auto total_start = clock::now();
    for (const auto& chunk : plan.chunks) {
        FeatureSequence prefix{seq.data.topRows(chunk.end_frame), seq.framerate};
        FeatureSequence smoothed{moving_average(prefix.data, config.context_window), seq.framerate};
        TokenSequence chunk_tokens = tokenize(smoothed);
        for (Eigen::Index t = chunk.emit_start; t < chunk.emit_end; ++t)
            streamed.tokens.push_back(chunk_tokens.tokens[t]);
    }
    auto total_end = clock::now();
    stats.total_ms = std::chrono::duration<double, std::milli>(total_end - total_start).count();
    stats.mean_chunk_ms = stats.chunks ? stats.total_ms / static_cast<double>(stats.chunks) : 0.0;
    double audio_seconds = seq.framerate > 0.0 ? static_cast<double>(seq.frames()) / seq.framerate : 0.0;
    stats.rtf = audio_seconds > 0.0 ? (stats.total_ms / 1000.0) / audio_seconds : 0.0;
    stats.ued_percent = (seq.frames() == 0) ? 0.0 : ued(offline, streamed);
    return stats;
}

}  // namespace spintok
