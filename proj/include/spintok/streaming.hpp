#pragma once

#include <vector>

#include "spintok/quantizer.hpp"
#include "spintok/types.hpp"

namespace spintok {

struct StreamConfig {
    double t_chunk = 1.0;   // seconds
    double t_shift = 0.4;   // seconds
    int context_window = 0; // moving-average width in frames; 0 = context-free

    void validate() const;
};

struct ChunkSpec {
    Eigen::Index end_frame;   // chunk covers [0, end_frame)
    Eigen::Index emit_start;  // emitted token range [emit_start, emit_end)
    Eigen::Index emit_end;
};

struct ChunkPlan {
    std::vector<ChunkSpec> chunks;
    Eigen::Index l_chunk = 0;
    Eigen::Index l_shift = 0;
    Eigen::Index l_overlap = 0;
};

// Expanding-context chunk schedule. Chunk i covers [0, L_chunk + i*L_shift);
// each chunk discards its trailing L_overlap = floor((L_chunk - L_shift)/2)
// tokens except the last chunk, which emits through the end of the utterance.
ChunkPlan plan_chunks(Eigen::Index total_frames, double framerate, const StreamConfig& config);

// Centered moving average of width `window`, truncated at sequence edges.
// window <= 1 is the identity.
MatrixF moving_average(const MatrixF& frames, int window);

// Offline reference: context transform over the whole utterance, then quantize.
TokenSequence offline_tokenize(const FeatureSequence& seq, const TokenizeFn& tokenize, const StreamConfig& config);

// Chunk-wise simulation: per chunk, re-run the context transform on the
// available prefix, quantize, and emit the planned range.
TokenSequence stream_tokenize(const FeatureSequence& seq, const TokenizeFn& tokenize, const StreamConfig& config);

struct StreamStats {
    double ued_percent = 0.0;
    double mean_chunk_ms = 0.0;
    double total_ms = 0.0;
    double rtf = 0.0;
    std::size_t chunks = 0;
};

// UED between offline and streaming tokens plus wall-clock latency stats.
StreamStats streaming_divergence(const FeatureSequence& seq, const TokenizeFn& tokenize, const StreamConfig& config);

}  // namespace spintok
