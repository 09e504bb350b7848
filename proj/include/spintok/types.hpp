#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spintok/error.hpp"

namespace spintok {

// Row-major so one frame is one contiguous row, matching the on-disk layout.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Frame-level features for one utterance: frames x dim at a fixed framerate.
struct FeatureSequence {
    MatrixF data;
    double framerate = 0.0;  // Hz

    Eigen::Index frames() const { return data.rows(); }
    Eigen::Index dim() const { return data.cols(); }

    void validate() const {
        if (dim() < 1) throw ValidationError("feature sequence needs dim >= 1");
        if (framerate <= 0.0) throw ValidationError("feature framerate must be positive");
        if (!data.allFinite()) throw ValidationError("feature sequence contains NaN or Inf");
    }
};

// Discrete unit IDs for one utterance.
struct TokenSequence {
    std::vector<std::uint32_t> tokens;
    std::uint32_t vocab_size = 0;
    double framerate = 0.0;
    bool deduplicated = false;

    std::size_t size() const { return tokens.size(); }

    void validate() const {
        if (vocab_size == 0) throw ValidationError("token vocab_size must be >= 1");
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] >= vocab_size)
                throw ValidationError("token " + std::to_string(tokens[i]) + " out of range for vocab " +
                                      std::to_string(vocab_size));
            if (deduplicated && i > 0 && tokens[i] == tokens[i - 1])
                throw ValidationError("deduplicated sequence has equal consecutive tokens");
        }
    }
};

// Per-frame symbol labels (phonemes or character classes).
struct AlignmentSequence {
    std::vector<std::uint32_t> labels;
    std::uint32_t symbol_count = 0;

    std::size_t size() const { return labels.size(); }

    void validate() const {
        if (symbol_count == 0) throw ValidationError("alignment symbol_count must be >= 1");
        for (auto l : labels)
            if (l >= symbol_count)
                throw ValidationError("alignment label " + std::to_string(l) + " out of range for " +
                                      std::to_string(symbol_count) + " symbols");
    }
};

// Two speaker renderings of the same underlying content, frame-aligned.
struct PairedViews {
    FeatureSequence view_a;
    FeatureSequence view_b;
    std::optional<AlignmentSequence> labels;

    void validate() const {
        view_a.validate();
        view_b.validate();
        if (view_a.frames() != view_b.frames() || view_a.dim() != view_b.dim())
            throw ValidationError("paired views must have equal frames and dim");
        if (labels && static_cast<Eigen::Index>(labels->size()) != view_a.frames())
            throw LengthError("alignment length does not match paired view frames");
    }
};

struct ManifestEntry {
    std::string utterance_id;
    std::filesystem::path feature_path;
    std::optional<std::filesystem::path> token_path;
    std::optional<std::filesystem::path> alignment_path;
    std::optional<std::filesystem::path> pair_path;
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    double framerate = 0.0;
};

}  // namespace spintok
