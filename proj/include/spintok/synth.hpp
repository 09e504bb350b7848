#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spintok/types.hpp"

namespace spintok {

// Synthetic paired-view corpus generator. Each phone is a fixed Gaussian
// bump in feature space; each speaker is a fixed random orthogonal transform
// plus bias applied to the same clean frames, so the two views share content
// but differ "by speaker".
struct SynthConfig {
    int n_utterances = 50;
    int min_frames = 100;
    int max_frames = 300;
    int dim = 16;
    int n_phones = 8;
    int n_speakers = 4;
    double noise_std = 0.1;
    double framerate = 50.0;  // Hz

    void validate() const;
};

struct SyntheticCorpus {
    std::vector<std::string> utterance_ids;
    std::vector<PairedViews> pairs;   // labels always present
    std::vector<int> speaker_a;       // speaker index used for view_a
    std::vector<int> speaker_b;
    MatrixD phone_means;              // n_phones x dim
    std::vector<MatrixD> speaker_rot; // per speaker, dim x dim orthogonal
    MatrixD speaker_bias;             // n_speakers x dim
};

SyntheticCorpus generate_synthetic_corpus(const SynthConfig& config, std::uint64_t seed);

// Writes features/pairs/alignments plus a manifest under dir.
CorpusManifest write_synthetic_corpus(const SyntheticCorpus& corpus, const SynthConfig& config,
                                      const std::filesystem::path& dir);

}  // namespace spintok
