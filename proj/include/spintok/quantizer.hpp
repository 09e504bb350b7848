#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include "spintok/types.hpp"

namespace spintok {

// Cosine codebook learned by Spin training. Assignment is argmax of
// (z_hat . c_k) / tau over L2-normalized frame and codeword, which makes the
// token invariant to tau and to positive rescaling of the frame.
struct Codebook {
    MatrixD codewords;  // K x d
    double temperature = 0.1;
    bool normalized = false;

    Eigen::Index K() const { return codewords.rows(); }
    Eigen::Index dim() const { return codewords.cols(); }
    void validate() const;
};

// Euclidean nearest-centroid quantizer.
struct KMeansModel {
    MatrixD centroids;  // K x d

    Eigen::Index K() const { return centroids.rows(); }
    Eigen::Index dim() const { return centroids.cols(); }
    void validate() const;
};

// Lloyd iterations from a seeded k-means++ initialization. Stops when the
// max centroid movement drops below tol or after max_iters. Empty clusters
// are reseeded to the point currently farthest from its own centroid.
KMeansModel kmeans_fit(const MatrixD& frames, int k, std::uint64_t seed, int max_iters = 100,
                       double tol = 1e-6);

TokenSequence quantize(const FeatureSequence& seq, const KMeansModel& model);
TokenSequence quantize(const FeatureSequence& seq, const Codebook& book);

// Collapses runs of equal consecutive tokens to one.
TokenSequence deduplicate(const TokenSequence& seq);

using TokenizeFn = std::function<TokenSequence(const FeatureSequence&)>;

// Writes one non-deduplicated token line per manifest utterance, usable as
// frame-level pretraining targets.
void export_pseudo_labels(const CorpusManifest& manifest, const TokenizeFn& tokenize,
                          const std::filesystem::path& out_path);

// Pools every feature frame in manifest order into one N x dim matrix.
MatrixD pool_frames(const CorpusManifest& manifest);

void save_kmeans(const KMeansModel& model, const std::filesystem::path& path);
KMeansModel load_kmeans(const std::filesystem::path& path);

}  // namespace spintok
