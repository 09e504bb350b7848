#pragma once

#include <filesystem>
#include <vector>

#include "spintok/types.hpp"

namespace spintok {

// On-disk formats.
//
// Features ("SPFT"): magic, then little-endian u32 fields
//   version=1, dim, frames, framerate_millihz, followed by frames*dim
//   little-endian f32 values in row-major order.
// Tokens: text, header "#vocab=K framerate=F dedup=0|1", one utterance per
//   line of space-separated unit IDs.
// Alignments: text, header "#symbols=S", same line layout.
// Manifest: "#framerate=F" header, then per utterance
//   "utt_id<TAB>feat_path<TAB>tok_path|-<TAB>align_path|-<TAB>pair_path|-".
//   Relative paths resolve against the manifest's directory.

void write_feature_file(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence read_feature_file(const std::filesystem::path& path);

void write_token_file(const std::vector<TokenSequence>& utterances, const std::filesystem::path& path);
std::vector<TokenSequence> read_token_file(const std::filesystem::path& path);

void write_alignment_file(const std::vector<AlignmentSequence>& utterances, const std::filesystem::path& path);
std::vector<AlignmentSequence> read_alignment_file(const std::filesystem::path& path);

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
// Checks that every referenced file exists.
CorpusManifest read_manifest(const std::filesystem::path& path);

// Bulk loaders following manifest order.
std::vector<FeatureSequence> load_features(const CorpusManifest& manifest);
std::vector<AlignmentSequence> load_alignments(const CorpusManifest& manifest);
std::vector<PairedViews> load_pairs(const CorpusManifest& manifest);

}  // namespace spintok
