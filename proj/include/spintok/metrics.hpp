#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spintok/types.hpp"

namespace spintok {

// Backoff n-gram model over token IDs plus sentence boundary symbols.
// Unseen n-grams back off with factor alpha down to an add-1-smoothed
// unigram over K+1 predictable symbols (tokens plus EOS).
class NGramModel {
  public:
    NGramModel(int order, std::uint32_t vocab_size, double backoff = 0.4);

    std::uint32_t bos() const { return vocab_size_; }
    std::uint32_t eos() const { return vocab_size_ + 1; }
    int order() const { return order_; }
    std::uint32_t vocab_size() const { return vocab_size_; }
    double backoff() const { return backoff_; }

    // Counts every k-gram (k = 1..order) whose target is a token or EOS of
    // the BOS-padded, EOS-terminated sequence.
    void add_sequence(std::span<const std::uint32_t> tokens);

    // log2 p(target | context) via the backoff chain. context is the raw
    // preceding symbols (may be shorter than order-1; BOS padding is the
    // caller's concern via score_sequence).
    double log2_prob(std::span<const std::uint32_t> context, std::uint32_t target) const;

    // Sum of log2 p over all predicted positions (each token and EOS).
    double score_sequence(std::span<const std::uint32_t> tokens) const;
    static std::size_t predicted_positions(std::size_t token_count) { return token_count + 1; }

    std::uint64_t context_total(std::span<const std::uint32_t> context) const;
    std::uint64_t gram_count(std::span<const std::uint32_t> context, std::uint32_t target) const;
    std::uint64_t total_unigrams() const { return total_unigrams_; }

  private:
    struct Bucket {
        std::unordered_map<std::uint32_t, std::uint64_t> counts;
        std::uint64_t total = 0;
    };
    static std::string key_of(std::span<const std::uint32_t> context);

    int order_;
    std::uint32_t vocab_size_;
    double backoff_;
    std::vector<std::unordered_map<std::string, Bucket>> tables_;  // index = context length
    std::uint64_t total_unigrams_ = 0;
};

// Requires deduplicated sequences with a common vocab.
NGramModel ngram_train(const std::vector<TokenSequence>& corpus, int order, double backoff = 0.4);

// 2^(-mean log2 p) over all predicted positions of the corpus.
double ngram_perplexity(const NGramModel& model, const std::vector<TokenSequence>& corpus);

struct BitrateResult {
    double bitrate_bps = 0.0;  // (N/T) * sum p(k) log2(1/p(k))
    double bound_bps = 0.0;    // (N/T) * log2 K
};

// Entropy bitrate of deduplicated token sequences over audio_seconds of audio.
BitrateResult bitrate(const std::vector<TokenSequence>& corpus, double audio_seconds);

// Frame-level joint occurrence counts between tokens and alignment symbols.
struct JointCountTable {
    MatrixD counts;  // tokens x symbols
    double total = 0.0;

    static JointCountTable from_corpus(const std::vector<TokenSequence>& tokens,
                                       const std::vector<AlignmentSequence>& alignments);
};

// I(symbol; token) / H(symbol), in [0, 1].
double nmi(const JointCountTable& table);
double nmi(const std::vector<TokenSequence>& tokens, const std::vector<AlignmentSequence>& alignments);

struct PurityResult {
    double cluster_purity = 0.0;  // sum over symbols of the max joint mass across tokens
    double phone_purity = 0.0;    // sum over tokens of the max joint mass across symbols
};

PurityResult purity(const JointCountTable& table);
PurityResult purity(const std::vector<TokenSequence>& tokens, const std::vector<AlignmentSequence>& alignments);

// Unit-cost Levenshtein distance.
std::size_t levenshtein(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

// Levenshtein(clean, distorted) / len(clean) * 100. Dedup flags must match.
double ued(const TokenSequence& clean, const TokenSequence& distorted);

// DTW divergence: minimum over monotone alignment paths of (path cost / path
// length). Exact, via a fixed-path-length DP.
double dtw_normalized_cost(const MatrixD& frame_costs);

double angular_distance(const Eigen::RowVectorXf& x, const Eigen::RowVectorXf& y);

struct TokenTriplet {
    std::vector<std::uint32_t> a;  // same category as x
    std::vector<std::uint32_t> b;  // different category
    std::vector<std::uint32_t> x;
};

struct FeatureTriplet {
    MatrixF a;
    MatrixF b;
    MatrixF x;
};

// Fraction of triplets (scaled to percent) where x is DTW-closer to b than to
// its same-category exemplar a; ties count one half.
double abx_error_rate(const std::vector<TokenTriplet>& triplets);
double abx_error_rate(const std::vector<FeatureTriplet>& triplets);

struct PhoneGivenCode {
    MatrixD rows;                  // tokens x symbols, each nonzero row sums to 1
    std::vector<bool> empty_rows;  // tokens never observed
};

PhoneGivenCode phone_given_code(const JointCountTable& table);

enum class Orientation { HigherBetter, LowerBetter };

// Named metric values for one tokenizer with per-metric orientation.
struct MetricReport {
    std::string tokenizer_id;
    std::map<std::string, double> values;
    std::map<std::string, Orientation> orientations;

    void set(const std::string& name, double value, Orientation orientation);
    double get(const std::string& name) const;

    void save(const std::filesystem::path& path) const;
    static MetricReport load(const std::filesystem::path& path);
};

}  // namespace spintok
