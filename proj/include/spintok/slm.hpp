#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spintok/metrics.hpp"
#include "spintok/quantizer.hpp"
#include "spintok/types.hpp"

namespace spintok {

// One zero-shot comparison: the positive sequence is real, the negative is a
// corrupted variant; a scorer should prefer the positive.
struct PairTask {
    std::string id;
    std::string pos_utt_id;
    std::string neg_utt_id;
    TokenSequence positive;
    TokenSequence negative;

    void validate() const;
};

// Per-utterance scores from a real SLM: "utt_id<TAB>total_log2prob<TAB>length".
struct ExternalScores {
    struct Entry {
        double total_log2prob = 0.0;
        std::int64_t length = 0;
    };
    std::map<std::string, Entry> by_utterance;

    static ExternalScores load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Length-normalized log probability source: either a local n-gram model
// scoring the token sequence or an external score file keyed by utterance id.
class ScoreSource {
  public:
    explicit ScoreSource(const NGramModel& model) : model_(&model) {}
    explicit ScoreSource(ExternalScores scores) : external_(std::move(scores)) {}

    double normalized_logprob(const TokenSequence& seq, const std::string& utt_id) const;

  private:
    const NGramModel* model_ = nullptr;
    ExternalScores external_;
};

// (sum log2 p over predicted positions including EOS) / positions.
double normalized_logprob(const TokenSequence& seq, const NGramModel& model);

// Mean task accuracy in percent; ties count one half.
double pairwise_eval(const std::vector<PairTask>& tasks, const ScoreSource& source);

// Builds minimal pairs from a labeled corpus: the negative re-tokenizes the
// utterance with one phone segment's frames swapped for frames sampled from a
// different phone's pool. Utterances with a single segment are skipped.
std::vector<PairTask> generate_minimal_pairs(const std::vector<std::string>& utt_ids,
                                             const std::vector<FeatureSequence>& features,
                                             const std::vector<AlignmentSequence>& alignments,
                                             const TokenizeFn& tokenize, int n_tasks, std::uint64_t seed,
                                             bool deduplicate_tokens = true);

// Task file: "task_id<TAB>pos_utt_id<TAB>neg_utt_id" per line.
void save_tasks(const std::vector<PairTask>& tasks, const std::filesystem::path& path);
struct TaskIds {
    std::string id;
    std::string pos_utt_id;
    std::string neg_utt_id;
};
std::vector<TaskIds> load_task_ids(const std::filesystem::path& path);

}  // namespace spintok
