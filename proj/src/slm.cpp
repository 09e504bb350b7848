#include "spintok/slm.hpp"

#include <fstream>
#include <sstream>

#include "spintok/rng.hpp"
#include "spintok/util.hpp"

namespace spintok {

void PairTask::validate() const {
    positive.validate();
    negative.validate();
    if (positive.vocab_size != negative.vocab_size || positive.deduplicated != negative.deduplicated)
        throw ValidationError("pair task sequences must share vocab and dedup flag");
}

ExternalScores ExternalScores::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    ExternalScores scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, lp, len;
        if (!std::getline(ls, id, '\t') || !std::getline(ls, lp, '\t') || !std::getline(ls, len, '\t'))
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected utt_id<TAB>log2prob<TAB>length");
        Entry e;
        e.total_log2prob = parse_double(lp, "log2prob");
        e.length = parse_int(len, "length");
        if (e.length <= 0) throw ValidationError("external score length must be positive for " + id);
        scores.by_utterance[id] = e;
    }
    return scores;
}

void ExternalScores::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& [id, e] : by_utterance)
        out << id << '\t' << format_double(e.total_log2prob) << '\t' << e.length << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

double normalized_logprob(const TokenSequence& seq, const NGramModel& model) {
    if (seq.vocab_size != model.vocab_size())
        throw ValidationError("sequence vocab does not match the scoring model");
    double total = model.score_sequence(seq.tokens);
    return total / static_cast<double>(NGramModel::predicted_positions(seq.tokens.size()));
}

double ScoreSource::normalized_logprob(const TokenSequence& seq, const std::string& utt_id) const {
    if (model_) return spintok::normalized_logprob(seq, *model_);
    auto it = external_.by_utterance.find(utt_id);
    if (it == external_.by_utterance.end())
        throw LookupError("no external score for utterance '" + utt_id + "'");
    return it->second.total_log2prob / static_cast<double>(it->second.length);
}

double pairwise_eval(const std::vector<PairTask>& tasks, const ScoreSource& source) {
    if (tasks.empty()) throw ValidationError("pairwise evaluation needs at least one task");
    double correct = 0.0;
    for (const auto& task : tasks) {
        task.validate();
        double pos = source.normalized_logprob(task.positive, task.pos_utt_id);
        double neg = source.normalized_logprob(task.negative, task.neg_utt_id);
        if (pos > neg)
            correct += 1.0;
        else if (pos == neg)
            correct += 0.5;
    }
    return 100.0 * correct / static_cast<double>(tasks.size());
}

namespace {

struct Segment {
    std::uint32_t phone;
    Eigen::Index begin;
    Eigen::Index end;
};

std::vector<Segment> segments_of(const AlignmentSequence& align) {
    std::vector<Segment> segs;
    Eigen::Index n = static_cast<Eigen::Index>(align.labels.size());
    for (Eigen::Index i = 0; i < n;) {
        Eigen::Index j = i;
        while (j < n && align.labels[j] == align.labels[i]) ++j;
        segs.push_back({align.labels[i], i, j});
        i = j;
    }
    return segs;
}

}  // namespace

std::vector<PairTask> generate_minimal_pairs(const std::vector<std::string>& utt_ids,
                                             const std::vector<FeatureSequence>& features,
                                             const std::vector<AlignmentSequence>& alignments,
                                             const TokenizeFn& tokenize, int n_tasks, std::uint64_t seed,
                                             bool deduplicate_tokens) {
    if (features.size() != alignments.size() || features.size() != utt_ids.size())
        throw LengthError("utterance ids, features, and alignments must have equal counts");
    if (n_tasks < 0) throw ConfigError("n_tasks must be >= 0");
    std::vector<PairTask> tasks;
    if (n_tasks == 0) return tasks;
    if (features.empty()) throw ValidationError("minimal pair generation needs a non-empty corpus");

    // pool of frames per phone, referenced as (utterance, frame)
    std::uint32_t symbols = alignments.front().symbol_count;
    std::vector<std::vector<std::pair<std::size_t, Eigen::Index>>> phone_pool(symbols);
    for (std::size_t u = 0; u < alignments.size(); ++u) {
        if (static_cast<Eigen::Index>(alignments[u].size()) != features[u].frames())
            throw LengthError("alignment length does not match features for utterance " + utt_ids[u]);
        for (std::size_t i = 0; i < alignments[u].labels.size(); ++i)
            phone_pool[alignments[u].labels[i]].push_back({u, static_cast<Eigen::Index>(i)});
    }

    Rng rng(seed);
    int max_attempts = n_tasks * 20;
    for (int attempt = 0; static_cast<int>(tasks.size()) < n_tasks && attempt < max_attempts; ++attempt) {
        std::size_t u = rng.uniform_int(features.size());
        auto segs = segments_of(alignments[u]);
        if (segs.size() < 2) continue;

        const Segment& seg = segs[rng.uniform_int(segs.size())];
        std::uint32_t other = seg.phone;
        for (int tries = 0; tries < 64 && (other == seg.phone || phone_pool[other].empty()); ++tries)
            other = static_cast<std::uint32_t>(rng.uniform_int(symbols));
        if (other == seg.phone || phone_pool[other].empty()) continue;

        FeatureSequence corrupted = features[u];
        for (Eigen::Index t = seg.begin; t < seg.end; ++t) {
            auto [pu, pf] = phone_pool[other][rng.uniform_int(phone_pool[other].size())];
            corrupted.data.row(t) = features[pu].data.row(pf);
        }

        PairTask task;
        task.id = "task" + std::to_string(tasks.size());
        task.pos_utt_id = utt_ids[u];
        task.neg_utt_id = task.id + ".neg";
        task.positive = tokenize(features[u]);
        task.negative = tokenize(corrupted);
        if (deduplicate_tokens) {
            task.positive = deduplicate(task.positive);
            task.negative = deduplicate(task.negative);
        }
        if (task.positive.tokens == task.negative.tokens) continue;  // corruption was invisible; retry
        task.validate();
        tasks.push_back(std::move(task));
    }
    if (static_cast<int>(tasks.size()) < n_tasks)
        throw ValidationError("could only build " + std::to_string(tasks.size()) + " of " + std::to_string(n_tasks) +
                              " minimal pairs; corpus may be too small or too coarse");
    return tasks;
}

void save_tasks(const std::vector<PairTask>& tasks, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& t : tasks) out << t.id << '\t' << t.pos_utt_id << '\t' << t.neg_utt_id << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TaskIds> load_task_ids(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<TaskIds> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        TaskIds t;
        if (!std::getline(ls, t.id, '\t') || !std::getline(ls, t.pos_utt_id, '\t') ||
            !std::getline(ls, t.neg_utt_id, '\t'))
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected task_id<TAB>pos_utt_id<TAB>neg_utt_id");
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace spintok
