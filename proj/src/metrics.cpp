#include "spintok/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "spintok/config.hpp"
#include "spintok/util.hpp"

namespace spintok {

NGramModel::NGramModel(int order, std::uint32_t vocab_size, double backoff)
    : order_(order), vocab_size_(vocab_size), backoff_(backoff) {
    if (order < 1) throw ConfigError("n-gram order must be >= 1");
    if (vocab_size < 1) throw ConfigError("n-gram vocab must be >= 1");
    if (backoff <= 0.0 || backoff > 1.0) throw ConfigError("backoff factor must be in (0, 1]");
    tables_.resize(order);
}

std::string NGramModel::key_of(std::span<const std::uint32_t> context) {
    std::string key(context.size() * sizeof(std::uint32_t), '\0');
    if (!context.empty()) std::memcpy(key.data(), context.data(), key.size());
    return key;
}

void NGramModel::add_sequence(std::span<const std::uint32_t> tokens) {
    for (auto t : tokens)
        if (t >= vocab_size_)
            throw ValidationError("token " + std::to_string(t) + " out of n-gram vocab " + std::to_string(vocab_size_));
    std::vector<std::uint32_t> padded;
    padded.reserve(tokens.size() + order_);
    padded.insert(padded.end(), static_cast<std::size_t>(order_ - 1), bos());
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.push_back(eos());
    for (std::size_t t = static_cast<std::size_t>(order_ - 1); t < padded.size(); ++t) {
        for (int k = 1; k <= order_; ++k) {
            std::span<const std::uint32_t> ctx(padded.data() + t - (k - 1), static_cast<std::size_t>(k - 1));
            Bucket& bucket = tables_[static_cast<std::size_t>(k - 1)][key_of(ctx)];
            ++bucket.counts[padded[t]];
            ++bucket.total;
        }
    }
    total_unigrams_ = tables_[0][std::string()].total;
}

double NGramModel::log2_prob(std::span<const std::uint32_t> context, std::uint32_t target) const {
    if (context.size() > static_cast<std::size_t>(order_ - 1))
        context = context.subspan(context.size() - static_cast<std::size_t>(order_ - 1));
    double backoff_log2 = 0.0;
    while (!context.empty()) {
        const auto& table = tables_[context.size()];
        auto it = table.find(key_of(context));
        if (it != table.end()) {
            auto ct = it->second.counts.find(target);
            if (ct != it->second.counts.end() && ct->second > 0)
                return backoff_log2 +
                       std::log2(static_cast<double>(ct->second) / static_cast<double>(it->second.total));
        }
        backoff_log2 += std::log2(backoff_);
        context = context.subspan(1);
    }
    // add-1 unigram over tokens + EOS
    std::uint64_t count = 0;
    const auto& uni = tables_[0];
    auto it = uni.find(std::string());
    if (it != uni.end()) {
        auto ct = it->second.counts.find(target);
        if (ct != it->second.counts.end()) count = ct->second;
    }
    double p = static_cast<double>(count + 1) / static_cast<double>(total_unigrams_ + vocab_size_ + 1);
    return backoff_log2 + std::log2(p);
}

double NGramModel::score_sequence(std::span<const std::uint32_t> tokens) const {
    std::vector<std::uint32_t> padded;
    padded.reserve(tokens.size() + order_);
    padded.insert(padded.end(), static_cast<std::size_t>(order_ - 1), bos());
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.push_back(eos());
    double total = 0.0;
    for (std::size_t t = static_cast<std::size_t>(order_ - 1); t < padded.size(); ++t) {
        std::span<const std::uint32_t> ctx(padded.data() + t - static_cast<std::size_t>(order_ - 1),
                                           static_cast<std::size_t>(order_ - 1));
        total += log2_prob(ctx, padded[t]);
    }
    return total;
}

std::uint64_t NGramModel::context_total(std::span<const std::uint32_t> context) const {
    if (context.size() >= static_cast<std::size_t>(order_)) throw ConfigError("context longer than order-1");
    const auto& table = tables_[context.size()];
    auto it = table.find(key_of(context));
    return it == table.end() ? 0 : it->second.total;
}

std::uint64_t NGramModel::gram_count(std::span<const std::uint32_t> context, std::uint32_t target) const {
    if (context.size() >= static_cast<std::size_t>(order_)) throw ConfigError("context longer than order-1");
    const auto& table = tables_[context.size()];
    auto it = table.find(key_of(context));
    if (it == table.end()) return 0;
    auto ct = it->second.counts.find(target);
    return ct == it->second.counts.end() ? 0 : ct->second;
}

NGramModel ngram_train(const std::vector<TokenSequence>& corpus, int order, double backoff) {
    if (corpus.empty()) throw ValidationError("n-gram training needs a non-empty corpus");
    std::uint32_t vocab = corpus.front().vocab_size;
    NGramModel model(order, vocab, backoff);
    for (const auto& seq : corpus) {
        if (seq.vocab_size != vocab) throw ValidationError("n-gram corpus has inconsistent vocab sizes");
        if (!seq.deduplicated) throw ValidationError("n-gram training expects deduplicated sequences");
        model.add_sequence(seq.tokens);
    }
    return model;
}

double ngram_perplexity(const NGramModel& model, const std::vector<TokenSequence>& corpus) {
    double log2_total = 0.0;
    std::size_t positions = 0;
    for (const auto& seq : corpus) {
        if (seq.vocab_size != model.vocab_size())
            throw ValidationError("perplexity corpus vocab does not match the model");
        log2_total += model.score_sequence(seq.tokens);
        positions += NGramModel::predicted_positions(seq.tokens.size());
    }
    if (positions == 0) return 1.0;
    return std::exp2(-log2_total / static_cast<double>(positions));
}

BitrateResult bitrate(const std::vector<TokenSequence>& corpus, double audio_seconds) {
    if (audio_seconds <= 0.0) throw ConfigError("bitrate needs positive audio duration");
    std::uint64_t n = 0;
    std::uint32_t vocab = 0;
    std::vector<std::uint64_t> occur;
    for (const auto& seq : corpus) {
        if (!seq.deduplicated) throw ValidationError("bitrate expects deduplicated sequences");
        if (vocab == 0) {
            vocab = seq.vocab_size;
            occur.assign(vocab, 0);
        } else if (seq.vocab_size != vocab) {
            throw ValidationError("bitrate corpus has inconsistent vocab sizes");
        }
        for (auto t : seq.tokens) {
            ++occur[t];
            ++n;
        }
    }
    BitrateResult r;
    if (n == 0) return r;
    double rate = static_cast<double>(n) / audio_seconds;
    double entropy = 0.0;
    for (auto c : occur) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(n);
        entropy -= p * std::log2(p);
    }
    r.bitrate_bps = rate * entropy;
    r.bound_bps = rate * std::log2(static_cast<double>(vocab));
    return r;
}

JointCountTable JointCountTable::from_corpus(const std::vector<TokenSequence>& tokens,
                                             const std::vector<AlignmentSequence>& alignments) {
    if (tokens.size() != alignments.size())
        throw LengthError("token and alignment corpora have different utterance counts");
    if (tokens.empty()) throw ValidationError("joint table needs a non-empty corpus");
    std::uint32_t vocab = tokens.front().vocab_size;
    std::uint32_t symbols = alignments.front().symbol_count;
    JointCountTable table;
    table.counts = MatrixD::Zero(vocab, symbols);
    for (std::size_t u = 0; u < tokens.size(); ++u) {
        const auto& t = tokens[u];
        const auto& a = alignments[u];
        if (t.deduplicated) throw ValidationError("frame-level metrics need non-deduplicated tokens");
        if (t.vocab_size != vocab || a.symbol_count != symbols)
            throw ValidationError("inconsistent vocab or symbol counts across corpus");
        if (t.size() != a.size())
            throw LengthError("utterance " + std::to_string(u) + ": " + std::to_string(t.size()) + " tokens vs " +
                              std::to_string(a.size()) + " alignment labels");
        for (std::size_t i = 0; i < t.size(); ++i) table.counts(t.tokens[i], a.labels[i]) += 1.0;
    }
    table.total = table.counts.sum();
    return table;
}

double nmi(const JointCountTable& table) {
    if (table.total <= 0.0) throw ValidationError("joint table is empty");
    Eigen::VectorXd token_marginal = table.counts.rowwise().sum() / table.total;
    Eigen::RowVectorXd symbol_marginal = table.counts.colwise().sum() / table.total;

    double h_symbol = 0.0;
    for (Eigen::Index s = 0; s < symbol_marginal.size(); ++s)
        if (symbol_marginal[s] > 0.0) h_symbol -= symbol_marginal[s] * std::log(symbol_marginal[s]);
    if (h_symbol == 0.0) throw DegenerateError("symbol entropy is zero; NMI undefined");

    double mi = 0.0;
    for (Eigen::Index k = 0; k < table.counts.rows(); ++k) {
        for (Eigen::Index s = 0; s < table.counts.cols(); ++s) {
            double joint = table.counts(k, s) / table.total;
            if (joint > 0.0) mi += joint * std::log(joint / (token_marginal[k] * symbol_marginal[s]));
        }
    }
    return mi / h_symbol;
}

double nmi(const std::vector<TokenSequence>& tokens, const std::vector<AlignmentSequence>& alignments) {
    return nmi(JointCountTable::from_corpus(tokens, alignments));
}

PurityResult purity(const JointCountTable& table) {
    if (table.total <= 0.0) throw ValidationError("joint table is empty");
    PurityResult r;
    for (Eigen::Index s = 0; s < table.counts.cols(); ++s) r.cluster_purity += table.counts.col(s).maxCoeff();
    for (Eigen::Index k = 0; k < table.counts.rows(); ++k) r.phone_purity += table.counts.row(k).maxCoeff();
    r.cluster_purity /= table.total;
    r.phone_purity /= table.total;
    return r;
}

PurityResult purity(const std::vector<TokenSequence>& tokens, const std::vector<AlignmentSequence>& alignments) {
    return purity(JointCountTable::from_corpus(tokens, alignments));
}

std::size_t levenshtein(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double ued(const TokenSequence& clean, const TokenSequence& distorted) {
    if (clean.deduplicated != distorted.deduplicated)
        throw ValidationError("UED requires matching dedup flags on both sequences");
    if (clean.tokens.empty() && distorted.tokens.empty()) return 0.0;
    if (clean.tokens.empty())
        throw ValidationError("UED is undefined for an empty clean sequence against a non-empty one");
    std::size_t dist = levenshtein(clean.tokens, distorted.tokens);
    return 100.0 * static_cast<double>(dist) / static_cast<double>(clean.tokens.size());
}

double dtw_normalized_cost(const MatrixD& frame_costs) {
    const Eigen::Index m = frame_costs.rows();
    const Eigen::Index n = frame_costs.cols();
    if (m == 0 || n == 0) throw ValidationError("DTW needs non-empty sequences");
    const double inf = std::numeric_limits<double>::infinity();
    const Eigen::Index max_cells = m + n - 1;

    // best[L](i,j): cheapest path [0,0] -> [i,j] visiting exactly L+1 cells
    MatrixD prev = MatrixD::Constant(m, n, inf);
    MatrixD cur = MatrixD::Constant(m, n, inf);
    prev(0, 0) = frame_costs(0, 0);
    double best = (m == 1 && n == 1) ? prev(0, 0) : inf;
    for (Eigen::Index cells = 2; cells <= max_cells; ++cells) {
        cur.setConstant(inf);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double reach = inf;
                if (i > 0) reach = std::min(reach, prev(i - 1, j));
                if (j > 0) reach = std::min(reach, prev(i, j - 1));
                if (i > 0 && j > 0) reach = std::min(reach, prev(i - 1, j - 1));
                if (reach < inf) cur(i, j) = reach + frame_costs(i, j);
            }
        }
        if (cur(m - 1, n - 1) < inf)
            best = std::min(best, cur(m - 1, n - 1) / static_cast<double>(cells));
        std::swap(prev, cur);
    }
    return best;
}

double angular_distance(const Eigen::RowVectorXf& x, const Eigen::RowVectorXf& y) {
    double nx = x.cast<double>().norm();
    double ny = y.cast<double>().norm();
    double sim = 0.0;
    if (nx > 0.0 && ny > 0.0) sim = x.cast<double>().dot(y.cast<double>()) / (nx * ny);
    sim = std::clamp(sim, -1.0, 1.0);
    return std::acos(sim) / 3.14159265358979323846;
}

namespace {

MatrixD token_cost_matrix(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y) {
    MatrixD c(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) c(i, j) = x[i] == y[j] ? 0.0 : 1.0;
    return c;
}

MatrixD feature_cost_matrix(const MatrixF& x, const MatrixF& y) {
    MatrixD c(x.rows(), y.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < y.rows(); ++j) c(i, j) = angular_distance(x.row(i), y.row(j));
    return c;
}

double abx_contribution(double d_xa, double d_xb) {
    if (d_xb < d_xa) return 1.0;
    if (d_xb == d_xa) return 0.5;
    return 0.0;
}

}  // namespace

double abx_error_rate(const std::vector<TokenTriplet>& triplets) {
    if (triplets.empty()) throw ValidationError("ABX needs at least one triplet");
    double err = 0.0;
    for (const auto& t : triplets) {
        if (t.a.empty() || t.b.empty() || t.x.empty()) throw ValidationError("ABX sequences must be non-empty");
        double d_xa = dtw_normalized_cost(token_cost_matrix(t.x, t.a));
        double d_xb = dtw_normalized_cost(token_cost_matrix(t.x, t.b));
        err += abx_contribution(d_xa, d_xb);
    }
    return 100.0 * err / static_cast<double>(triplets.size());
}

double abx_error_rate(const std::vector<FeatureTriplet>& triplets) {
    if (triplets.empty()) throw ValidationError("ABX needs at least one triplet");
    double err = 0.0;
    for (const auto& t : triplets) {
        if (t.a.rows() == 0 || t.b.rows() == 0 || t.x.rows() == 0)
            throw ValidationError("ABX sequences must be non-empty");
        double d_xa = dtw_normalized_cost(feature_cost_matrix(t.x, t.a));
        double d_xb = dtw_normalized_cost(feature_cost_matrix(t.x, t.b));
        err += abx_contribution(d_xa, d_xb);
    }
    return 100.0 * err / static_cast<double>(triplets.size());
}

PhoneGivenCode phone_given_code(const JointCountTable& table) {
    PhoneGivenCode out;
    out.rows = MatrixD::Zero(table.counts.rows(), table.counts.cols());
    out.empty_rows.assign(static_cast<std::size_t>(table.counts.rows()), false);
    for (Eigen::Index k = 0; k < table.counts.rows(); ++k) {
        double row_total = table.counts.row(k).sum();
        if (row_total <= 0.0) {
            out.empty_rows[static_cast<std::size_t>(k)] = true;
            continue;
        }
        out.rows.row(k) = table.counts.row(k) / row_total;
    }
    return out;
}

void MetricReport::set(const std::string& name, double value, Orientation orientation) {
    values[name] = value;
    orientations[name] = orientation;
}

double MetricReport::get(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw LookupError("metric '" + name + "' missing from report " + tokenizer_id);
    return it->second;
}

void MetricReport::save(const std::filesystem::path& path) const {
    for (const auto& [name, _] : values)
        if (!orientations.count(name)) throw ValidationError("metric '" + name + "' has no orientation");
    KeyValueFile kv;
    kv.set("tokenizer_id", tokenizer_id);
    for (const auto& [name, value] : values) kv.set("metric." + name, format_double(value));
    for (const auto& [name, o] : orientations)
        kv.set("orientation." + name, o == Orientation::HigherBetter ? "higher" : "lower");
    kv.save(path);
}

MetricReport MetricReport::load(const std::filesystem::path& path) {
    KeyValueFile kv = KeyValueFile::load(path);
    MetricReport r;
    r.tokenizer_id = kv.get("tokenizer_id");
    for (const auto& [key, value] : kv.items()) {
        if (key.rfind("metric.", 0) == 0) r.values[key.substr(7)] = parse_double(value, key);
        if (key.rfind("orientation.", 0) == 0) {
            if (value == "higher")
                r.orientations[key.substr(12)] = Orientation::HigherBetter;
            else if (value == "lower")
                r.orientations[key.substr(12)] = Orientation::LowerBetter;
            else
                throw FormatError("orientation must be higher|lower, got '" + value + "'");
        }
    }
    for (const auto& [name, _] : r.values)
        if (!r.orientations.count(name))
            throw ValidationError("metric '" + name + "' has no orientation in " + path.string());
    return r;
}

}  // namespace spintok
