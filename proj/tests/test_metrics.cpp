#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>

#include "spintok/metrics.hpp"
#include "spintok/rng.hpp"

using namespace spintok;
namespace fs = std::filesystem;

namespace {

TokenSequence make_tokens(std::vector<std::uint32_t> tokens, std::uint32_t vocab, bool dedup = false,
                          double framerate = 50.0) {
    TokenSequence t;
    t.tokens = std::move(tokens);
    t.vocab_size = vocab;
    t.framerate = framerate;
    t.deduplicated = dedup;
    return t;
}

AlignmentSequence make_align(std::vector<std::uint32_t> labels, std::uint32_t symbols) {
    AlignmentSequence a;
    a.labels = std::move(labels);
    a.symbol_count = symbols;
    return a;
}

// Exhaustive edit-distance oracle: tries every alignment operation without
// memoization, independent of the DP implementation.
std::size_t edit_distance_oracle(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    std::size_t match = edit_distance_oracle(a.subspan(1), b.subspan(1)) + (a[0] == b[0] ? 0 : 1);
    std::size_t del = edit_distance_oracle(a.subspan(1), b) + 1;
    std::size_t ins = edit_distance_oracle(a, b.subspan(1)) + 1;
    return std::min({match, del, ins});
}

// Enumerates every monotone DTW path and minimizes cost/length directly.
double dtw_oracle(const MatrixD& cost) {
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Eigen::Index, Eigen::Index, double, int)> walk = [&](Eigen::Index i, Eigen::Index j,
                                                                            double acc, int len) {
        acc += cost(i, j);
        ++len;
        if (i == cost.rows() - 1 && j == cost.cols() - 1) {
            best = std::min(best, acc / len);
            return;
        }
        if (i + 1 < cost.rows()) walk(i + 1, j, acc, len);
        if (j + 1 < cost.cols()) walk(i, j + 1, acc, len);
        if (i + 1 < cost.rows() && j + 1 < cost.cols()) walk(i + 1, j + 1, acc, len);
    };
    walk(0, 0, 0.0, 0);
    return best;
}

std::vector<std::uint32_t> nth_sequence(std::size_t index, int vocab, int max_len) {
    // enumerate all sequences of length 0..max_len over [0, vocab)
    std::vector<std::uint32_t> seq;
    for (int len = 0; len <= max_len; ++len) {
        std::size_t block = 1;
        for (int i = 0; i < len; ++i) block *= static_cast<std::size_t>(vocab);
        if (index < block) {
            for (int i = 0; i < len; ++i) {
                seq.push_back(static_cast<std::uint32_t>(index % vocab));
                index /= static_cast<std::size_t>(vocab);
            }
            return seq;
        }
        index -= block;
    }
    throw std::out_of_range("sequence index");
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("ngram counts: single token sequence with order 2") {
    NGramModel model(2, 10);
    std::vector<std::uint32_t> seq{7};
    model.add_sequence(seq);
    std::uint32_t bos = model.bos(), eos = model.eos();
    std::vector<std::uint32_t> ctx_bos{bos}, ctx_7{7};
    CHECK(model.gram_count(ctx_bos, 7) == 1);
    CHECK(model.gram_count(ctx_7, eos) == 1);
    CHECK(model.context_total(ctx_bos) == 1);
    CHECK(model.context_total(ctx_7) == 1);
    CHECK(model.total_unigrams() == 2);  // 7 and EOS
}

TEST_CASE("ngram counts: totals are consistent and scale linearly") {
    Rng rng(70);
    std::vector<TokenSequence> corpus;
    std::size_t positions = 0;
    for (int u = 0; u < 5; ++u) {
        std::vector<std::uint32_t> toks;
        auto len = rng.uniform_range(1, 12);
        for (int i = 0; i < len; ++i) {
            auto t = static_cast<std::uint32_t>(rng.uniform_int(6));
            if (!toks.empty() && toks.back() == t) continue;
            toks.push_back(t);
        }
        positions += toks.size() + 1;
        corpus.push_back(make_tokens(toks, 6, true));
    }
    auto model = ngram_train(corpus, 3);
    CHECK(model.total_unigrams() == positions);

    std::vector<TokenSequence> tripled;
    for (int m = 0; m < 3; ++m) tripled.insert(tripled.end(), corpus.begin(), corpus.end());
    auto model3 = ngram_train(tripled, 3);
    CHECK(model3.total_unigrams() == 3 * positions);
    std::vector<std::uint32_t> ctx{corpus[0].tokens[0]};
    CHECK(model3.context_total(ctx) == 3 * model.context_total(ctx));
}

TEST_CASE("ngram perplexity: deterministic corpus with full context coverage is exactly 1") {
    auto seq = make_tokens({0, 1, 2}, 3, true);
    auto model = ngram_train({seq}, 3);
    CHECK(ngram_perplexity(model, {seq}) == 1.0);
}

TEST_CASE("ngram perplexity: alternating corpus approaches 1 (closed-form oracle)") {
    auto build = [](int pairs) {
        std::vector<std::uint32_t> toks;
        for (int i = 0; i < pairs; ++i) {
            toks.push_back(0);
            toks.push_back(1);
        }
        return make_tokens(toks, 2, true);
    };
    for (int pairs : {5, 50, 200}) {
        auto seq = build(pairs);
        auto model = ngram_train({seq}, 2);
        // count arithmetic: BOS->0 and 0->1 are deterministic; of the `pairs`
        // occurrences of 1, pairs-1 go to 0 and one goes to EOS
        double m = pairs;
        double log2_total = (m - 1.0) * std::log2((m - 1.0) / m) + std::log2(1.0 / m);
        double positions = 2.0 * m + 1.0;
        double expected = std::exp2(-log2_total / positions);
        CHECK(ngram_perplexity(model, {seq}) == doctest::Approx(expected).epsilon(1e-12));
    }
    auto seq = build(200);
    auto model = ngram_train({seq}, 2);
    CHECK(ngram_perplexity(model, {seq}) < 1.05);
}

TEST_CASE("ngram perplexity: unseen tokens follow the hand-computed backoff chain") {
    // 3-token vocab, order 2, trained on one sequence [0, 1]
    auto train_seq = make_tokens({0, 1}, 3, true);
    auto model = ngram_train({train_seq}, 2, 0.4);
    // eval [2]: p(2|BOS) backs off to alpha * (0+1)/(N+K+1) with N=3 unigrams;
    // p(EOS|2) backs off to alpha * (1+1)/(N+K+1)
    double p1 = 0.4 * (1.0 / 7.0);
    double p2 = 0.4 * (2.0 / 7.0);
    double expected = std::exp2(-(std::log2(p1) + std::log2(p2)) / 2.0);
    auto eval_seq = make_tokens({2}, 3, true);
    CHECK(ngram_perplexity(model, {eval_seq}) == doctest::Approx(expected).epsilon(1e-12));
    // bound: every position is at least alpha^(n-1) / (N+K+1)
    CHECK(ngram_perplexity(model, {eval_seq}) <= 7.0 / 0.4 + 1e-9);
}

TEST_CASE("ngram perplexity is at least 1 on random corpora") {
    Rng rng(71);
    for (int c = 0; c < 10; ++c) {
        std::vector<TokenSequence> train, eval;
        for (int u = 0; u < 4; ++u) {
            std::vector<std::uint32_t> toks;
            auto len = rng.uniform_range(1, 20);
            for (int i = 0; i < len; ++i) {
                auto t = static_cast<std::uint32_t>(rng.uniform_int(5));
                if (!toks.empty() && toks.back() == t) continue;
                toks.push_back(t);
            }
            (u % 2 ? eval : train).push_back(make_tokens(toks, 5, true));
        }
        auto model = ngram_train(train, 4);
        CHECK(ngram_perplexity(model, eval) >= 1.0);
        CHECK(ngram_perplexity(model, train) >= 1.0);
    }
}

TEST_CASE("ngram training perplexity is unchanged by corpus duplication") {
    Rng rng(72);
    std::vector<TokenSequence> corpus;
    for (int u = 0; u < 3; ++u) {
        std::vector<std::uint32_t> toks;
        for (int i = 0; i < 10; ++i) {
            auto t = static_cast<std::uint32_t>(rng.uniform_int(4));
            if (!toks.empty() && toks.back() == t) continue;
            toks.push_back(t);
        }
        corpus.push_back(make_tokens(toks, 4, true));
    }
    double base = ngram_perplexity(ngram_train(corpus, 3), corpus);
    std::vector<TokenSequence> doubled = corpus;
    doubled.insert(doubled.end(), corpus.begin(), corpus.end());
    double dup = ngram_perplexity(ngram_train(doubled, 3), corpus);
    CHECK(dup == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("bitrate: uniform 500-token usage at 50 tokens/s gives the paper's 448") {
    // cycle through the vocabulary so no tokens repeat consecutively
    std::vector<std::uint32_t> toks;
    for (int rep = 0; rep < 50; ++rep)
        for (std::uint32_t k = 0; k < 500; ++k) toks.push_back(k);
    double audio_seconds = static_cast<double>(toks.size()) / 50.0;
    auto seq = make_tokens(std::move(toks), 500, true);
    auto r = bitrate({seq}, audio_seconds);
    CHECK(r.bitrate_bps == doctest::Approx(448.2892).epsilon(1e-6));
    CHECK(r.bound_bps == doctest::Approx(r.bitrate_bps).epsilon(1e-12));  // uniform usage hits the bound
    CHECK(std::abs(r.bitrate_bps - 448.3) < 0.1);
}

TEST_CASE("bitrate: two uniform 1024 codebooks at 75 Hz total 1500 bps") {
    auto stream = [] {
        std::vector<std::uint32_t> toks;
        for (int rep = 0; rep < 5; ++rep)
            for (std::uint32_t k = 0; k < 1024; ++k) toks.push_back(k);
        return make_tokens(std::move(toks), 1024, true);
    };
    auto a = stream();
    double audio_seconds = static_cast<double>(a.tokens.size()) / 75.0;
    double total = bitrate({a}, audio_seconds).bitrate_bps + bitrate({stream()}, audio_seconds).bitrate_bps;
    CHECK(total == doctest::Approx(1500.0).epsilon(1e-9));
}

TEST_CASE("bitrate: degenerate cases") {
    auto single = make_tokens({5}, 10, true);
    CHECK(bitrate({single}, 2.0).bitrate_bps == 0.0);  // one token, zero entropy
    auto empty = make_tokens({}, 10, true);
    CHECK(bitrate({empty}, 2.0).bitrate_bps == 0.0);
    CHECK(bitrate({empty}, 2.0).bound_bps == 0.0);
    auto raw = make_tokens({1, 1, 2}, 10, false);
    CHECK_THROWS_AS(bitrate({raw}, 2.0), ValidationError);
}

TEST_CASE("bitrate never exceeds the log2 K bound; equality only at uniform usage") {
    Rng rng(73);
    for (int c = 0; c < 20; ++c) {
        std::uint32_t vocab = static_cast<std::uint32_t>(rng.uniform_range(2, 12));
        std::vector<std::uint32_t> toks;
        auto len = rng.uniform_range(1, 200);
        for (int i = 0; i < len; ++i) {
            auto t = static_cast<std::uint32_t>(rng.uniform_int(vocab));
            if (!toks.empty() && toks.back() == t) continue;
            toks.push_back(t);
        }
        auto seq = make_tokens(toks, vocab, true);
        auto r = bitrate({seq}, 3.0);
        CHECK(r.bitrate_bps <= r.bound_bps + 1e-9);
    }
}

TEST_CASE("nmi: identity mapping is 1, constant tokens are 0") {
    auto tokens = make_tokens({0, 1, 2, 0, 1, 2}, 3);
    auto align = make_align({0, 1, 2, 0, 1, 2}, 3);
    CHECK(nmi({tokens}, {align}) == doctest::Approx(1.0).epsilon(1e-12));

    auto constant = make_tokens({1, 1, 1, 1, 1, 1}, 3);
    CHECK(nmi({constant}, {align}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nmi: 4x4 hand table matches a direct summation oracle") {
    // counts chosen with mixed association
    MatrixD counts(4, 4);
    counts << 8, 1, 0, 1, 0, 6, 2, 0, 1, 0, 7, 2, 0, 1, 1, 10;
    JointCountTable table{counts, counts.sum()};

    double total = counts.sum();
    double mi = 0.0, h = 0.0;
    for (int s = 0; s < 4; ++s) {
        double ps = counts.col(s).sum() / total;
        if (ps > 0) h -= ps * std::log(ps);
    }
    for (int k = 0; k < 4; ++k)
        for (int s = 0; s < 4; ++s) {
            double pj = counts(k, s) / total;
            if (pj > 0)
                mi += pj * std::log(pj / ((counts.row(k).sum() / total) * (counts.col(s).sum() / total)));
        }
    CHECK(nmi(table) == doctest::Approx(mi / h).epsilon(1e-12));
    CHECK(nmi(table) >= 0.0);
    CHECK(nmi(table) <= 1.0);
}

TEST_CASE("nmi is invariant under token and symbol relabeling") {
    Rng rng(74);
    std::vector<std::uint32_t> toks, labs;
    for (int i = 0; i < 200; ++i) {
        toks.push_back(static_cast<std::uint32_t>(rng.uniform_int(5)));
        labs.push_back(static_cast<std::uint32_t>(rng.uniform_int(4)));
    }
    double base = nmi({make_tokens(toks, 5)}, {make_align(labs, 4)});

    std::vector<std::uint32_t> token_perm{3, 0, 4, 1, 2}, symbol_perm{2, 3, 0, 1};
    std::vector<std::uint32_t> ptoks, plabs;
    for (auto t : toks) ptoks.push_back(token_perm[t]);
    for (auto l : labs) plabs.push_back(symbol_perm[l]);
    double permuted = nmi({make_tokens(ptoks, 5)}, {make_align(plabs, 4)});
    CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("nmi error paths") {
    auto tokens = make_tokens({0, 1}, 3);
    CHECK_THROWS_AS(nmi({tokens}, {make_align({0, 1, 2}, 3)}), LengthError);
    CHECK_THROWS_AS(nmi({tokens}, {make_align({1, 1}, 3)}), DegenerateError);  // constant symbols
    auto dedup = make_tokens({0, 1}, 3, true);
    CHECK_THROWS_AS(nmi({dedup}, {make_align({0, 1}, 3)}), ValidationError);
}

TEST_CASE("purity: identity mapping is (1,1); constant token over 2 symbols splits") {
    auto tokens = make_tokens({0, 1, 2, 0, 1, 2}, 3);
    auto align = make_align({0, 1, 2, 0, 1, 2}, 3);
    auto p = purity({tokens}, {align});
    CHECK(p.cluster_purity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.phone_purity == doctest::Approx(1.0).epsilon(1e-12));

    auto constant = make_tokens({0, 0, 0, 0}, 1);
    auto two = make_align({0, 1, 0, 1}, 2);
    auto q = purity({constant}, {two});
    CHECK(q.phone_purity == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(q.cluster_purity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("purity equals 1 exactly when the mapping is functional in that direction") {
    // token -> symbol functional (each token always sees one symbol)
    auto tokens = make_tokens({0, 0, 1, 1, 2}, 3);
    auto align = make_align({1, 1, 0, 0, 0}, 2);
    auto p = purity({tokens}, {align});
    CHECK(p.phone_purity == doctest::Approx(1.0).epsilon(1e-12));   // token determines symbol
    CHECK(p.cluster_purity < 1.0);                                  // symbol 0 splits across tokens

    Rng rng(75);
    for (int c = 0; c < 10; ++c) {
        std::vector<std::uint32_t> toks, labs;
        bool functional = true;
        std::vector<int> seen(4, -1);
        for (int i = 0; i < 60; ++i) {
            auto t = static_cast<std::uint32_t>(rng.uniform_int(4));
            auto l = static_cast<std::uint32_t>(rng.uniform_int(3));
            if (seen[t] == -1) seen[t] = static_cast<int>(l);
            if (seen[t] != static_cast<int>(l)) functional = false;
            toks.push_back(t);
            labs.push_back(l);
        }
        auto r = purity({make_tokens(toks, 4)}, {make_align(labs, 3)});
        CHECK((r.phone_purity == 1.0) == functional);
        CHECK(r.phone_purity > 0.0);
        CHECK(r.phone_purity <= 1.0);
        CHECK(r.cluster_purity > 0.0);
        CHECK(r.cluster_purity <= 1.0);
    }
}

TEST_CASE("ued basics") {
    auto a = make_tokens({1, 2, 3}, 10, true);
    auto b = make_tokens({1, 3}, 10, true);
    CHECK(ued(a, a) == 0.0);
    CHECK(ued(a, b) == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(levenshtein(a.tokens, b.tokens) == levenshtein(b.tokens, a.tokens));

    auto empty = make_tokens({}, 10, true);
    CHECK(ued(empty, empty) == 0.0);
    CHECK_THROWS_AS(ued(empty, a), ValidationError);
    auto raw = make_tokens({1, 2, 3}, 10, false);
    CHECK_THROWS_AS(ued(a, raw), ValidationError);
}

TEST_CASE("levenshtein matches the exhaustive alignment oracle") {
    Rng rng(76);
    for (int c = 0; c < 300; ++c) {
        std::vector<std::uint32_t> a, b;
        auto la = rng.uniform_range(0, 6), lb = rng.uniform_range(0, 6);
        for (int i = 0; i < la; ++i) a.push_back(static_cast<std::uint32_t>(rng.uniform_int(3)));
        for (int i = 0; i < lb; ++i) b.push_back(static_cast<std::uint32_t>(rng.uniform_int(3)));
        CHECK(levenshtein(a, b) == edit_distance_oracle(a, b));
    }
}

TEST_CASE("levenshtein satisfies the triangle inequality on random triples") {
    Rng rng(77);
    for (int c = 0; c < 500; ++c) {
        std::vector<std::uint32_t> s[3];
        for (auto& seq : s) {
            auto len = rng.uniform_range(0, 8);
            for (int i = 0; i < len; ++i) seq.push_back(static_cast<std::uint32_t>(rng.uniform_int(3)));
        }
        auto d01 = levenshtein(s[0], s[1]);
        auto d12 = levenshtein(s[1], s[2]);
        auto d02 = levenshtein(s[0], s[2]);
        CHECK(d02 <= d01 + d12);
    }
}

TEST_CASE("dtw normalized cost matches exhaustive path enumeration") {
    Rng rng(78);
    for (int c = 0; c < 200; ++c) {
        MatrixD cost(rng.uniform_range(1, 4), rng.uniform_range(1, 4));
        for (Eigen::Index i = 0; i < cost.rows(); ++i)
            for (Eigen::Index j = 0; j < cost.cols(); ++j) cost(i, j) = rng.uniform();
        CHECK(dtw_normalized_cost(cost) == doctest::Approx(dtw_oracle(cost)).epsilon(1e-12));
    }
    // the worked 3-frame case, checked against the same enumeration
    MatrixD cost(3, 3);
    cost << 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.3;
    CHECK(dtw_normalized_cost(cost) == doctest::Approx(dtw_oracle(cost)).epsilon(1e-12));
    CHECK(dtw_normalized_cost(cost) == doctest::Approx(0.1).epsilon(1e-12));  // diagonal path, cost 0.3/3
}

TEST_CASE("abx: identical-to-a means no error, identical a and b means a tie") {
    TokenTriplet clean{{1, 2, 3}, {4, 5, 6}, {1, 2, 3}};
    CHECK(abx_error_rate(std::vector<TokenTriplet>{clean}) == 0.0);
    TokenTriplet tie{{1, 2}, {1, 2}, {3, 1, 2}};
    CHECK(abx_error_rate(std::vector<TokenTriplet>{tie}) == 50.0);
    TokenTriplet wrong{{4, 5, 6}, {1, 2, 3}, {1, 2, 3}};
    CHECK(abx_error_rate(std::vector<TokenTriplet>{wrong}) == 100.0);
    CHECK_THROWS_AS(abx_error_rate(std::vector<TokenTriplet>{TokenTriplet{{}, {1}, {1}}}), ValidationError);
}

TEST_CASE("abx on tokens is invariant to global relabeling") {
    Rng rng(79);
    std::vector<TokenTriplet> triplets;
    for (int c = 0; c < 30; ++c) {
        TokenTriplet t;
        for (auto* seq : {&t.a, &t.b, &t.x}) {
            auto len = rng.uniform_range(1, 6);
            for (int i = 0; i < len; ++i) seq->push_back(static_cast<std::uint32_t>(rng.uniform_int(5)));
        }
        triplets.push_back(std::move(t));
    }
    double base = abx_error_rate(triplets);
    std::vector<std::uint32_t> perm{4, 2, 0, 3, 1};
    auto relabeled = triplets;
    for (auto& t : relabeled)
        for (auto* seq : {&t.a, &t.b, &t.x})
            for (auto& v : *seq) v = perm[v];
    CHECK(abx_error_rate(relabeled) == base);
}

TEST_CASE("abx on features uses angular distance") {
    FeatureTriplet t;
    t.a.resize(2, 2);
    t.a << 1.f, 0.f, 1.f, 0.f;
    t.b.resize(2, 2);
    t.b << 0.f, 1.f, 0.f, 1.f;
    t.x = t.a;
    CHECK(abx_error_rate(std::vector<FeatureTriplet>{t}) == 0.0);
    CHECK(angular_distance(t.a.row(0), t.b.row(0)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(angular_distance(t.a.row(0), t.a.row(0)) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("phone_given_code rows normalize and empty rows are flagged") {
    // hand counts: 2 tokens live, 1 unseen, 3 phones
    MatrixD counts(3, 3);
    counts << 4, 4, 2, 0, 0, 0, 1, 0, 3;
    JointCountTable table{counts, counts.sum()};
    auto pgc = phone_given_code(table);
    CHECK(pgc.rows(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(pgc.rows(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(pgc.rows(0, 2) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(pgc.rows(2, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pgc.rows(2, 2) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pgc.empty_rows == std::vector<bool>{false, true, false});
    CHECK(pgc.rows.row(1).sum() == 0.0);
    for (int k : {0, 2}) CHECK(pgc.rows.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));

    // identity mapping gives one-hot rows
    auto tokens = make_tokens({0, 1, 2}, 3);
    auto align = make_align({0, 1, 2}, 3);
    auto id = phone_given_code(JointCountTable::from_corpus({tokens}, {align}));
    for (int k = 0; k < 3; ++k) CHECK(id.rows(k, k) == 1.0);
}

TEST_CASE("metric report save/load round trip with orientations") {
    auto dir = fs::temp_directory_path() / "spintok_test_report";
    fs::create_directories(dir);
    MetricReport r;
    r.tokenizer_id = "demo";
    r.set("pnmi", 0.75, Orientation::HigherBetter);
    r.set("ued", 12.5, Orientation::LowerBetter);
    r.save(dir / "r.kv");
    auto back = MetricReport::load(dir / "r.kv");
    CHECK(back.tokenizer_id == "demo");
    CHECK(back.get("pnmi") == 0.75);
    CHECK(back.get("ued") == 12.5);
    CHECK(back.orientations.at("pnmi") == Orientation::HigherBetter);
    CHECK(back.orientations.at("ued") == Orientation::LowerBetter);
    CHECK_THROWS_AS(back.get("missing"), LookupError);
}

TEST_CASE("all sequences up to length 4 over 3 tokens agree with the oracle") {
    const int vocab = 3, max_len = 4;
    std::size_t total = 0;
    for (int len = 0, block = 1; len <= max_len; ++len, block *= vocab) total += static_cast<std::size_t>(block);
    std::vector<std::vector<std::uint32_t>> seqs;
    for (std::size_t i = 0; i < total; ++i) seqs.push_back(nth_sequence(i, vocab, max_len));
    for (std::size_t i = 0; i < seqs.size(); i += 7) {
        for (std::size_t j = 0; j < seqs.size(); j += 5) {
            CHECK(levenshtein(seqs[i], seqs[j]) == edit_distance_oracle(seqs[i], seqs[j]));
        }
    }
}

TEST_SUITE_END();
