#include "spintok/synth.hpp"

#include <Eigen/QR>

#include "spintok/corpus_io.hpp"
#include "spintok/rng.hpp"

namespace spintok {

void SynthConfig::validate() const {
    if (n_phones < 2) throw ConfigError("synthetic corpus needs at least 2 phones");
    if (n_speakers < 2) throw ConfigError("synthetic corpus needs at least 2 speakers");
    if (n_utterances < 1) throw ConfigError("synthetic corpus needs at least 1 utterance");
    if (dim < 1) throw ConfigError("synthetic corpus needs dim >= 1");
    if (min_frames < 1 || max_frames < min_frames) throw ConfigError("bad frame range");
    if (noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
    if (framerate <= 0.0) throw ConfigError("framerate must be positive");
}

namespace {

MatrixD random_gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    MatrixD m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign of
// the R diagonal folded into Q.
MatrixD random_orthogonal(Rng& rng, Eigen::Index dim) {
    MatrixD a = random_gaussian(rng, dim, dim);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);

    SyntheticCorpus corpus;
    corpus.phone_means = random_gaussian(rng, config.n_phones, config.dim) * 4.0;
    corpus.speaker_rot.reserve(config.n_speakers);
    corpus.speaker_bias.resize(config.n_speakers, config.dim);
    for (int s = 0; s < config.n_speakers; ++s) {
        corpus.speaker_rot.push_back(random_orthogonal(rng, config.dim));
        for (int j = 0; j < config.dim; ++j) corpus.speaker_bias(s, j) = rng.gaussian();
    }

    for (int u = 0; u < config.n_utterances; ++u) {
        auto frames = static_cast<Eigen::Index>(rng.uniform_range(config.min_frames, config.max_frames));

        AlignmentSequence align;
        align.symbol_count = static_cast<std::uint32_t>(config.n_phones);
        align.labels.reserve(frames);
        while (static_cast<Eigen::Index>(align.labels.size()) < frames) {
            auto phone = static_cast<std::uint32_t>(rng.uniform_int(config.n_phones));
            auto hold = rng.uniform_range(2, 8);
            for (std::int64_t i = 0; i < hold && static_cast<Eigen::Index>(align.labels.size()) < frames; ++i)
                align.labels.push_back(phone);
        }

        MatrixD clean(frames, config.dim);
        for (Eigen::Index t = 0; t < frames; ++t)
            for (int j = 0; j < config.dim; ++j)
                clean(t, j) = corpus.phone_means(align.labels[t], j) + rng.gaussian() * config.noise_std;

        int s1 = static_cast<int>(rng.uniform_int(config.n_speakers));
        int s2 = (s1 + 1 + static_cast<int>(rng.uniform_int(config.n_speakers - 1))) % config.n_speakers;

        PairedViews pv;
        pv.view_a.framerate = config.framerate;
        pv.view_b.framerate = config.framerate;
        pv.view_a.data =
            ((clean * corpus.speaker_rot[s1].transpose()).rowwise() + corpus.speaker_bias.row(s1)).cast<float>();
        pv.view_b.data =
            ((clean * corpus.speaker_rot[s2].transpose()).rowwise() + corpus.speaker_bias.row(s2)).cast<float>();
        pv.labels = std::move(align);
        pv.validate();

        corpus.utterance_ids.push_back("utt" + std::to_string(u));
        corpus.pairs.push_back(std::move(pv));
        corpus.speaker_a.push_back(s1);
        corpus.speaker_b.push_back(s2);
    }
    return corpus;
}

CorpusManifest write_synthetic_corpus(const SyntheticCorpus& corpus, const SynthConfig& config,
                                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    CorpusManifest manifest;
    manifest.framerate = config.framerate;
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
        const auto& id = corpus.utterance_ids[i];
        ManifestEntry e;
        e.utterance_id = id;
        e.feature_path = dir / (id + ".a.spft");
        e.pair_path = dir / (id + ".b.spft");
        e.alignment_path = dir / (id + ".align");
        write_feature_file(corpus.pairs[i].view_a, e.feature_path);
        write_feature_file(corpus.pairs[i].view_b, *e.pair_path);
        write_alignment_file({*corpus.pairs[i].labels}, *e.alignment_path);
        manifest.entries.push_back(std::move(e));
    }
    write_manifest(manifest, dir / "manifest.tsv");
    return manifest;
}

}  // namespace spintok
