#include "spintok/quantizer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "spintok/corpus_io.hpp"
#include "spintok/rng.hpp"

namespace spintok {

void Codebook::validate() const {
    if (K() < 2) throw ValidationError("codebook needs K >= 2");
    if (dim() < 1) throw ValidationError("codebook needs dim >= 1");
    if (temperature <= 0.0) throw ValidationError("codebook temperature must be positive");
    if (!codewords.allFinite()) throw ValidationError("codebook contains non-finite values");
    if (normalized) {
        for (Eigen::Index k = 0; k < K(); ++k)
            if (std::abs(codewords.row(k).norm() - 1.0) > 1e-6)
                throw ValidationError("codeword " + std::to_string(k) + " is not unit norm");
    }
}

void KMeansModel::validate() const {
    if (K() < 1) throw ValidationError("k-means model needs K >= 1");
    if (!centroids.allFinite()) throw ValidationError("k-means centroids contain non-finite values");
}

namespace {

Eigen::Index nearest_centroid(const Eigen::RowVectorXd& frame, const MatrixD& centroids, double* dist_out) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
        double d = (frame - centroids.row(k)).squaredNorm();
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = k;
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

}  // namespace

KMeansModel kmeans_fit(const MatrixD& frames, int k, std::uint64_t seed, int max_iters, double tol) {
    const Eigen::Index n = frames.rows();
    if (k < 1) throw ConfigError("k-means needs K >= 1");
    if (n < k) throw ConfigError("k-means needs at least K frames (" + std::to_string(n) + " < " + std::to_string(k) + ")");
    if (!frames.allFinite()) throw ValidationError("k-means input contains non-finite values");

    Rng rng(seed);
    MatrixD centroids(k, frames.cols());

    // k-means++ seeding
    centroids.row(0) = frames.row(static_cast<Eigen::Index>(rng.uniform_int(n)));
    Eigen::VectorXd d2 = (frames.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        double total = d2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.uniform_int(n));
        } else {
            double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = frames.row(pick);
        d2 = d2.cwiseMin((frames.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }

    std::vector<Eigen::Index> assign(n);
    std::vector<double> dist(n);
    double prev_distortion = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        double distortion = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            assign[i] = nearest_centroid(frames.row(i), centroids, &dist[i]);
            distortion += dist[i];
        }
        // Lloyd never increases distortion; a rise means a bug upstream.
        if (distortion > prev_distortion * (1.0 + 1e-12) + 1e-12)
            throw NumericError("k-means distortion increased across an iteration");
        prev_distortion = distortion;

        MatrixD sums = MatrixD::Zero(k, frames.cols());
        std::vector<std::int64_t> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[i]) += frames.row(i);
            ++counts[assign[i]];
        }
        double max_move = 0.0;
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd updated;
            if (counts[c] == 0) {
                // reseed to the worst-fit point
                Eigen::Index far = 0;
                for (Eigen::Index i = 1; i < n; ++i)
                    if (dist[i] > dist[far]) far = i;
                updated = frames.row(far);
                dist[far] = 0.0;
                prev_distortion = std::numeric_limits<double>::infinity();
            } else {
                updated = sums.row(c) / static_cast<double>(counts[c]);
            }
            max_move = std::max(max_move, (updated - centroids.row(c)).norm());
            centroids.row(c) = updated;
        }
        if (max_move < tol) break;
    }

    KMeansModel model{std::move(centroids)};
    model.validate();
    return model;
}

TokenSequence quantize(const FeatureSequence& seq, const KMeansModel& model) {
    model.validate();
    if (seq.dim() != model.dim())
        throw ShapeError("feature dim " + std::to_string(seq.dim()) + " does not match k-means dim " +
                         std::to_string(model.dim()));
    TokenSequence out;
    out.vocab_size = static_cast<std::uint32_t>(model.K());
    out.framerate = seq.framerate;
    out.deduplicated = false;
    out.tokens.resize(seq.frames());
    for (Eigen::Index t = 0; t < seq.frames(); ++t) {
        Eigen::RowVectorXd frame = seq.data.row(t).cast<double>();
        out.tokens[t] = static_cast<std::uint32_t>(nearest_centroid(frame, model.centroids, nullptr));
    }
    return out;
}

TokenSequence quantize(const FeatureSequence& seq, const Codebook& book) {
    book.validate();
    if (seq.dim() != book.dim())
        throw ShapeError("feature dim " + std::to_string(seq.dim()) + " does not match codebook dim " +
                         std::to_string(book.dim()));
    MatrixD unit = book.codewords;
    for (Eigen::Index k = 0; k < unit.rows(); ++k) {
        double nrm = unit.row(k).norm();
        if (nrm > 0.0) unit.row(k) /= nrm;
    }
    TokenSequence out;
    out.vocab_size = static_cast<std::uint32_t>(book.K());
    out.framerate = seq.framerate;
    out.deduplicated = false;
    out.tokens.resize(seq.frames());
    for (Eigen::Index t = 0; t < seq.frames(); ++t) {
        Eigen::RowVectorXd frame = seq.data.row(t).cast<double>();
        double nrm = frame.norm();
        if (nrm > 0.0) frame /= nrm;
        Eigen::Index best = 0;
        double best_sim = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < unit.rows(); ++k) {
            double sim = frame.dot(unit.row(k));
            if (sim > best_sim) {
                best_sim = sim;
                best = k;
            }
        }
        out.tokens[t] = static_cast<std::uint32_t>(best);
    }
    return out;
}

TokenSequence deduplicate(const TokenSequence& seq) {
    seq.validate();
    TokenSequence out;
    out.vocab_size = seq.vocab_size;
    out.framerate = seq.framerate;
    out.deduplicated = true;
    for (auto t : seq.tokens)
        if (out.tokens.empty() || out.tokens.back() != t) out.tokens.push_back(t);
    return out;
}

void export_pseudo_labels(const CorpusManifest& manifest, const TokenizeFn& tokenize,
                          const std::filesystem::path& out_path) {
    std::vector<TokenSequence> lines;
    lines.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) lines.push_back(tokenize(read_feature_file(e.feature_path)));
    write_token_file(lines, out_path);
}

MatrixD pool_frames(const CorpusManifest& manifest) {
    std::vector<FeatureSequence> seqs = load_features(manifest);
    Eigen::Index total = 0;
    for (const auto& s : seqs) total += s.frames();
    if (seqs.empty()) throw ValidationError("cannot pool frames of an empty corpus");
    MatrixD pooled(total, seqs.front().dim());
    Eigen::Index row = 0;
    for (const auto& s : seqs) {
        if (s.dim() != pooled.cols()) throw ShapeError("inconsistent feature dims across corpus");
        pooled.middleRows(row, s.frames()) = s.data.cast<double>();
        row += s.frames();
    }
    return pooled;
}

namespace {
constexpr char kKMeansMagic[4] = {'S', 'P', 'K', 'M'};
}

void save_kmeans(const KMeansModel& model, const std::filesystem::path& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kKMeansMagic, 4);
    std::uint32_t header[3] = {1u, static_cast<std::uint32_t>(model.K()), static_cast<std::uint32_t>(model.dim())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    MatrixF m = model.centroids.cast<float>();
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path.string());
}

KMeansModel load_kmeans(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kKMeansMagic, 4) != 0)
        throw FormatError("bad magic in k-means model " + path.string());
    std::uint32_t header[3];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != 1) throw FormatError("unsupported k-means model version in " + path.string());
    MatrixF m(header[1], header[2]);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw CorruptionError("truncated k-means model " + path.string());
    KMeansModel model{m.cast<double>()};
    model.validate();
    return model;
}

}  // namespace spintok
