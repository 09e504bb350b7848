#include "spintok/spin.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "spintok/config.hpp"
#include "spintok/util.hpp"

namespace spintok {

void SpinConfig::validate() const {
    if (k_primary < 2) throw ConfigError("k_primary must be >= 2");
    if (k_auxiliary < 0) throw ConfigError("k_auxiliary must be >= 0");
    if (k_auxiliary == 1) throw ConfigError("k_auxiliary must be 0 or >= 2");
    if (d_code < 1) throw ConfigError("d_code must be >= 1");
    if (temperature <= 0.0) throw ConfigError("temperature must be positive");
    if (sinkhorn_eps <= 0.0) throw ConfigError("sinkhorn_eps must be positive");
    if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be >= 1");
    if (mask_prob < 0.0 || mask_prob > 1.0) throw ConfigError("mask_prob must be in [0, 1]");
    if (mask_len < 1) throw ConfigError("mask_len must be >= 1");
    if (warmup_steps < 0 || warmup_steps > total_steps) throw ConfigError("need 0 <= warmup_steps <= total_steps");
    if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
    if (batch_frames < 1) throw ConfigError("batch_frames must be >= 1");
    if (lr_peak < 0.0) throw ConfigError("lr_peak must be non-negative");
}

FeatureSequence DCSpinModel::project(const FeatureSequence& seq) const {
    if (seq.dim() != d_in())
        throw ShapeError("feature dim " + std::to_string(seq.dim()) + " does not match projection input dim " +
                         std::to_string(d_in()));
    FeatureSequence out;
    out.framerate = seq.framerate;
    out.data = (seq.data.cast<double>() * projection.transpose()).cast<float>();
    return out;
}

TokenSequence DCSpinModel::tokenize(const FeatureSequence& seq) const {
    return quantize(project(seq), primary);
}

MatrixD sinkhorn_targets(const MatrixD& logits, double eps, int iters) {
    const Eigen::Index b = logits.rows();
    const Eigen::Index k = logits.cols();
    if (b < 1 || k < 2) throw ShapeError("sinkhorn needs B >= 1 and K >= 2");
    if (!logits.allFinite()) throw NumericError("sinkhorn input logits must be finite");
    if (eps <= 0.0 || iters < 0) throw ConfigError("sinkhorn needs eps > 0 and iters >= 0");

    // exp is shift-invariant here because total mass is normalized away;
    // the floor keeps every entry strictly positive.
    MatrixD q = (((logits.array() / eps) - logits.maxCoeff() / eps).max(-690.0)).exp();
    q /= q.sum();
    for (int it = 0; it < iters; ++it) {
        Eigen::RowVectorXd col_sums = q.colwise().sum();
        q.array().rowwise() /= (col_sums.array() * static_cast<double>(k));
        Eigen::VectorXd row_sums = q.rowwise().sum();
        q.array().colwise() /= (row_sums.array() * static_cast<double>(b));
    }
    // a column touch-up so the matrix entering the final normalization has
    // exact 1/K column mass, then rows forced to sum exactly 1
    Eigen::RowVectorXd col_sums = q.colwise().sum();
    q.array().rowwise() /= (col_sums.array() * static_cast<double>(k));
    Eigen::VectorXd row_sums = q.rowwise().sum();
    q.array().colwise() /= row_sums.array();
    return q;
}

namespace {

MatrixD row_softmax(const MatrixD& logits) {
    MatrixD p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::RowVectorXd r = p.row(i);
        double m = r.maxCoeff();
        r = (r.array() - m).exp();
        p.row(i) = r / r.sum();
    }
    return p;
}

MatrixD hard_rows(const MatrixD& q) {
    MatrixD h = MatrixD::Zero(q.rows(), q.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Eigen::Index best;
        q.row(i).maxCoeff(&best);
        h(i, best) = 1.0;
    }
    return h;
}

struct ViewForward {
    MatrixD z;         // B x d_code, unit rows
    Eigen::VectorXd norms;  // pre-normalization row norms
};

ViewForward forward_projection(const MatrixD& projection, const MatrixD& view) {
    ViewForward f;
    f.z = view * projection.transpose();
    f.norms = f.z.rowwise().norm();
    for (Eigen::Index i = 0; i < f.z.rows(); ++i) {
        double n = std::max(f.norms[i], 1e-12);
        f.norms[i] = n;
        f.z.row(i) /= n;
    }
    return f;
}

// Accumulates the gradients of the mean swapped CE for one codebook given
// both forward passes. Factored out so the dual-codebook loss can share the
// projection forward.
double codebook_swapped_ce(const ViewForward& fa, const ViewForward& fb, const MatrixD& view_a,
                           const MatrixD& view_b, const MatrixD& codewords, const SpinLossOptions& opts,
                           MatrixD* grad_projection, MatrixD* grad_codewords) {
    const auto b = static_cast<double>(fa.z.rows());
    MatrixD logits_a = fa.z * codewords.transpose() / opts.temperature;
    MatrixD logits_b = fb.z * codewords.transpose() / opts.temperature;
    MatrixD p_a = row_softmax(logits_a);
    MatrixD p_b = row_softmax(logits_b);
    MatrixD q_a = sinkhorn_targets(logits_a, opts.sinkhorn_eps, opts.sinkhorn_iters);
    MatrixD q_b = sinkhorn_targets(logits_b, opts.sinkhorn_eps, opts.sinkhorn_iters);
    if (opts.hard_targets) {
        q_a = hard_rows(q_a);
        q_b = hard_rows(q_b);
    }

    double loss = 0.0;
    loss -= (q_b.array() * p_a.array().max(1e-300).log()).sum();
    loss -= (q_a.array() * p_b.array().max(1e-300).log()).sum();
    loss /= 2.0 * b;

    if (grad_projection || grad_codewords) {
        struct Side {
            const ViewForward* f;
            const MatrixD* view;
            const MatrixD* p;
            const MatrixD* q;  // target from the other view
        };
        for (const Side& s : {Side{&fa, &view_a, &p_a, &q_b}, Side{&fb, &view_b, &p_b, &q_a}}) {
            MatrixD dlogits = (*s.p - *s.q) / (2.0 * b);
            if (grad_codewords) grad_codewords->noalias() += dlogits.transpose() * s.f->z / opts.temperature;
            if (grad_projection) {
                MatrixD dz = dlogits * codewords / opts.temperature;
                // back through row normalization: (I - z z^T) / ||y||
                Eigen::VectorXd inner = (dz.array() * s.f->z.array()).rowwise().sum();
                MatrixD dy = dz - (s.f->z.array().colwise() * inner.array()).matrix();
                dy.array().colwise() /= s.f->norms.array();
                grad_projection->noalias() += dy.transpose() * (*s.view);
            }
        }
    }
    return loss;
}

}  // namespace

double swapped_prediction_loss(const MatrixD& projection, const MatrixD& codewords, const MatrixD& view_a,
                               const MatrixD& view_b, const SpinLossOptions& opts, MatrixD* grad_projection,
                               MatrixD* grad_codewords) {
    if (view_a.rows() != view_b.rows() || view_a.cols() != view_b.cols())
        throw ShapeError("swapped prediction views must have equal shapes");
    if (view_a.rows() < 1) throw ShapeError("swapped prediction needs at least one frame");
    if (view_a.cols() != projection.cols()) throw ShapeError("view dim does not match projection input dim");
    if (codewords.cols() != projection.rows()) throw ShapeError("codeword dim does not match projection output dim");

    if (grad_projection) grad_projection->setZero(projection.rows(), projection.cols());
    if (grad_codewords) grad_codewords->setZero(codewords.rows(), codewords.cols());
    ViewForward fa = forward_projection(projection, view_a);
    ViewForward fb = forward_projection(projection, view_b);
    return codebook_swapped_ce(fa, fb, view_a, view_b, codewords, opts, grad_projection, grad_codewords);
}

DcSpinLoss dc_spin_loss(const DCSpinModel& model, const MatrixD& view_a, const MatrixD& view_b,
                        const SpinLossOptions& opts, bool use_auxiliary, DcSpinGradients* grads) {
    if (use_auxiliary && !model.auxiliary)
        throw ConfigError("dc_spin_loss requested auxiliary codebook but the model has none");
    if (view_a.rows() != view_b.rows() || view_a.cols() != view_b.cols())
        throw ShapeError("swapped prediction views must have equal shapes");
    if (view_a.rows() < 1) throw ShapeError("swapped prediction needs at least one frame");
    if (view_a.cols() != model.projection.cols()) throw ShapeError("view dim does not match projection input dim");

    MatrixD* gp = nullptr;
    MatrixD* gc1 = nullptr;
    MatrixD* gc2 = nullptr;
    if (grads) {
        grads->projection.setZero(model.projection.rows(), model.projection.cols());
        grads->primary.setZero(model.primary.codewords.rows(), model.primary.codewords.cols());
        gp = &grads->projection;
        gc1 = &grads->primary;
        if (use_auxiliary) {
            grads->auxiliary.setZero(model.auxiliary->codewords.rows(), model.auxiliary->codewords.cols());
            gc2 = &grads->auxiliary;
        } else {
            grads->auxiliary.resize(0, 0);
        }
    }

    ViewForward fa = forward_projection(model.projection, view_a);
    ViewForward fb = forward_projection(model.projection, view_b);

    DcSpinLoss loss;
    loss.primary = codebook_swapped_ce(fa, fb, view_a, view_b, model.primary.codewords, opts, gp, gc1);
    if (use_auxiliary)
        loss.auxiliary = codebook_swapped_ce(fa, fb, view_a, view_b, model.auxiliary->codewords, opts, gp, gc2);
    loss.total = loss.primary + loss.auxiliary;
    return loss;
}

double lr_at(long step, const SpinConfig& config) {
    if (step <= 0) return 0.0;
    if (step <= config.warmup_steps)
        return config.lr_peak * static_cast<double>(step) / static_cast<double>(std::max(config.warmup_steps, 1));
    if (step >= config.total_steps) return 0.0;
    return config.lr_peak * static_cast<double>(config.total_steps - step) /
           static_cast<double>(std::max(config.total_steps - config.warmup_steps, 1));
}

void apply_masking(MatrixD& view, double mask_prob, int mask_len, Rng& rng) {
    if (mask_prob <= 0.0) return;
    Eigen::Index t = 0;
    while (t < view.rows()) {
        if (rng.uniform() < mask_prob) {
            Eigen::Index end = std::min<Eigen::Index>(t + mask_len, view.rows());
            view.middleRows(t, end - t).setZero();
            t = end;
        } else {
            ++t;
        }
    }
}

namespace {

MatrixD random_unit_rows(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    MatrixD m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
        double n = m.row(i).norm();
        if (n > 0.0) m.row(i) /= n;
    }
    return m;
}

void renormalize_rows(MatrixD& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double n = m.row(i).norm();
        if (n > 0.0) m.row(i) /= n;
    }
}

struct Batch {
    MatrixD view_a;
    MatrixD view_b;
};

// Packs shuffled utterances into batches of roughly batch_frames frames,
// keeping whole utterances so masking spans stay within one utterance.
std::vector<Batch> make_batches(const std::vector<PairedViews>& corpus, const std::vector<std::size_t>& order,
                                int batch_frames) {
    std::vector<Batch> batches;
    std::vector<std::size_t> current;
    Eigen::Index frames = 0;
    auto flush = [&] {
        if (current.empty()) return;
        Batch b;
        b.view_a.resize(frames, corpus[current[0]].view_a.dim());
        b.view_b.resize(frames, corpus[current[0]].view_a.dim());
        Eigen::Index row = 0;
        for (auto ui : current) {
            const auto& pv = corpus[ui];
            b.view_a.middleRows(row, pv.view_a.frames()) = pv.view_a.data.cast<double>();
            b.view_b.middleRows(row, pv.view_b.frames()) = pv.view_b.data.cast<double>();
            row += pv.view_a.frames();
        }
        batches.push_back(std::move(b));
        current.clear();
        frames = 0;
    };
    for (auto ui : order) {
        Eigen::Index n = corpus[ui].view_a.frames();
        if (n == 0) continue;
        if (frames > 0 && frames + n > batch_frames) flush();
        current.push_back(ui);
        frames += n;
    }
    flush();
    return batches;
}

}  // namespace

TrainResult train(const std::vector<PairedViews>& corpus, const SpinConfig& config) {
    config.validate();
    if (corpus.empty()) throw ConfigError("spin training needs a non-empty corpus");
    for (const auto& pv : corpus) pv.validate();

    int d_in = config.d_in > 0 ? config.d_in : static_cast<int>(corpus.front().view_a.dim());
    for (const auto& pv : corpus)
        if (pv.view_a.dim() != d_in) throw ShapeError("corpus feature dims are inconsistent with d_in");

    Rng init_rng(Rng::derive_seed(config.seed, 0));
    Rng shuffle_rng(Rng::derive_seed(config.seed, 1));
    Rng mask_rng(Rng::derive_seed(config.seed, 2));

    TrainResult result;
    DCSpinModel& model = result.model;
    model.projection.resize(config.d_code, d_in);
    double w_scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    for (Eigen::Index i = 0; i < model.projection.rows(); ++i)
        for (Eigen::Index j = 0; j < model.projection.cols(); ++j)
            model.projection(i, j) = init_rng.gaussian() * w_scale;
    model.primary =
        Codebook{random_unit_rows(init_rng, config.k_primary, config.d_code), config.temperature, true};
    bool use_aux = config.k_auxiliary > 0;
    if (use_aux)
        model.auxiliary =
            Codebook{random_unit_rows(init_rng, config.k_auxiliary, config.d_code), config.temperature, true};

    SpinLossOptions opts(config);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    DcSpinGradients grads;
    std::vector<Batch> batches;
    std::size_t batch_index = 0;
    result.state.loss_history.reserve(config.total_steps);
    for (long step = 0; step < config.total_steps; ++step) {
        if (batch_index >= batches.size()) {
            // Fisher-Yates reshuffle at each pass over the corpus
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
            batches = make_batches(corpus, order, config.batch_frames);
            batch_index = 0;
        }
        Batch batch = batches[batch_index++];
        apply_masking(batch.view_a, config.mask_prob, config.mask_len, mask_rng);
        apply_masking(batch.view_b, config.mask_prob, config.mask_len, mask_rng);

        DcSpinLoss loss = dc_spin_loss(model, batch.view_a, batch.view_b, opts, use_aux, &grads);
        if (!std::isfinite(loss.total))
            throw TrainingError("spin training diverged (non-finite loss) at step " + std::to_string(step));

        double lr = lr_at(step, config);
        model.projection -= lr * grads.projection;
        model.primary.codewords -= lr * grads.primary;
        renormalize_rows(model.primary.codewords);
        if (use_aux) {
            model.auxiliary->codewords -= lr * grads.auxiliary;
            renormalize_rows(model.auxiliary->codewords);
        }
        result.state.step = step + 1;
        result.state.lr = lr;
        result.state.loss_history.push_back({step, loss.primary, loss.auxiliary});
    }
    return result;
}

namespace {
constexpr char kCheckpointMagic[4] = {'S', 'P', 'C', 'K'};

void write_f32_matrix(std::ostream& out, const MatrixD& m) {
    MatrixF f = m.cast<float>();
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
}

MatrixD read_f32_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const std::filesystem::path& path) {
    MatrixF f(rows, cols);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!in) throw CorruptionError("truncated checkpoint " + path.string());
    return f.cast<double>();
}
}  // namespace

void save_checkpoint(const DCSpinModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kCheckpointMagic, 4);
    std::uint32_t header[5] = {1u, static_cast<std::uint32_t>(model.d_in()), static_cast<std::uint32_t>(model.d_code()),
                               static_cast<std::uint32_t>(model.primary.K()),
                               static_cast<std::uint32_t>(model.auxiliary ? model.auxiliary->K() : 0)};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    float tau = static_cast<float>(model.primary.temperature);
    out.write(reinterpret_cast<const char*>(&tau), sizeof(tau));
    write_f32_matrix(out, model.projection);
    write_f32_matrix(out, model.primary.codewords);
    if (model.auxiliary) write_f32_matrix(out, model.auxiliary->codewords);
    if (!out) throw IoError("write failed: " + path.string());
}

DCSpinModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError("bad magic in checkpoint " + path.string());
    std::uint32_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] != 1) throw FormatError("unsupported checkpoint version in " + path.string());
    float tau = 0.0f;
    in.read(reinterpret_cast<char*>(&tau), sizeof(tau));
    if (!in) throw CorruptionError("truncated checkpoint " + path.string());

    DCSpinModel model;
    model.projection = read_f32_matrix(in, header[2], header[1], path);
    model.primary.codewords = read_f32_matrix(in, header[3], header[2], path);
    model.primary.temperature = tau;
    model.primary.normalized = false;  // float rounding may perturb norms
    if (header[4] > 0) {
        model.auxiliary = Codebook{read_f32_matrix(in, header[4], header[2], path), tau, false};
    }
    char extra;
    if (in.read(&extra, 1)) throw CorruptionError("trailing bytes after checkpoint payload: " + path.string());
    return model;
}

SpinConfig load_spin_config(const std::filesystem::path& path) {
    KeyValueFile kv = KeyValueFile::load(path);
    SpinConfig c;
    c.k_primary = static_cast<int>(kv.get_int("k_primary", c.k_primary));
    c.k_auxiliary = static_cast<int>(kv.get_int("k_auxiliary", c.k_auxiliary));
    c.d_in = static_cast<int>(kv.get_int("d_in", c.d_in));
    c.d_code = static_cast<int>(kv.get_int("d_code", c.d_code));
    c.temperature = kv.get_double("temperature", c.temperature);
    c.sinkhorn_eps = kv.get_double("sinkhorn_eps", c.sinkhorn_eps);
    c.sinkhorn_iters = static_cast<int>(kv.get_int("sinkhorn_iters", c.sinkhorn_iters));
    c.hard_targets = kv.get_int("hard_targets", c.hard_targets ? 1 : 0) != 0;
    c.mask_prob = kv.get_double("mask_prob", c.mask_prob);
    c.mask_len = static_cast<int>(kv.get_int("mask_len", c.mask_len));
    c.lr_peak = kv.get_double("lr_peak", c.lr_peak);
    c.warmup_steps = static_cast<int>(kv.get_int("warmup_steps", c.warmup_steps));
    c.total_steps = static_cast<int>(kv.get_int("total_steps", c.total_steps));
    c.batch_frames = static_cast<int>(kv.get_int("batch_frames", c.batch_frames));
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(c.seed)));
    c.validate();
    return c;
}

void save_spin_config(const SpinConfig& config, const std::filesystem::path& path) {
    KeyValueFile kv;
    kv.set("k_primary", std::to_string(config.k_primary));
    kv.set("k_auxiliary", std::to_string(config.k_auxiliary));
    kv.set("d_in", std::to_string(config.d_in));
    kv.set("d_code", std::to_string(config.d_code));
    kv.set("temperature", format_double(config.temperature));
    kv.set("sinkhorn_eps", format_double(config.sinkhorn_eps));
    kv.set("sinkhorn_iters", std::to_string(config.sinkhorn_iters));
    kv.set("hard_targets", config.hard_targets ? "1" : "0");
    kv.set("mask_prob", format_double(config.mask_prob));
    kv.set("mask_len", std::to_string(config.mask_len));
    kv.set("lr_peak", format_double(config.lr_peak));
    kv.set("warmup_steps", std::to_string(config.warmup_steps));
    kv.set("total_steps", std::to_string(config.total_steps));
    kv.set("batch_frames", std::to_string(config.batch_frames));
    kv.set("seed", std::to_string(config.seed));
    kv.save(path);
}

}  // namespace spintok
