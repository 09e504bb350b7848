#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spintok/quantizer.hpp"
#include "spintok/rng.hpp"
#include "spintok/types.hpp"

namespace spintok {

struct SpinConfig {
    int k_primary = 500;
    int k_auxiliary = 0;  // 0 = plain Spin
    int d_in = 0;         // 0 = infer from corpus
    int d_code = 256;
    double temperature = 0.1;
    double sinkhorn_eps = 0.05;
    int sinkhorn_iters = 3;
    bool hard_targets = true;
    double mask_prob = 0.01;
    int mask_len = 5;
    double lr_peak = 5e-5;
    int warmup_steps = 4000;
    int total_steps = 20000;
    int batch_frames = 20000;
    std::uint64_t seed = 0;

    void validate() const;
};

// Loss-only knobs, shared by the single- and dual-codebook losses.
struct SpinLossOptions {
    double temperature = 0.1;
    double sinkhorn_eps = 0.05;
    int sinkhorn_iters = 3;
    bool hard_targets = true;

    SpinLossOptions() = default;
    explicit SpinLossOptions(const SpinConfig& c)
        : temperature(c.temperature),
          sinkhorn_eps(c.sinkhorn_eps),
          sinkhorn_iters(c.sinkhorn_iters),
          hard_targets(c.hard_targets) {}
};

// Projection shared by both codebooks plus the codebooks themselves.
// Codeword rows are kept unit-norm by the training loop (projected SGD);
// the loss treats them as free parameters.
struct DCSpinModel {
    MatrixD projection;  // d_code x d_in
    Codebook primary;
    std::optional<Codebook> auxiliary;

    Eigen::Index d_in() const { return projection.cols(); }
    Eigen::Index d_code() const { return projection.rows(); }

    // Projects frames into code space (no normalization; quantize() handles it).
    FeatureSequence project(const FeatureSequence& seq) const;
    // project + primary-codebook quantization.
    TokenSequence tokenize(const FeatureSequence& seq) const;
};

struct LossRecord {
    long step = 0;
    double primary_loss = 0.0;
    double auxiliary_loss = 0.0;
};

struct TrainState {
    long step = 0;
    double lr = 0.0;
    std::vector<LossRecord> loss_history;
};

struct TrainResult {
    DCSpinModel model;
    TrainState state;
};

// Sinkhorn-smoothed assignment targets. Q ∝ exp(logits/eps) rescaled `iters`
// times toward row sums 1/B and column sums 1/K, then rows renormalized to
// sum exactly 1. All entries strictly positive.
MatrixD sinkhorn_targets(const MatrixD& logits, double eps, int iters);

// Swapped-prediction cross-entropy for one codebook over a frame-aligned view
// pair (inputs already masked by the caller). Returns the loss; optional
// outputs receive the analytic gradients. Targets carry no gradient.
double swapped_prediction_loss(const MatrixD& projection, const MatrixD& codewords, const MatrixD& view_a,
                               const MatrixD& view_b, const SpinLossOptions& opts, MatrixD* grad_projection,
                               MatrixD* grad_codewords);

struct DcSpinLoss {
    double total = 0.0;
    double primary = 0.0;
    double auxiliary = 0.0;
};

struct DcSpinGradients {
    MatrixD projection;
    MatrixD primary;
    MatrixD auxiliary;  // empty when the model has no auxiliary codebook
};

// Primary plus (when present per config) auxiliary swapped-prediction loss,
// equal weight. The shared projection accumulates both gradients.
DcSpinLoss dc_spin_loss(const DCSpinModel& model, const MatrixD& view_a, const MatrixD& view_b,
                        const SpinLossOptions& opts, bool use_auxiliary, DcSpinGradients* grads);

// Linear warmup to lr_peak at warmup_steps, then linear decay to 0 at
// total_steps.
double lr_at(long step, const SpinConfig& config);

// Zeroes spans of mask_len frames; each start position opens a span with
// probability mask_prob.
void apply_masking(MatrixD& view, double mask_prob, int mask_len, Rng& rng);

TrainResult train(const std::vector<PairedViews>& corpus, const SpinConfig& config);

// Checkpoint: magic "SPCK", version, d_in, d_code, K1, K2 (u32), tau (f32),
// then projection, primary, auxiliary matrices as little-endian f32.
void save_checkpoint(const DCSpinModel& model, const std::filesystem::path& path);
DCSpinModel load_checkpoint(const std::filesystem::path& path);

SpinConfig load_spin_config(const std::filesystem::path& path);
void save_spin_config(const SpinConfig& config, const std::filesystem::path& path);

}  // namespace spintok
