#pragma once
// Small MLP (flatten -> affine -> tanh -> affine) trained from scratch with
// the combined objective  L + alpha * L_psw + beta * L_ps. Backpropagation
// is hand-written and checked against central finite differences. Losses
// are cross-entropy with log-sum-exp stabilization; logits are clamped so
// every per-sample loss stays below the configured bound omega.

#include <cstdint>
#include <string>
#include <vector>

#include "cpsw/errors.hpp"
#include "cpsw/rng.hpp"

namespace cpsw::learner {

struct ModelParams {
    int input_dim = 0;
    int hidden_dim = 0;
    int num_classes = 0;
    std::vector<double> w1; // hidden x input
    std::vector<double> b1; // hidden
    std::vector<double> w2; // classes x hidden
    std::vector<double> b2; // classes

    static ModelParams init(int input_dim, int hidden_dim, int num_classes,
                            rng::Rng& rng);
    std::size_t param_count() const;
    // Flat views for finite-difference checks and checkpoints:
    // order w1, b1, w2, b2.
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

// Per-sample views into caller-owned buffers.
struct Batch {
    int input_dim = 0;
    std::vector<const double*> inputs;
    std::vector<int> labels;
    std::string domain;
    std::vector<double> weights;        // empty = absent (1/pi when present)
    std::vector<const double*> twins;   // empty = absent; labels reused

    std::size_t size() const { return inputs.size(); }
};

struct LossConfig {
    double omega = 10.0; // uniform per-sample loss bound (logit clamping)
};

struct LossReport {
    double base = 0.0;
    double psw = 0.0;
    double ps = 0.0;
    double total = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

// Raw (unclamped) logits for one flattened image.
std::vector<double> forward(const ModelParams& p, const double* x);

double loss_erm(const ModelParams& p, const Batch& batch,
                const LossConfig& cfg = {});
double loss_psw(const ModelParams& p, const Batch& batch,
                const LossConfig& cfg = {});
double loss_ps(const ModelParams& p, const Batch& batch,
               const LossConfig& cfg = {});
LossReport total_loss(const ModelParams& p, const Batch& batch, double alpha,
                      double beta, const LossConfig& cfg = {});

struct Gradients {
    std::vector<double> w1, b1, w2, b2;
    std::vector<double> flatten() const;
};

// Exact analytic gradient of total_loss.
Gradients backward(const ModelParams& p, const Batch& batch, double alpha,
                   double beta, const LossConfig& cfg = {});

// --- training ----------------------------------------------------------

struct TrainConfig {
    std::uint64_t seed = 0;
    int hidden_dim = 64;
    double step = 0.1;
    int batch_size = 128;
    int epochs = 20;
    double alpha = 0.0;
    double beta = 0.0;
    int filter_size = 7;        // S; 0 means height / 4
    double delta = 1.0;         // lambda ~ U(0, delta)
    int spurious_clusters = 2;  // n
    double floor = 0.05;        // propensity clipping
    int refresh_period = 1;     // recluster every R epochs
    int kmeans_iters = 30;
    double omega = 10.0;
    bool self_normalize = false;
    bool complement_masks = false; // high mask := 1 - low mask
    bool square_masks = false;     // centered-square masks instead of bands
    bool freeze_head_for_ps = false;
    bool pool_propensity = false;  // one table across train domains
    bool score_clean_labels = false;
};

// One flattened-image dataset as the trainer consumes it.
struct TrainDomain {
    std::string name;
    int input_dim = 0;
    int height = 0, width = 0, channels = 0;
    const float* images = nullptr;       // N x input_dim, planar per image
    const std::uint8_t* labels = nullptr;
    const std::uint8_t* clean_labels = nullptr; // may be null
    std::size_t count = 0;
};

struct MetricsRow {
    int epoch = 0;
    std::string domain;
    std::string split; // "train" or "test"
    double accuracy = 0.0;
    double base = 0.0, psw = 0.0, ps = 0.0, total = 0.0;
    double accuracy_clean = 0.0;
};

struct CaseStudyRow { // per-sample propensity dump (casestudy subcommand)
    int sample = 0;
    std::string domain;
    int c_cluster = 0;
    int s_cluster = 0;
    double propensity = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<MetricsRow> history;
    std::vector<CaseStudyRow> case_study; // last refresh's assignments
};

// Full pipeline: per epoch, (1) split every train image into high/low
// frequency parts and encode both with the current encoder, (2) refresh
// clusterings + propensity tables on schedule, (3) draw simulated twins in
// the frequency domain, (4) descend the combined objective by mini-batch
// gradient descent. Deterministic for a fixed seed and kernel backend.
TrainResult train(const TrainConfig& cfg,
                  const std::vector<TrainDomain>& train_domains,
                  const std::vector<TrainDomain>& test_domains);

double evaluate_accuracy(const ModelParams& p, const TrainDomain& d,
                         bool clean_labels);

// One propensity refresh (encode, cluster, tabulate) with the given
// parameters, without training; the casestudy subcommand's workhorse.
std::vector<CaseStudyRow> propensity_case_study(
    const TrainConfig& cfg, const std::vector<TrainDomain>& domains,
    const ModelParams& params);

// --- checkpoints ---------------------------------------------------------
// Versioned binary: magic, layer shapes, row-major float64 weights.
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path);

} // namespace cpsw::learner
