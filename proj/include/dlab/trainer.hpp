#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlab/adam.hpp"
#include "dlab/fairaudit.hpp"
#include "dlab/losses.hpp"
#include "dlab/model.hpp"
#include "dlab/synthgen.hpp"

namespace dlab::trainer {

enum class Mode { baseline, disentangled };

struct AugmentConfig {
    bool enabled = true;
    double flip_prob = 0.5;
    bool quarter_turns = true;
    double brightness_max = 0.08;   // delta drawn from [-max, max]
    double contrast_jitter = 0.10;  // scale drawn from [1-j, 1+j]
    double blur_prob = 0.30;
    double blur_sigma_min = 0.4;
    double blur_sigma_max = 0.8;
};

struct TrainConfig {
    Mode mode = Mode::baseline;
    std::string target_sa;  // required in disentangled mode
    std::size_t epochs_max = 30;
    std::size_t patience = 10;
    std::size_t batch_size = 0;  // 0 = mode default (4 baseline, 32 disentangled)
    double lr = 0.0;             // 0 = mode default (1e-5 baseline, 5e-5 disentangled)
    double weight_decay = 1e-6;
    std::size_t latent_dim = 32;
    std::uint64_t seed = 1;
    LossWeights loss_weights;
    // linear ramp of lambda_d over the first N epochs (0 = no warmup); the
    // reconstruction path has to learn to transport appearance through the
    // latent before the perturbation penalty is useful — applying it from
    // epoch 0 favors the degenerate minimum where the decoder just ignores
    // its latent input
    std::size_t lambda_d_warmup_epochs = 0;
    // perturbation sigma = noise_scale * mean||z_full|| / sqrt(2d), refreshed
    // each epoch; smaller values keep the perturbation in the encoder's
    // near-linear regime, larger ones probe bigger appearance changes
    double noise_scale = 0.5;
    // global gradient-norm clip applied to each averaged batch gradient
    // (0 = off); the perturb-decode-re-encode graph occasionally produces
    // spikes that otherwise knock the encoder out of its basin
    double grad_clip = 0.0;
    // multiplier on the learning rate once the lambda_d ramp has completed
    // (1 = no change); damps the oscillation the perturbation penalty
    // induces so the final epochs settle instead of bouncing between the
    // shortcut and the disentangled basin
    double lr_after_warmup = 1.0;
    // disentangled mode returns the element-wise average of the weights from
    // the last N post-ramp epochs (1 = just the final epoch). Validation F1
    // or AUROC cannot pick the checkpoint here: on confounded data both are
    // maximized by exactly the shortcut the objective is trying to remove,
    // and the cls/disentanglement tug-of-war makes single epochs noisy — the
    // tail average sits in the middle of that oscillation.
    std::size_t avg_tail_epochs = 1;
    AugmentConfig augment;
    std::size_t threads = 1;

    std::size_t effective_batch() const {
        return batch_size ? batch_size : (mode == Mode::baseline ? 4 : 32);
    }
    double effective_lr() const {
        return lr != 0.0 ? lr : (mode == Mode::baseline ? 1e-5 : 5e-5);
    }
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_f1 = 0.0;
    double val_auroc = 0.5;
    double seconds = 0.0;
    bool is_best = false;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_f1 = -1.0;
    std::size_t stopped_epoch = 0;
};

struct TrainResult {
    ModelParams<float> params;  // best-epoch weights
    TrainHistory history;
};

// weight_c = N / (K * N_c); throws if a class is missing from training data
std::vector<double> compute_class_weights(const synthgen::Dataset& dataset,
                                          const synthgen::SplitAssignment& splits);

// Full trainer state, checkpointable mid-run for bitwise-identical resume.
struct TrainerSnapshot {
    ModelParams<float> params;
    AdamState<float> adam;
    ModelParams<float> best_params;
    TrainHistory history;
    std::size_t next_epoch = 0;
    // rolling window of post-ramp epoch weights for the tail average
    std::vector<ModelParams<float>> tail;
};

TrainResult train_baseline(const synthgen::Dataset& dataset,
                           const synthgen::SplitAssignment& splits, const TrainConfig& config,
                           const std::string& snapshot_dir = "",
                           const TrainerSnapshot* resume = nullptr);

TrainResult train_disentangled(const synthgen::Dataset& dataset,
                               const synthgen::SplitAssignment& splits,
                               const TrainConfig& config,
                               const std::string& snapshot_dir = "",
                               const TrainerSnapshot* resume = nullptr);

void save_snapshot(const TrainerSnapshot& snap, const std::string& dir);
TrainerSnapshot load_snapshot(const std::string& dir);

// One record per sample of the requested split tag ("test", "val", ...);
// empty tag means all samples. Hard label is 1 iff score > 0.5 (ties -> 0).
std::vector<fairaudit::PredictionRecord> predict(const ModelParams<float>& params,
                                                 const synthgen::Dataset& dataset,
                                                 const std::string& split_tag);

enum class LatentView { full, med, sensit };

// latent vectors for leakage probes
std::vector<std::vector<double>> extract_latents(const ModelParams<float>& params,
                                                 const synthgen::Dataset& dataset,
                                                 const std::string& split_tag,
                                                 LatentView view);

void write_history_csv(const TrainHistory& history, const std::string& path);
void write_predictions_csv(const std::vector<fairaudit::PredictionRecord>& records,
                           const std::string& path);
std::vector<fairaudit::PredictionRecord> read_predictions_csv(const std::string& path);

}  // namespace dlab::trainer
