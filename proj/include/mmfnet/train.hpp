#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "mmfnet/core.hpp"
#include "mmfnet/model.hpp"
#include "mmfnet/rin.hpp"

namespace mmfnet::train {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    double learning_rate = 5e-3;
    Index batch_size = 64;  // windows per step; every channel of a window is in the batch
    int max_epochs = 50;
    int patience = 5;       // epochs without validation improvement before stopping
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    bool shuffle = true;
    bool rin_std = false;        // divide by the window std inside RIN
    double rin_eps = 1e-8;
    double lr_decay = 1.0;       // step decay factor, applied every lr_decay_every epochs
    int lr_decay_every = 0;      // 0 disables the schedule
    std::int64_t max_steps = 0;  // 0 = no step budget

    void validate() const;
    double learning_rate_at(int epoch) const;
};

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    Index n_windows = 0;
    Index n_points = 0;
};

struct EpochRecord {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double wall_ms = 0.0;
};

struct History {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_mse = 0.0;
    std::int64_t steps = 0;
};

/// Mean squared error over every element and its gradient 2 (pred - target) / n.
std::pair<double, Matrix> mse_loss(const Eigen::Ref<const Matrix>& prediction,
                                   const Eigen::Ref<const Matrix>& target);

struct OptimizerState {
    model::ModelParams first_moment;
    model::ModelParams second_moment;
    std::int64_t steps = 0;
};

OptimizerState make_optimizer_state(const model::ModelParams& params);

/// One SGD or Adam update at learning rate `lr`. Throws NonFiniteGradientError
/// before touching anything if a gradient is NaN or Inf.
void step(model::ModelParams& params, const model::ModelParams& grads, OptimizerState& state,
          const TrainConfig& cfg, double lr);

/// Normalized lookback rows, one per (window, channel), with the RIN state of
/// each window. Row index = window_position * C + channel.
struct Batch {
    Matrix inputs;                      // (B * C, L)
    std::vector<rin::RinState> states;  // (B)
    Index channels = 0;
};

Batch make_batch(std::span<const Window> windows, std::span<const std::size_t> order, bool rin_std,
                 double rin_eps);

/// Denormalized predictions, (B * C, H) in the same row order as the batch.
Matrix denormalize(const Matrix& outputs, const Batch& batch);

/// Forecast of one window in data units, (H, C).
Matrix predict(const Window& window, const model::ModelParams& params, bool rin_std = false,
               double rin_eps = 1e-8);

Metrics evaluate(std::span<const Window> windows, const model::ModelParams& params, bool rin_std = false,
                 double rin_eps = 1e-8);

struct FitResult {
    model::ModelParams best;
    History history;
};

/**
 * Mini-batch training from a fresh initialization drawn from cfg.seed.
 * Each epoch shuffles the training windows, normalizes each window with RIN,
 * and takes the loss after inverse RIN. The parameters with the lowest
 * validation MSE are returned.
 */
FitResult fit(std::span<const Window> train_windows, std::span<const Window> val_windows,
              const model::ModelConfig& model_cfg, const TrainConfig& cfg);

/// Same as fit, continuing from `initial` instead of a fresh initialization.
FitResult fit_from(model::ModelParams initial, std::span<const Window> train_windows,
                   std::span<const Window> val_windows, const TrainConfig& cfg);

/// One JSON object per line: {"epoch", "train_mse", "val_mse", "wall_ms"}.
void write_history(std::ostream& out, const History& history);

}  // namespace mmfnet::train
