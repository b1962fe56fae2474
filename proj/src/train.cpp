#include "mmfnet/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "mmfnet/rin.hpp"

namespace mmfnet::train {

namespace {

constexpr std::size_t kEvalChunk = 256;

Index channels_of(std::span<const Window> windows) {
    const Index c = windows.front().channel_count();
    for (const auto& w : windows) {
        if (w.channel_count() != c) {
            throw ShapeError("windows disagree on channel count");
        }
    }
    return c;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
    if (patience < 0) throw ConfigError("train.patience must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
    if (!(rin_eps > 0.0)) throw ConfigError("train.rin_eps must be > 0");
    if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay must be > 0");
    if (lr_decay_every < 0) throw ConfigError("train.lr_decay_every must be >= 0");
    if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
}

double TrainConfig::learning_rate_at(int epoch) const {
    if (lr_decay_every <= 0) {
        return learning_rate;
    }
    return learning_rate * std::pow(lr_decay, epoch / lr_decay_every);
}

std::pair<double, Matrix> mse_loss(const Eigen::Ref<const Matrix>& prediction,
                                   const Eigen::Ref<const Matrix>& target) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
        throw ShapeError("mse_loss: prediction and target shapes differ");
    }
    if (prediction.size() == 0) {
        throw ShapeError("mse_loss: empty input");
    }
    const double n = static_cast<double>(prediction.size());
    Matrix diff = prediction - target;
    const double loss = diff.squaredNorm() / n;
    diff *= 2.0 / n;
    return {loss, std::move(diff)};
}

OptimizerState make_optimizer_state(const model::ModelParams& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
}

void step(model::ModelParams& params, const model::ModelParams& grads, OptimizerState& state,
          const TrainConfig& cfg, double lr) {
    if (!grads.all_finite()) {
        throw NonFiniteGradientError("non-finite gradient");
    }
    ++state.steps;
    if (cfg.optimizer == OptimizerKind::sgd) {
        model::for_each_tensor(params, grads, [lr](std::span<double> p, std::span<const double> g) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        });
        return;
    }

    const double t = static_cast<double>(state.steps);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    const double b1 = cfg.beta1, b2 = cfg.beta2, eps = cfg.adam_eps;

    // Moments first, then the parameters from the updated moments.
    model::for_each_tensor(state.first_moment, grads, [b1](std::span<double> m, std::span<const double> g) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    });
    model::for_each_tensor(state.second_moment, grads, [b2](std::span<double> v, std::span<const double> g) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    });

    std::vector<std::span<const double>> second;
    model::for_each_tensor(state.second_moment, state.second_moment,
                           [&second](std::span<double> v, std::span<const double>) { second.emplace_back(v); });
    std::size_t k = 0;
    model::for_each_tensor(params, state.first_moment, [&](std::span<double> p, std::span<const double> m) {
        const auto v = second[k++];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    });
}

Batch make_batch(std::span<const Window> windows, std::span<const std::size_t> order, bool rin_std,
                 double rin_eps) {
    Batch batch;
    if (order.empty()) {
        return batch;
    }
    const Window& first = windows[order.front()];
    const Index length = first.lookback_length();
    batch.channels = first.channel_count();
    batch.inputs.resize(static_cast<Index>(order.size()) * batch.channels, length);
    batch.states.reserve(order.size());
    for (std::size_t b = 0; b < order.size(); ++b) {
        const Window& w = windows[order[b]];
        auto [normalized, state] = rin::rin_forward(w.lookback(), rin_std, rin_eps);
        batch.inputs.middleRows(static_cast<Index>(b) * batch.channels, batch.channels) = normalized.transpose();
        batch.states.push_back(std::move(state));
    }
    return batch;
}

Matrix denormalize(const Matrix& outputs, const Batch& batch) {
    Matrix out = outputs;
    for (std::size_t b = 0; b < batch.states.size(); ++b) {
        const auto& st = batch.states[b];
        for (Index c = 0; c < batch.channels; ++c) {
            auto row = out.row(static_cast<Index>(b) * batch.channels + c);
            if (st.use_std) row *= st.scale(c);
            row.array() += st.mean(c);
        }
    }
    return out;
}

Matrix predict(const Window& window, const model::ModelParams& params, bool rin_std, double rin_eps) {
    auto [normalized, state] = rin::rin_forward(window.lookback(), rin_std, rin_eps);
    return rin::rin_inverse(model::forward_multichannel(normalized, params), state);
}

Metrics evaluate(std::span<const Window> windows, const model::ModelParams& params, bool rin_std,
                 double rin_eps) {
    if (windows.empty()) {
        throw EmptySplitError("evaluate: no windows");
    }
    const Index channels = channels_of(windows);
    double squared = 0.0;
    double absolute = 0.0;
    Index points = 0;
    std::vector<std::size_t> order;
    for (std::size_t begin = 0; begin < windows.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(windows.size(), begin + kEvalChunk);
        order.resize(end - begin);
        std::iota(order.begin(), order.end(), begin);
        const Batch batch = make_batch(windows, order, rin_std, rin_eps);
        const Matrix pred = denormalize(model::forward_batch(batch.inputs, params).output, batch);
        for (std::size_t b = 0; b < order.size(); ++b) {
            const auto target = windows[order[b]].target();
            for (Index c = 0; c < channels; ++c) {
                const auto diff = pred.row(static_cast<Index>(b) * channels + c).transpose() - target.col(c);
                squared += diff.squaredNorm();
                absolute += diff.cwiseAbs().sum();
                points += diff.size();
            }
        }
    }
    Metrics m;
    m.mse = squared / static_cast<double>(points);
    m.mae = absolute / static_cast<double>(points);
    m.n_windows = static_cast<Index>(windows.size());
    m.n_points = points;
    return m;
}

FitResult fit_from(model::ModelParams params, std::span<const Window> train_windows,
                   std::span<const Window> val_windows, const TrainConfig& cfg) {
    cfg.validate();
    if (train_windows.empty()) throw EmptySplitError("fit: training split has no windows");
    if (val_windows.empty()) throw EmptySplitError("fit: validation split has no windows");
    const Index channels = channels_of(train_windows);
    const Index horizon = params.config.horizon;
    if (train_windows.front().lookback_length() != params.config.lookback ||
        train_windows.front().horizon() != horizon) {
        throw ShapeError("fit: window shape does not match the model config");
    }

    Rng rng = Rng(cfg.seed).derive(1);
    OptimizerState opt = make_optimizer_state(params);
    FitResult result{params, {}};
    int since_best = 0;

    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);
    Matrix targets;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        if (cfg.shuffle) {
            rng.shuffle(std::span<std::size_t>(order));
        }
        const double lr = cfg.learning_rate_at(epoch);
        double loss_sum = 0.0;
        double weight_sum = 0.0;
        bool budget_hit = false;

        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> ids(order.data() + begin, end - begin);
            const Batch batch = make_batch(train_windows, ids, cfg.rin_std, cfg.rin_eps);
            const model::ForwardTrace trace = model::forward_batch(batch.inputs, params);
            const Matrix pred = denormalize(trace.output, batch);

            targets.resize(pred.rows(), horizon);
            for (std::size_t b = 0; b < ids.size(); ++b) {
                targets.middleRows(static_cast<Index>(b) * channels, channels) =
                    train_windows[ids[b]].target().transpose();
            }
            auto [loss, grad] = mse_loss(pred, targets);
            for (std::size_t b = 0; b < ids.size(); ++b) {
                const auto& st = batch.states[b];
                if (!st.use_std) continue;
                for (Index c = 0; c < channels; ++c) {
                    grad.row(static_cast<Index>(b) * channels + c) *= st.scale(c);
                }
            }
            const model::ModelParams grads = model::backward_batch(trace, grad, params);
            try {
                step(params, grads, opt, cfg, lr);
            } catch (const NonFiniteGradientError&) {
                throw NonFiniteGradientError("non-finite gradient at epoch " + std::to_string(epoch + 1) +
                                             ", batch " + std::to_string(begin / cfg.batch_size + 1));
            }
            loss_sum += loss * static_cast<double>(ids.size());
            weight_sum += static_cast<double>(ids.size());
            ++result.history.steps;
            if (cfg.max_steps > 0 && result.history.steps >= cfg.max_steps) {
                budget_hit = true;
                break;
            }
        }

        EpochRecord record;
        record.epoch = epoch + 1;
        record.train_mse = loss_sum / weight_sum;
        record.val_mse = evaluate(val_windows, params, cfg.rin_std, cfg.rin_eps).mse;
        record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        result.history.epochs.push_back(record);

        if (result.history.best_epoch < 0 || record.val_mse < result.history.best_val_mse) {
            result.history.best_epoch = record.epoch;
            result.history.best_val_mse = record.val_mse;
            result.best = params;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
        if (budget_hit) {
            break;
        }
    }
    return result;
}

FitResult fit(std::span<const Window> train_windows, std::span<const Window> val_windows,
              const model::ModelConfig& model_cfg, const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    return fit_from(model::init_params(model_cfg, rng), train_windows, val_windows, cfg);
}

void write_history(std::ostream& out, const History& history) {
    for (const auto& e : history.epochs) {
        nlohmann::json line = {
            {"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}, {"wall_ms", e.wall_ms}};
        out << line.dump() << '\n';
    }
}

}  // namespace mmfnet::train
