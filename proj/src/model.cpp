#include "mmfnet/model.hpp"

#include <cmath>

#include "mmfnet/transform.hpp"

namespace mmfnet::model {

namespace {

void check_shapes(const ModelParams& params) {
    const auto& cfg = params.config;
    if (params.scales.size() != cfg.ladder.size()) {
        throw ShapeError("parameter set has " + std::to_string(params.scales.size()) +
                         " scales, ladder has " + std::to_string(cfg.ladder.size()));
    }
    for (std::size_t i = 0; i < params.scales.size(); ++i) {
        const auto& sp = params.scales[i];
        if (sp.mask.rows() != cfg.ladder.segment_counts()[i] ||
            sp.mask.cols() != cfg.ladder.segment_lengths()[i] || sp.weight.rows() != cfg.horizon ||
            sp.weight.cols() != cfg.lookback || sp.bias.size() != cfg.horizon) {
            throw ShapeError("scale " + std::to_string(i) + " tensors do not match (L=" +
                             std::to_string(cfg.lookback) + ", H=" + std::to_string(cfg.horizon) + ")");
        }
    }
}

std::span<double> flat(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> flat(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> flat(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> flat(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

ModelConfig make_config(Index lookback, Index horizon, std::span<const Index> segment_lengths,
                        bool mask_enabled) {
    if (horizon < 1) {
        throw ConfigError("horizon must be positive");
    }
    ModelConfig config;
    config.lookback = lookback;
    config.horizon = horizon;
    config.ladder = validate_ladder(lookback, segment_lengths);
    config.mask_enabled = mask_enabled;
    return config;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams out;
    out.config = config;
    out.scales.reserve(scales.size());
    for (const auto& sp : scales) {
        out.scales.push_back({Matrix::Zero(sp.mask.rows(), sp.mask.cols()),
                              Matrix::Zero(sp.weight.rows(), sp.weight.cols()),
                              Vector::Zero(sp.bias.size())});
    }
    return out;
}

bool ModelParams::all_finite() const {
    for (const auto& sp : scales) {
        if (!sp.mask.allFinite() || !sp.weight.allFinite() || !sp.bias.allFinite()) {
            return false;
        }
    }
    return true;
}

void for_each_tensor(ModelParams& a, const ModelParams& b,
                     const std::function<void(std::span<double>, std::span<const double>)>& fn) {
    if (a.scales.size() != b.scales.size()) {
        throw ShapeError("for_each_tensor: scale counts differ");
    }
    for (std::size_t i = 0; i < a.scales.size(); ++i) {
        auto& x = a.scales[i];
        const auto& y = b.scales[i];
        if (x.mask.size() != y.mask.size() || x.weight.size() != y.weight.size() ||
            x.bias.size() != y.bias.size()) {
            throw ShapeError("for_each_tensor: tensor shapes differ");
        }
        if (a.config.mask_enabled) {
            fn(flat(x.mask), flat(y.mask));
        }
        fn(flat(x.weight), flat(y.weight));
        fn(flat(x.bias), flat(y.bias));
    }
}

ModelParams init_params(const ModelConfig& config, Rng& rng, InitScheme scheme) {
    ModelParams params;
    params.config = config;
    switch (scheme) {
        case InitScheme::unit_mask_uniform_head: {
            const double bound = 1.0 / std::sqrt(static_cast<double>(config.lookback));
            for (std::size_t i = 0; i < config.ladder.size(); ++i) {
                ScaleParams sp;
                sp.mask = Matrix::Ones(config.ladder.segment_counts()[i], config.ladder.segment_lengths()[i]);
                sp.weight.resize(config.horizon, config.lookback);
                for (Index k = 0; k < sp.weight.size(); ++k) {
                    sp.weight.data()[k] = rng.uniform(-bound, bound);
                }
                sp.bias.resize(config.horizon);
                for (Index k = 0; k < sp.bias.size(); ++k) {
                    sp.bias[k] = rng.uniform(-bound, bound);
                }
                params.scales.push_back(std::move(sp));
            }
            break;
        }
    }
    return params;
}

std::int64_t param_count(const ModelConfig& config) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < config.ladder.size(); ++i) {
        if (config.mask_enabled) {
            total += config.ladder.segment_counts()[i] * config.ladder.segment_lengths()[i];
        }
        total += config.horizon * config.lookback + config.horizon;
    }
    return total;
}

std::int64_t param_count(const ModelParams& params) {
    check_shapes(params);
    return param_count(params.config);
}

Matrix ForwardTrace::scale_prediction(std::size_t scale) const {
    Matrix out = frequency_preds.at(scale);
    transform::idct_rows_inplace(out);
    return out;
}

Matrix ForwardTrace::spectrum_grid(const ModelConfig& config, std::size_t scale, Index sample) const {
    const Index n = config.ladder.segment_counts().at(scale);
    const Index s = config.ladder.segment_lengths().at(scale);
    return Eigen::Map<const Matrix>(spectra.at(scale).row(sample).data(), n, s);
}

ForwardTrace forward_batch(const Eigen::Ref<const Matrix>& inputs, const ModelParams& params) {
    check_shapes(params);
    const auto& cfg = params.config;
    if (inputs.cols() != cfg.lookback) {
        throw ShapeError("forward: input length " + std::to_string(inputs.cols()) +
                         " does not match L=" + std::to_string(cfg.lookback));
    }
    const Index batch = inputs.rows();
    const Index length = cfg.lookback;

    ForwardTrace trace;
    trace.input = inputs;
    Matrix total_freq = Matrix::Zero(batch, cfg.horizon);

    for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
        const Index s = cfg.ladder.segment_lengths()[i];
        const auto& sp = params.scales[i];

        // Row-major (B, L) storage is the same memory as (B * n, s) segments.
        Matrix spectra(batch, length);
        Eigen::Map<const Matrix> segments(trace.input.data(), batch * (length / s), s);
        Eigen::Map<Matrix> segment_spectra(spectra.data(), batch * (length / s), s);
        segment_spectra.noalias() = segments * transform::dct_basis(s).transpose();

        Matrix features;
        if (cfg.mask_enabled) {
            Eigen::Map<const RowVector> mask_flat(sp.mask.data(), length);
            features = spectra.array().rowwise() * mask_flat.array();
        } else {
            features = spectra;
        }

        Matrix freq(batch, cfg.horizon);
        freq.noalias() = features * sp.weight.transpose();
        freq.rowwise() += sp.bias.transpose();
        total_freq += freq;

        trace.spectra.push_back(std::move(spectra));
        trace.features.push_back(std::move(features));
        trace.frequency_preds.push_back(std::move(freq));
    }

    trace.output.resize(batch, cfg.horizon);
    trace.output.noalias() = total_freq * transform::dct_basis(cfg.horizon);
    return trace;
}

ModelParams backward_batch(const ForwardTrace& trace, const Eigen::Ref<const Matrix>& grad_output,
                           const ModelParams& params) {
    check_shapes(params);
    const auto& cfg = params.config;
    if (grad_output.rows() != trace.batch_size() || grad_output.cols() != cfg.horizon ||
        trace.features.size() != cfg.ladder.size()) {
        throw ShapeError("backward: gradient or trace does not match the forward pass");
    }
    ModelParams grads = params.zeros_like();

    // output = F G  =>  dF = dOut G^T, shared by every scale.
    Matrix grad_freq(grad_output.rows(), cfg.horizon);
    grad_freq.noalias() = grad_output * transform::dct_basis(cfg.horizon).transpose();
    const RowVector grad_bias = grad_freq.colwise().sum();

    for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
        auto& g = grads.scales[i];
        g.weight.noalias() = grad_freq.transpose() * trace.features[i];
        g.bias = grad_bias.transpose();
        if (cfg.mask_enabled) {
            Matrix grad_features(grad_freq.rows(), cfg.lookback);
            grad_features.noalias() = grad_freq * params.scales[i].weight;
            const RowVector grad_mask =
                (grad_features.array() * trace.spectra[i].array()).colwise().sum();
            Eigen::Map<RowVector>(g.mask.data(), cfg.lookback) = grad_mask;
        }
    }
    return grads;
}

std::pair<Vector, ForwardTrace> forward(const Vector& lookback, const ModelParams& params) {
    ForwardTrace trace = forward_batch(lookback.transpose(), params);
    Vector out = trace.output.row(0).transpose();
    return {std::move(out), std::move(trace)};
}

ModelParams backward(const ForwardTrace& trace, const Vector& grad_output, const ModelParams& params) {
    return backward_batch(trace, grad_output.transpose(), params);
}

Matrix forward_multichannel(const Eigen::Ref<const Matrix>& window, const ModelParams& params) {
    const Matrix rows = window.transpose();
    return forward_batch(rows, params).output.transpose();
}

}  // namespace mmfnet::model
