#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mmfnet/core.hpp"

namespace mmfnet::model {

/// Shape of a model: lookback L, horizon H, the scale ladder and the mask switch.
struct ModelConfig {
    Index lookback = 0;
    Index horizon = 0;
    ScaleLadder ladder;
    bool mask_enabled = true;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Validates the ladder against L and H >= 1.
ModelConfig make_config(Index lookback, Index horizon, std::span<const Index> segment_lengths,
                        bool mask_enabled = true);
inline ModelConfig make_config(Index lookback, Index horizon, std::initializer_list<Index> segment_lengths,
                               bool mask_enabled = true) {
    return make_config(lookback, horizon,
                       std::span<const Index>(segment_lengths.begin(), segment_lengths.size()),
                       mask_enabled);
}

/// Trainable tensors of one scale.
struct ScaleParams {
    Matrix mask;    // (n_segments, segment_length), multiplies the segment spectra
    Matrix weight;  // (H, L), maps the flattened masked spectrum to H coefficients
    Vector bias;    // (H)
};

struct ModelParams {
    ModelConfig config;
    std::vector<ScaleParams> scales;

    /// Same shapes, every entry zero. Used for gradients and optimizer moments.
    ModelParams zeros_like() const;
    bool all_finite() const;
};

/// Visits every (tensor, matching tensor) pair of two same-shaped parameter
/// sets. Masks are skipped when the config has them disabled.
void for_each_tensor(ModelParams& a, const ModelParams& b,
                     const std::function<void(std::span<double>, std::span<const double>)>& fn);

enum class InitScheme {
    /// Masks all ones; weights and biases uniform in [-1/sqrt(L), 1/sqrt(L)].
    unit_mask_uniform_head,
};

ModelParams init_params(const ModelConfig& config, Rng& rng,
                        InitScheme scheme = InitScheme::unit_mask_uniform_head);

/// Exact number of trainable scalars; masks are not counted when disabled.
std::int64_t param_count(const ModelParams& params);
std::int64_t param_count(const ModelConfig& config);

/**
 * Intermediates of a batched forward pass; one row per (window, channel)
 * sample. Kept so that backward is exact and masks can be inspected.
 */
struct ForwardTrace {
    Matrix input;                         // (B, L) normalized lookback rows
    std::vector<Matrix> spectra;          // per scale (B, L): segment DCTs, flattened
    std::vector<Matrix> features;         // per scale (B, L): masked spectra, flattened
    std::vector<Matrix> frequency_preds;  // per scale (B, H): W v + b
    Matrix output;                        // (B, H)

    Index batch_size() const noexcept { return input.rows(); }

    /// Time-domain contribution of one scale, idct of its frequency prediction.
    Matrix scale_prediction(std::size_t scale) const;

    /// Segment spectra of one sample at one scale, as an (n, s) grid.
    Matrix spectrum_grid(const ModelConfig& config, std::size_t scale, Index sample) const;
};

/**
 * Batched forward pass over independent rows of `inputs` (B, L):
 * for each scale, fragment -> DCT per segment -> mask -> flatten -> W v + b;
 * the per-scale frequency predictions are summed and inverted with one
 * length-H iDCT (the inverse is linear, so this equals the sum of per-scale
 * inverses).
 */
ForwardTrace forward_batch(const Eigen::Ref<const Matrix>& inputs, const ModelParams& params);

/// Gradients w.r.t. every parameter given dLoss/dOutput (B, H). `params`
/// must be the set used to produce `trace`.
ModelParams backward_batch(const ForwardTrace& trace, const Eigen::Ref<const Matrix>& grad_output,
                           const ModelParams& params);

/// Single-channel forward pass on a normalized lookback vector.
std::pair<Vector, ForwardTrace> forward(const Vector& lookback, const ModelParams& params);

ModelParams backward(const ForwardTrace& trace, const Vector& grad_output, const ModelParams& params);

/// Channel-independent forward over a (L, C) window; same parameters for every
/// channel. Returns (H, C).
Matrix forward_multichannel(const Eigen::Ref<const Matrix>& window, const ModelParams& params);

}  // namespace mmfnet::model
