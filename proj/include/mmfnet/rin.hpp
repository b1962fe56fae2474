#pragma once

#include <utility>

#include "mmfnet/core.hpp"

namespace mmfnet::rin {

/// Per-channel statistics of one lookback window, needed to undo normalization.
struct RinState {
    Vector mean;   // (C)
    Vector scale;  // (C) standard deviation floored at eps; all ones unless use_std
    bool use_std = false;
    double eps = 1e-8;
};

/// Subtracts each column's mean (and divides by max(std, eps) when use_std).
std::pair<Matrix, RinState> rin_forward(const Eigen::Ref<const Matrix>& lookback, bool use_std = false,
                                        double eps = 1e-8);

/// Multiplies by the stored scale (if enabled) and adds the stored mean back.
Matrix rin_inverse(const Eigen::Ref<const Matrix>& prediction, const RinState& state);

}  // namespace mmfnet::rin
