#include "mmfnet/rin.hpp"

#include <cmath>

namespace mmfnet::rin {

std::pair<Matrix, RinState> rin_forward(const Eigen::Ref<const Matrix>& lookback, bool use_std,
                                        double eps) {
    if (lookback.rows() < 1) {
        throw ShapeError("rin_forward needs at least one row");
    }
    RinState state;
    state.use_std = use_std;
    state.eps = eps;
    state.mean = lookback.colwise().mean().transpose();
    Matrix normalized = lookback.rowwise() - state.mean.transpose();
    state.scale = Vector::Ones(lookback.cols());
    if (use_std) {
        const double n = static_cast<double>(lookback.rows());
        for (Index c = 0; c < lookback.cols(); ++c) {
            const double variance = normalized.col(c).squaredNorm() / n;
            state.scale(c) = std::max(std::sqrt(variance), eps);
            normalized.col(c) /= state.scale(c);
        }
    }
    return {std::move(normalized), std::move(state)};
}

Matrix rin_inverse(const Eigen::Ref<const Matrix>& prediction, const RinState& state) {
    if (prediction.cols() != state.mean.size()) {
        throw ShapeError("rin_inverse: channel count does not match the stored state");
    }
    Matrix out = prediction;
    if (state.use_std) {
        out = out * state.scale.asDiagonal();
    }
    out.rowwise() += state.mean.transpose();
    return out;
}

}  // namespace mmfnet::rin
