#include "mmfnet/core.hpp"

#include <cmath>
#include <numbers>

namespace mmfnet {

void TimeSeriesFrame::validate() const {
    if (values.cols() < 1 || values.rows() < 1) {
        throw DataError("frame must have at least one row and one channel");
    }
    if (static_cast<Index>(channels.size()) != values.cols()) {
        throw DataError("frame has " + std::to_string(channels.size()) + " channel names for " +
                        std::to_string(values.cols()) + " columns");
    }
    if (!timestamps.empty() && static_cast<Index>(timestamps.size()) != values.rows()) {
        throw DataError("frame has " + std::to_string(timestamps.size()) + " timestamps for " +
                        std::to_string(values.rows()) + " rows");
    }
    if (!values.allFinite()) {
        throw DataError("frame contains non-finite values");
    }
}

TimeSeriesFrame TimeSeriesFrame::slice(Index begin, Index end) const {
    if (begin < 0 || end > length() || begin > end) {
        throw ShapeError("frame slice out of range");
    }
    TimeSeriesFrame out;
    out.channels = channels;
    out.values = values.middleRows(begin, end - begin);
    if (!timestamps.empty()) {
        out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    }
    return out;
}

Window::Window(std::shared_ptr<const Matrix> source, Index start, Index lookback, Index horizon)
    : source_(std::move(source)), start_(start), lookback_(lookback), horizon_(horizon) {
    if (!source_ || lookback_ < 1 || horizon_ < 1 || start_ < 0 ||
        start_ + lookback_ + horizon_ > source_->rows()) {
        throw ShapeError("window does not fit its source");
    }
}

Window Window::from_parts(const Matrix& lookback, const Matrix& target) {
    if (lookback.cols() != target.cols()) {
        throw ShapeError("lookback and target channel counts differ");
    }
    auto storage = std::make_shared<Matrix>(lookback.rows() + target.rows(), lookback.cols());
    storage->topRows(lookback.rows()) = lookback;
    storage->bottomRows(target.rows()) = target;
    return Window(std::move(storage), 0, lookback.rows(), target.rows());
}

ScaleLadder validate_ladder(Index lookback, std::span<const Index> segment_lengths) {
    if (lookback < 1) {
        throw ConfigError("lookback length must be positive");
    }
    if (segment_lengths.empty()) {
        throw EmptyLadderError();
    }
    ScaleLadder ladder;
    ladder.lookback_ = lookback;
    Index previous = 0;
    for (Index s : segment_lengths) {
        if (s < 1) {
            throw ConfigError("segment lengths must be positive, got " + std::to_string(s));
        }
        if (s <= previous) {
            throw ConfigError("segment lengths must be strictly increasing");
        }
        if (lookback % s != 0) {
            throw DivisibilityError(static_cast<long>(s), static_cast<long>(lookback));
        }
        ladder.segment_lengths_.push_back(s);
        ladder.segment_counts_.push_back(lookback / s);
        previous = s;
    }
    return ladder;
}

Index window_count(Index total, Index lookback, Index horizon, Index stride) {
    if (stride < 1) {
        throw ConfigError("window stride must be >= 1");
    }
    if (total < lookback + horizon) {
        return 0;
    }
    return (total - lookback - horizon) / stride + 1;
}

std::vector<Window> make_windows(std::shared_ptr<const Matrix> values, Index begin, Index end,
                                 Index lookback, Index horizon, Index stride) {
    if (lookback < 1 || horizon < 1) {
        throw ConfigError("lookback and horizon must be positive");
    }
    if (begin < 0 || end > values->rows() || begin > end) {
        throw ShapeError("window range out of bounds");
    }
    const Index total = end - begin;
    if (total < lookback + horizon) {
        throw InsufficientDataError("need at least " + std::to_string(lookback + horizon) +
                                    " rows for L=" + std::to_string(lookback) +
                                    ", H=" + std::to_string(horizon) + ", have " +
                                    std::to_string(total));
    }
    const Index count = window_count(total, lookback, horizon, stride);
    std::vector<Window> windows;
    windows.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
        windows.emplace_back(values, begin + i * stride, lookback, horizon);
    }
    return windows;
}

std::vector<Window> make_windows(const TimeSeriesFrame& frame, Index lookback, Index horizon,
                                 Index stride) {
    auto values = std::make_shared<const Matrix>(frame.values);
    return make_windows(std::move(values), 0, frame.length(), lookback, horizon, stride);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double low, double high) { return low + (high - low) * uniform(); }

double Rng::normal() {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::below(0)");
    }
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

Rng Rng::derive(std::uint64_t stream) const {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
}

}  // namespace mmfnet
