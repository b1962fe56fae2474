#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmfnet/errors.hpp"

namespace mmfnet {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/**
 * A multivariate series: T_total rows (time) by C columns (channels).
 *
 * Channel order is the column order of the source file and is preserved by
 * every downstream operation.
 */
struct TimeSeriesFrame {
    std::vector<std::string> channels;
    Matrix values;                        // (T_total, C)
    std::vector<std::string> timestamps;  // empty, or one opaque label per row

    Index length() const noexcept { return values.rows(); }
    Index channel_count() const noexcept { return values.cols(); }

    /// Throws DataError when the invariants (C >= 1, T >= 1, finite cells,
    /// consistent label counts) do not hold.
    void validate() const;

    /// Rows [begin, end) as a new frame.
    TimeSeriesFrame slice(Index begin, Index end) const;
};

/**
 * A (lookback, target) pair viewed over shared storage. Lookback rows are
 * [start, start + L) and target rows [start + L, start + L + H).
 */
class Window {
public:
    Window(std::shared_ptr<const Matrix> source, Index start, Index lookback, Index horizon);

    /// Standalone window owning its own (L + H, C) storage.
    static Window from_parts(const Matrix& lookback, const Matrix& target);

    auto lookback() const { return source_->middleRows(start_, lookback_); }
    auto target() const { return source_->middleRows(start_ + lookback_, horizon_); }

    Index start() const noexcept { return start_; }
    Index lookback_length() const noexcept { return lookback_; }
    Index horizon() const noexcept { return horizon_; }
    Index channel_count() const noexcept { return source_->cols(); }

private:
    std::shared_ptr<const Matrix> source_;
    Index start_;
    Index lookback_;
    Index horizon_;
};

/// Segment lengths fine -> coarse, each dividing the lookback length.
class ScaleLadder {
public:
    ScaleLadder() = default;

    const std::vector<Index>& segment_lengths() const noexcept { return segment_lengths_; }
    const std::vector<Index>& segment_counts() const noexcept { return segment_counts_; }
    Index lookback() const noexcept { return lookback_; }
    std::size_t size() const noexcept { return segment_lengths_.size(); }

    friend ScaleLadder validate_ladder(Index lookback, std::span<const Index> segment_lengths);
    friend bool operator==(const ScaleLadder&, const ScaleLadder&) = default;

private:
    Index lookback_ = 0;
    std::vector<Index> segment_lengths_;
    std::vector<Index> segment_counts_;
};

/// Checks that every segment length divides `lookback` and that the ladder is
/// non-empty and strictly increasing; annotates the per-scale segment counts.
ScaleLadder validate_ladder(Index lookback, std::span<const Index> segment_lengths);

inline ScaleLadder validate_ladder(Index lookback, std::initializer_list<Index> segment_lengths) {
    return validate_ladder(lookback, std::span<const Index>(segment_lengths.begin(), segment_lengths.size()));
}

/// Number of windows make_windows produces for a series of `total` rows.
Index window_count(Index total, Index lookback, Index horizon, Index stride);

/// Sliding windows over the whole frame; window i starts at row i * stride.
std::vector<Window> make_windows(const TimeSeriesFrame& frame, Index lookback, Index horizon,
                                 Index stride = 1);

/// Sliding windows over rows [begin, end) of shared storage.
std::vector<Window> make_windows(std::shared_ptr<const Matrix> values, Index begin, Index end,
                                 Index lookback, Index horizon, Index stride = 1);

/**
 * Deterministic random stream.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. Conversions are done here rather than with <random>
 * distributions, which are implementation-defined:
 *   uniform()  = (next_u64() >> 11) * 2^-53                  in [0, 1)
 *   below(n)   = rejection sampling on next_u64()            in [0, n)
 *   normal()   = Box-Muller on two uniforms (cosine branch)
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();
    double uniform();
    double uniform(double low, double high);
    double normal();
    std::uint64_t below(std::uint64_t n);

    /// Independent stream for parallel work, seeded from (seed, stream).
    Rng derive(std::uint64_t stream) const;

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace mmfnet
