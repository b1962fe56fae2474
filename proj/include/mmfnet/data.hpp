#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmfnet/core.hpp"

namespace mmfnet::data {

enum class SplitKind {
    ett_hourly,  // 12/4/4 months of 30 days at 1 h: 8640 / 2880 / 2880 rows
    ett_minute,  // same months at 15 min: 34560 / 11520 / 11520 rows
    ratio,       // floor(T * train) / remainder / floor(T * test)
};

struct SplitPolicy {
    SplitKind kind = SplitKind::ratio;
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    void validate() const;
};

std::string to_string(SplitKind kind);
SplitKind split_kind_from_string(const std::string& name);

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    std::optional<Index> expected_channels;
    std::string sampling;
    SplitPolicy split;
};

/// Known benchmark datasets; `path` is `<data_dir>/<name>.csv`.
std::optional<DatasetSpec> registry_lookup(const std::string& name, const std::filesystem::path& data_dir);

/**
 * Reads a UTF-8 CSV with a header row whose first column is the time label
 * and whose remaining columns are numeric channels. Errors cite 1-based line
 * numbers and the column name.
 */
TimeSeriesFrame parse_csv(std::istream& in, const std::string& source_name,
                          std::optional<Index> expected_channels = std::nullopt);
TimeSeriesFrame load_csv(const DatasetSpec& spec);

/// Row boundaries of the three core splits: train [0, train_end),
/// val [train_end, val_end), test [val_end, test_end).
struct SplitBounds {
    Index train_end = 0;
    Index val_end = 0;
    Index test_end = 0;

    friend bool operator==(const SplitBounds&, const SplitBounds&) = default;
};

SplitBounds split_bounds(Index total_rows, const SplitPolicy& policy);

struct SplitFrames {
    TimeSeriesFrame train;
    TimeSeriesFrame val;
    TimeSeriesFrame test;
    SplitBounds bounds;
};

SplitFrames split(const TimeSeriesFrame& frame, const SplitPolicy& policy);

/// Per-channel mean and (population) std of the training split.
struct StandardizationStats {
    Vector mean;
    Vector std;  // floored at eps
    double eps = 1e-8;

    TimeSeriesFrame apply(const TimeSeriesFrame& frame) const;
    TimeSeriesFrame invert(const TimeSeriesFrame& frame) const;
};

StandardizationStats fit_standardization(const TimeSeriesFrame& train, double eps = 1e-8);

struct StandardizedSplits {
    TimeSeriesFrame train;
    TimeSeriesFrame val;
    TimeSeriesFrame test;
    StandardizationStats stats;
};

/// Statistics come from `train` only and are applied to all three frames.
StandardizedSplits standardize(const TimeSeriesFrame& train, const TimeSeriesFrame& val,
                               const TimeSeriesFrame& test, double eps = 1e-8);

struct SplitWindows {
    std::vector<Window> train;
    std::vector<Window> val;
    std::vector<Window> test;
};

/**
 * Windows whose targets fall inside each core split. Validation and test
 * lookbacks reach up to L rows back into the preceding split; targets never
 * cross a boundary. `train_stride` thins the training windows only; validation
 * and test always use every window.
 */
SplitWindows split_windows(std::shared_ptr<const Matrix> values, const SplitBounds& bounds, Index lookback,
                           Index horizon, Index train_stride = 1);

}  // namespace mmfnet::data
