#include "mmfnet/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

namespace mmfnet::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string location(const std::string& source, std::size_t line, const std::string& column) {
    return source + ":" + std::to_string(line) + " column '" + column + "'";
}

}  // namespace

void SplitPolicy::validate() const {
    if (kind != SplitKind::ratio) {
        return;
    }
    if (train <= 0.0 || val < 0.0 || test <= 0.0) {
        throw ConfigError("split ratios must be positive (val may be zero)");
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split ratios sum to " + std::to_string(train + val + test) + ", expected 1");
    }
}

std::string to_string(SplitKind kind) {
    switch (kind) {
        case SplitKind::ett_hourly: return "ett_hourly";
        case SplitKind::ett_minute: return "ett_minute";
        case SplitKind::ratio: return "ratio";
    }
    return "ratio";
}

SplitKind split_kind_from_string(const std::string& name) {
    if (name == "ett_hourly") return SplitKind::ett_hourly;
    if (name == "ett_minute") return SplitKind::ett_minute;
    if (name == "ratio") return SplitKind::ratio;
    throw ConfigError("unknown split policy '" + name + "' (expected ett_hourly, ett_minute or ratio)");
}

std::optional<DatasetSpec> registry_lookup(const std::string& name, const std::filesystem::path& data_dir) {
    struct Entry {
        Index channels;
        const char* sampling;
        SplitKind split;
    };
    static const std::map<std::string, Entry> known = {
        {"ETTh1", {7, "1 hour", SplitKind::ett_hourly}},
        {"ETTh2", {7, "1 hour", SplitKind::ett_hourly}},
        {"ETTm1", {7, "15 min", SplitKind::ett_minute}},
        {"ETTm2", {7, "15 min", SplitKind::ett_minute}},
        {"weather", {21, "10 min", SplitKind::ratio}},
        {"electricity", {321, "1 hour", SplitKind::ratio}},
        {"traffic", {862, "1 hour", SplitKind::ratio}},
    };
    const auto it = known.find(name);
    if (it == known.end()) {
        return std::nullopt;
    }
    DatasetSpec spec;
    spec.name = name;
    spec.path = data_dir / (name + ".csv");
    spec.expected_channels = it->second.channels;
    spec.sampling = it->second.sampling;
    spec.split.kind = it->second.split;
    return spec;
}

TimeSeriesFrame parse_csv(std::istream& in, const std::string& source_name,
                          std::optional<Index> expected_channels) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source_name + ":1: missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    TimeSeriesFrame frame;
    const auto header = split_fields(trim(line));
    if (header.size() < 2) {
        throw ParseError(source_name + ":1: header needs a time column and at least one channel");
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
        frame.channels.emplace_back(trim(header[i]));
    }
    const auto channels = static_cast<Index>(frame.channels.size());
    if (expected_channels && *expected_channels != channels) {
        throw ChannelMismatchError(source_name + ": expected " + std::to_string(*expected_channels) +
                                   " channels, header has " + std::to_string(channels));
    }

    std::vector<double> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto fields = split_fields(body);
        if (fields.size() != header.size()) {
            throw ParseError(source_name + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        frame.timestamps.emplace_back(trim(fields[0]));
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const auto cell = trim(fields[i]);
            const auto& column = frame.channels[i - 1];
            if (cell.empty()) {
                throw MissingValueError("missing value at " + location(source_name, line_no, column));
            }
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw ParseError("cannot parse '" + std::string(cell) + "' at " +
                                 location(source_name, line_no, column));
            }
            if (!std::isfinite(v)) {
                throw MissingValueError("non-finite value at " + location(source_name, line_no, column));
            }
            cells.push_back(v);
        }
    }
    const auto rows = static_cast<Index>(frame.timestamps.size());
    if (rows == 0) {
        throw InsufficientDataError(source_name + ": no data rows");
    }
    frame.values = Eigen::Map<const Matrix>(cells.data(), rows, channels);
    frame.validate();
    return frame;
}

TimeSeriesFrame load_csv(const DatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) {
        throw DataError("cannot open dataset file " + spec.path.string());
    }
    return parse_csv(in, spec.path.string(), spec.expected_channels);
}

SplitBounds split_bounds(Index total_rows, const SplitPolicy& policy) {
    policy.validate();
    SplitBounds b;
    switch (policy.kind) {
        case SplitKind::ett_hourly:
        case SplitKind::ett_minute: {
            const Index per_hour = policy.kind == SplitKind::ett_hourly ? 1 : 4;
            const Index month = 30 * 24 * per_hour;
            b = {12 * month, 16 * month, 20 * month};
            break;
        }
        case SplitKind::ratio: {
            const auto train = static_cast<Index>(std::floor(static_cast<double>(total_rows) * policy.train));
            const auto test = static_cast<Index>(std::floor(static_cast<double>(total_rows) * policy.test));
            b = {train, total_rows - test, total_rows};
            break;
        }
    }
    if (b.test_end > total_rows || b.train_end < 1 || b.val_end > b.test_end) {
        throw InsufficientDataError("split policy " + to_string(policy.kind) + " needs " +
                                    std::to_string(b.test_end) + " rows, series has " +
                                    std::to_string(total_rows));
    }
    return b;
}

SplitFrames split(const TimeSeriesFrame& frame, const SplitPolicy& policy) {
    const SplitBounds b = split_bounds(frame.length(), policy);
    return {frame.slice(0, b.train_end), frame.slice(b.train_end, b.val_end), frame.slice(b.val_end, b.test_end), b};
}

TimeSeriesFrame StandardizationStats::apply(const TimeSeriesFrame& frame) const {
    if (frame.channel_count() != mean.size()) {
        throw ShapeError("standardization: channel count differs from the fitted statistics");
    }
    TimeSeriesFrame out = frame;
    out.values = (frame.values.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
    return out;
}

TimeSeriesFrame StandardizationStats::invert(const TimeSeriesFrame& frame) const {
    if (frame.channel_count() != mean.size()) {
        throw ShapeError("standardization: channel count differs from the fitted statistics");
    }
    TimeSeriesFrame out = frame;
    out.values = (frame.values.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
    return out;
}

StandardizationStats fit_standardization(const TimeSeriesFrame& train, double eps) {
    if (train.length() < 1) {
        throw EmptySplitError("standardization needs a non-empty training split");
    }
    StandardizationStats stats;
    stats.eps = eps;
    stats.mean = train.values.colwise().mean().transpose();
    stats.std.resize(train.channel_count());
    const double n = static_cast<double>(train.length());
    for (Index c = 0; c < train.channel_count(); ++c) {
        const double var = (train.values.col(c).array() - stats.mean(c)).square().sum() / n;
        stats.std(c) = std::max(std::sqrt(var), eps);
    }
    return stats;
}

StandardizedSplits standardize(const TimeSeriesFrame& train, const TimeSeriesFrame& val,
                               const TimeSeriesFrame& test, double eps) {
    StandardizationStats stats = fit_standardization(train, eps);
    return {stats.apply(train), stats.apply(val), stats.apply(test), std::move(stats)};
}

SplitWindows split_windows(std::shared_ptr<const Matrix> values, const SplitBounds& bounds, Index lookback,
                           Index horizon, Index train_stride) {
    if (bounds.train_end < lookback) {
        throw InsufficientDataError("training split shorter than the lookback window");
    }
    SplitWindows out;
    out.train = make_windows(values, 0, bounds.train_end, lookback, horizon, train_stride);
    if (bounds.val_end > bounds.train_end) {
        out.val = make_windows(values, bounds.train_end - lookback, bounds.val_end, lookback, horizon);
    }
    out.test = make_windows(values, bounds.val_end - lookback, bounds.test_end, lookback, horizon);
    return out;
}

}  // namespace mmfnet::data
