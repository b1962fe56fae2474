#include "mmfnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mmfnet/checkpoint.hpp"

namespace mmfnet::harness {

using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string ladder_label(const std::vector<Index>& ladder) {
    std::string out;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(ladder[i]);
    }
    return out;
}

std::filesystem::path record_path(const RunOptions& options, const std::string& dataset, const std::string& fp) {
    return options.out_dir / "results" / dataset / (fp + ".jsonl");
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open dataset file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return fnv1a_hex(buffer.str());
}

json cell_identity(const ExperimentConfig& cfg, Index horizon, std::uint64_t seed, const std::string& dataset_digest) {
    json j = to_json(cfg);
    j.erase("horizons");
    j.erase("repeats");
    j["dataset"].erase("path");
    j["dataset"]["digest"] = dataset_digest;
    j["horizon"] = horizon;
    j["seed"] = seed;
    j["code_version"] = kCodeVersion;
    return j;
}

std::string fingerprint(const json& identity) { return fnv1a_hex(identity.dump()); }

json to_json(const ResultRecord& r) {
    return {{"fingerprint", r.fingerprint},
            {"dataset", r.dataset},
            {"horizon", r.horizon},
            {"seed", r.seed},
            {"ladder", r.ladder},
            {"mask_enabled", r.mask_enabled},
            {"test", {{"mse", r.test.mse}, {"mae", r.test.mae}, {"n_windows", r.test.n_windows},
                      {"n_points", r.test.n_points}}},
            {"best_val_mse", r.best_val_mse},
            {"best_epoch", r.best_epoch},
            {"epochs_run", r.epochs_run},
            {"param_count", r.param_count},
            {"wall_ms", r.wall_ms},
            {"code_version", r.code_version},
            {"protocol", {{"standardization", "train-split z-score"},
                          {"rin", r.identity.value("rin_std", false) ? "mean+std" : "mean"},
                          {"transform", "orthonormal DCT-II"}}},
            {"config", r.identity}};
}

ResultRecord record_from_json(const json& j) {
    ResultRecord r;
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.horizon = j.at("horizon").get<Index>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ladder = j.at("ladder").get<std::vector<Index>>();
    r.mask_enabled = j.at("mask_enabled").get<bool>();
    const auto& t = j.at("test");
    r.test.mse = t.at("mse").get<double>();
    r.test.mae = t.at("mae").get<double>();
    r.test.n_windows = t.at("n_windows").get<Index>();
    r.test.n_points = t.at("n_points").get<Index>();
    r.best_val_mse = j.at("best_val_mse").get<double>();
    r.best_epoch = j.at("best_epoch").get<int>();
    r.epochs_run = j.at("epochs_run").get<int>();
    r.param_count = j.at("param_count").get<std::int64_t>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.code_version = j.at("code_version").get<std::string>();
    r.identity = j.at("config");
    return r;
}

PreparedData prepare_data(const data::DatasetSpec& spec) {
    const TimeSeriesFrame frame = data::load_csv(spec);
    const data::SplitFrames splits = data::split(frame, spec.split);
    PreparedData out;
    out.stats = data::fit_standardization(splits.train);
    out.bounds = splits.bounds;
    out.values = std::make_shared<const Matrix>(out.stats.apply(frame).values);
    out.digest = file_digest(spec.path);
    out.channels = frame.channel_count();
    out.rows = frame.length();
    return out;
}

ResultRecord run_cell(const ExperimentConfig& cfg, const PreparedData& prepared, Index horizon, std::uint64_t seed,
                      const RunOptions& options, model::ModelParams* trained) {
    ResultRecord record;
    record.identity = cell_identity(cfg, horizon, seed, prepared.digest);
    record.fingerprint = fingerprint(record.identity);
    const auto path = record_path(options, cfg.dataset.name, record.fingerprint);

    if (options.reuse_existing && trained == nullptr && std::filesystem::exists(path)) {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        ResultRecord cached = record_from_json(json::parse(line));
        if (cached.fingerprint == record.fingerprint) {
            if (options.log) options.log("reused " + record.fingerprint);
            return cached;
        }
    }

    const auto started = std::chrono::steady_clock::now();
    const model::ModelConfig model_cfg = cfg.model_config(horizon);
    const data::SplitWindows windows =
        data::split_windows(prepared.values, prepared.bounds, cfg.L, horizon, cfg.stride);
    train::TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.rin_std = cfg.rin_std;
    const train::FitResult fitted = train::fit(windows.train, windows.val, model_cfg, tc);

    record.dataset = cfg.dataset.name;
    record.horizon = horizon;
    record.seed = seed;
    record.ladder = cfg.ladder;
    record.mask_enabled = cfg.mask_enabled;
    record.test = train::evaluate(windows.test, fitted.best, tc.rin_std, tc.rin_eps);
    record.best_val_mse = fitted.history.best_val_mse;
    record.best_epoch = fitted.history.best_epoch;
    record.epochs_run = static_cast<int>(fitted.history.epochs.size());
    record.param_count = model::param_count(fitted.best);
    record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

    if (options.persist) {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path) << to_json(record).dump() << '\n';
        std::ofstream history(path.parent_path() / (record.fingerprint + ".history.jsonl"));
        train::write_history(history, fitted.history);
    }
    if (options.save_checkpoints) {
        model::save_checkpoint(options.out_dir / "checkpoints" / (record.fingerprint + ".ckpt"), fitted.best);
    }
    if (options.log) {
        options.log(cfg.dataset.name + " H=" + std::to_string(horizon) + " ladder=[" + ladder_label(cfg.ladder) +
                    "] mask=" + (cfg.mask_enabled ? "on" : "off") + " seed=" + std::to_string(seed) +
                    " test_mse=" + format_double(record.test.mse) + " epochs=" + std::to_string(record.epochs_run) +
                    " (" + std::to_string(static_cast<long>(record.wall_ms / 1000.0)) + " s)");
    }
    if (trained) {
        *trained = fitted.best;
    }
    return record;
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const PreparedData& prepared,
                                         const RunOptions& options) {
    cfg.validate();
    struct Cell {
        Index horizon;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (Index h : cfg.horizons) {
        for (auto s : cfg.seeds()) cells.push_back({h, s});
    }
    std::vector<ResultRecord> records(cells.size());

    std::mutex log_mutex;
    RunOptions local = options;
    if (options.log) {
        local.log = [&](const std::string& msg) {
            std::lock_guard lock(log_mutex);
            options.log(msg);
        };
    }
    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(cells.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            records[i] = run_cell(cfg, prepared, cells[i].horizon, cells[i].seed, local);
        }
        return records;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cells.size(); i = next++) {
                try {
                    records[i] = run_cell(cfg, prepared, cells[i].horizon, cells[i].seed, local);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return records;
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    return run_experiment(cfg, prepare_data(cfg.dataset), options);
}

std::map<Index, double> mean_mse_by_horizon(const std::vector<ResultRecord>& records) {
    std::map<Index, std::pair<double, int>> acc;
    for (const auto& r : records) {
        auto& [sum, n] = acc[r.horizon];
        sum += r.test.mse;
        ++n;
    }
    std::map<Index, double> out;
    for (const auto& [h, v] : acc) out[h] = v.first / v.second;
    return out;
}

AblationOptions default_ablation(const ExperimentConfig& base) {
    AblationOptions opts;
    opts.variants.push_back({"SFT", {base.L}});
    for (Index n_seg : {24, 120, 360}) {
        if (n_seg < base.L && base.L % n_seg == 0) {
            opts.variants.push_back({"MFT(N_seg=" + std::to_string(n_seg) + ")", {n_seg}});
        }
    }
    opts.variants.push_back({"MMFT", base.ladder});
    for (const auto& v : opts.variants) opts.mask_off_variants.push_back(v.name);
    return opts;
}

const AblationRow* AblationTable::find(const std::string& variant, bool mask_enabled) const {
    for (const auto& row : rows) {
        if (row.variant == variant && row.mask_enabled == mask_enabled) return &row;
    }
    return nullptr;
}

AblationTable ablation_suite(const ExperimentConfig& base, const AblationOptions& ablation, const RunOptions& options) {
    base.validate();
    const PreparedData prepared = prepare_data(base.dataset);
    AblationTable table;
    table.dataset = base.dataset.name;
    table.horizons = base.horizons;

    for (const auto& variant : ablation.variants) {
        const bool also_off = std::find(ablation.mask_off_variants.begin(), ablation.mask_off_variants.end(),
                                        variant.name) != ablation.mask_off_variants.end();
        for (bool mask : {true, false}) {
            if (!mask && !also_off) continue;
            ExperimentConfig cfg = base;
            if (!variant.ladder.empty()) cfg.ladder = variant.ladder;
            cfg.mask_enabled = mask;
            const auto records = run_experiment(cfg, prepared, options);
            AblationRow row;
            row.variant = variant.name;
            row.mask_enabled = mask;
            row.ladder = cfg.ladder;
            row.mse = mean_mse_by_horizon(records);
            for (const auto& r : records) row.per_seed_mse[r.horizon].push_back(r.test.mse);
            table.rows.push_back(std::move(row));
        }
    }

    const AblationRow* sft = table.find("SFT", true);
    const AblationRow* mmft = table.find("MMFT", true);
    const AblationRow* mmft_off = table.find("MMFT", false);
    for (Index h : table.horizons) {
        if (sft && mmft) table.improvement_over_sft[h] = sft->mse.at(h) - mmft->mse.at(h);
        if (mmft && mmft_off) table.mask_improvement[h] = mmft_off->mse.at(h) - mmft->mse.at(h);
    }
    return table;
}

void write_ablation_csv(std::ostream& out, const AblationTable& table) {
    out << "variant,mask,ladder";
    for (Index h : table.horizons) out << ",H" << h;
    out << '\n';
    for (const auto& row : table.rows) {
        out << '"' << row.variant << '"' << ',' << (row.mask_enabled ? "on" : "off") << ','
            << ladder_label(row.ladder);
        for (Index h : table.horizons) out << ',' << format_double(row.mse.at(h));
        out << '\n';
    }
    if (!table.improvement_over_sft.empty()) {
        out << "\"Imp.(MMFT over SFT)\",on,";
        for (Index h : table.horizons) out << ',' << format_double(table.improvement_over_sft.at(h));
        out << '\n';
    }
    if (!table.mask_improvement.empty()) {
        out << "\"Imp.(mask)\",,";
        for (Index h : table.horizons) out << ',' << format_double(table.mask_improvement.at(h));
        out << '\n';
    }
}

void write_grid_csv(std::ostream& out, const Matrix& grid) {
    for (Index r = 0; r < grid.rows(); ++r) {
        for (Index c = 0; c < grid.cols(); ++c) {
            if (c) out << ',';
            out << format_double(grid(r, c));
        }
        out << '\n';
    }
}

Matrix read_grid_csv(std::istream& in) {
    std::vector<double> cells;
    Index rows = 0;
    Index cols = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Index count = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{}) {
                throw ParseError("grid CSV: bad value on row " + std::to_string(rows + 1));
            }
            cells.push_back(v);
            ++count;
            p = res.ptr;
            if (p < end && *p == ',') ++p;
        }
        if (cols >= 0 && count != cols) {
            throw ParseError("grid CSV: ragged row " + std::to_string(rows + 1));
        }
        cols = count;
        ++rows;
    }
    if (rows == 0) return Matrix();
    return Eigen::Map<const Matrix>(cells.data(), rows, cols);
}

std::vector<std::filesystem::path> export_masks(const model::ModelParams& params, const std::filesystem::path& out_dir,
                                                const std::string& prefix) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> paths;
    const auto& lengths = params.config.ladder.segment_lengths();
    for (std::size_t i = 0; i < params.scales.size(); ++i) {
        const auto path = out_dir / (prefix + "scale" + std::to_string(i) + "_s" + std::to_string(lengths[i]) + ".csv");
        std::ofstream out(path);
        if (!out) {
            throw Error("cannot write " + path.string());
        }
        write_grid_csv(out, params.scales[i].mask);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace mmfnet::harness
