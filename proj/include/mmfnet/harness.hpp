#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmfnet/config.hpp"
#include "mmfnet/train.hpp"

namespace mmfnet::harness {

inline constexpr const char* kCodeVersion = "mmfnet-0.1.0";

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Content hash of a file, used to pin the exact dataset in fingerprints.
std::string file_digest(const std::filesystem::path& path);

/// Everything that determines one (horizon, seed) cell, canonically ordered.
nlohmann::json cell_identity(const ExperimentConfig& cfg, Index horizon, std::uint64_t seed,
                             const std::string& dataset_digest);
std::string fingerprint(const nlohmann::json& identity);

struct ResultRecord {
    std::string fingerprint;
    std::string dataset;
    Index horizon = 0;
    std::uint64_t seed = 0;
    std::vector<Index> ladder;
    bool mask_enabled = true;
    train::Metrics test;
    double best_val_mse = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
    std::int64_t param_count = 0;
    double wall_ms = 0.0;
    std::string code_version = kCodeVersion;
    nlohmann::json identity;
};

nlohmann::json to_json(const ResultRecord& r);
ResultRecord record_from_json(const nlohmann::json& j);

struct RunOptions {
    std::filesystem::path out_dir = "out";
    bool persist = true;           // write results/<dataset>/<fingerprint>.jsonl and history
    bool save_checkpoints = false; // write checkpoints/<fingerprint>.ckpt
    bool reuse_existing = false;   // load a cell from its record file instead of training
    int workers = 1;
    std::function<void(const std::string&)> log;
};

/// Loaded, standardized dataset shared by every cell of a run.
struct PreparedData {
    std::shared_ptr<const Matrix> values;  // standardized with train-split stats
    data::SplitBounds bounds;
    data::StandardizationStats stats;
    std::string digest;
    Index channels = 0;
    Index rows = 0;
};

PreparedData prepare_data(const data::DatasetSpec& spec);

/// Trains and evaluates one cell; the returned record has test metrics.
ResultRecord run_cell(const ExperimentConfig& cfg, const PreparedData& prepared, Index horizon,
                      std::uint64_t seed, const RunOptions& options,
                      model::ModelParams* trained = nullptr);

/// Every (horizon, seed) cell of `cfg`, in horizon-major order.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& options);
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const PreparedData& prepared,
                                         const RunOptions& options);

/// Mean test MSE over seeds, per horizon.
std::map<Index, double> mean_mse_by_horizon(const std::vector<ResultRecord>& records);

struct AblationVariant {
    std::string name;
    std::vector<Index> ladder;  // empty = use the base config's ladder
};

struct AblationOptions {
    std::vector<AblationVariant> variants;
    std::vector<std::string> mask_off_variants;  // variants also run with the mask disabled
};

/// SFT (ladder [L]), MFT at N_seg 24/120/360, MMFT (the base ladder); all with
/// and without the mask.
AblationOptions default_ablation(const ExperimentConfig& base);

struct AblationRow {
    std::string variant;
    bool mask_enabled = true;
    std::vector<Index> ladder;
    std::map<Index, double> mse;                       // mean over seeds
    std::map<Index, std::vector<double>> per_seed_mse;
};

struct AblationTable {
    std::string dataset;
    std::vector<Index> horizons;
    std::vector<AblationRow> rows;
    std::map<Index, double> improvement_over_sft;  // SFT - MMFT, both masked
    std::map<Index, double> mask_improvement;      // MMFT unmasked - MMFT masked

    const AblationRow* find(const std::string& variant, bool mask_enabled) const;
};

/// Runs every variant on byte-identical splits and seeds; only the ladder and
/// mask switch differ between rows.
AblationTable ablation_suite(const ExperimentConfig& base, const AblationOptions& ablation,
                             const RunOptions& options);

/// CSV with one row per (variant, mask) and `Imp.` rows at the bottom.
void write_ablation_csv(std::ostream& out, const AblationTable& table);

/// Writes one headerless numeric grid per scale (rows = segments, columns =
/// frequency bins) as `<prefix>scale<i>_s<len>.csv`. Returns the paths.
std::vector<std::filesystem::path> export_masks(const model::ModelParams& params,
                                                const std::filesystem::path& out_dir,
                                                const std::string& prefix = "mask_");

void write_grid_csv(std::ostream& out, const Matrix& grid);
Matrix read_grid_csv(std::istream& in);

}  // namespace mmfnet::harness
