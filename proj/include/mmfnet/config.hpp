#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmfnet/data.hpp"
#include "mmfnet/model.hpp"
#include "mmfnet/train.hpp"

namespace mmfnet::harness {

/**
 * One experiment: a dataset, a lookback, a set of horizons, a ladder and the
 * training settings. Seeds run are seed, seed + 1, ..., seed + repeats - 1.
 */
struct ExperimentConfig {
    data::DatasetSpec dataset;
    Index L = 720;
    std::vector<Index> horizons{96};
    std::vector<Index> ladder{2, 24, 720};
    bool mask_enabled = true;
    bool rin_std = false;
    Index stride = 1;
    train::TrainConfig train;
    int repeats = 3;
    std::uint64_t seed = 1;

    /// Ladder and horizon checks; throws ConfigError.
    void validate() const;
    std::vector<std::uint64_t> seeds() const;
    model::ModelConfig model_config(Index horizon) const;
};

/// Every accepted key with its default value; used for strict key checking.
nlohmann::json default_config_json();

nlohmann::json to_json(const ExperimentConfig& cfg);

/**
 * Builds a config from JSON. Unknown keys are ConfigErrors naming the dotted
 * key. A relative dataset path is resolved against `base_dir`; a missing path
 * falls back to `<data_dir>/<name>.csv`.
 */
ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                           const std::filesystem::path& data_dir = {});

/// Applies `key.sub=value` overrides. The value is parsed as JSON when it is
/// valid JSON, otherwise taken as a string.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides);

/// Dataset root: $MMF_DATA_DIR if set, else ./data.
std::filesystem::path default_data_dir();

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                             const std::filesystem::path& data_dir = default_data_dir());

}  // namespace mmfnet::harness
