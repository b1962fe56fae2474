#include "mmfnet/config.hpp"

#include <cstdlib>
#include <fstream>

namespace mmfnet::harness {

using nlohmann::json;

namespace {

std::string optimizer_name(train::OptimizerKind k) { return k == train::OptimizerKind::sgd ? "sgd" : "adam"; }

train::OptimizerKind optimizer_from(const std::string& s) {
    if (s == "adam") return train::OptimizerKind::adam;
    if (s == "sgd") return train::OptimizerKind::sgd;
    throw ConfigError("train.optimizer must be 'adam' or 'sgd', got '" + s + "'");
}

bool same_kind(const json& a, const json& b) {
    if (a.is_null() || b.is_null()) return true;  // nullable fields
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

void check_keys(const json& input, const json& schema, const std::string& prefix) {
    if (!input.is_object()) {
        throw ConfigError("config key '" + (prefix.empty() ? std::string("<root>") : prefix) + "' must be an object");
    }
    for (const auto& [key, value] : input.items()) {
        const std::string dotted = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) {
            throw ConfigError("unknown config key '" + dotted + "'");
        }
        const json& expected = schema.at(key);
        if (!same_kind(value, expected)) {
            throw ConfigError("config key '" + dotted + "' has type " + value.type_name() + ", expected " +
                              expected.type_name());
        }
        if (expected.is_object()) {
            check_keys(value, expected, dotted);
        }
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset.name.empty()) throw ConfigError("dataset.name is required");
    if (horizons.empty()) throw ConfigError("horizons must not be empty");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    dataset.split.validate();
    train.validate();
    for (Index h : horizons) {
        model_config(h);
    }
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
    std::vector<std::uint64_t> out;
    for (int i = 0; i < repeats; ++i) out.push_back(seed + static_cast<std::uint64_t>(i));
    return out;
}

model::ModelConfig ExperimentConfig::model_config(Index horizon) const {
    return model::make_config(L, horizon, ladder, mask_enabled);
}

json default_config_json() {
    const train::TrainConfig t;
    return {
        {"dataset",
         {{"name", ""},
          {"path", ""},
          {"expected_channels", nullptr},
          {"sampling", ""},
          {"split_policy", "ratio"},
          {"split_ratios", {0.7, 0.1, 0.2}}}},
        {"L", 720},
        {"horizons", {96}},
        {"ladder", {2, 24, 720}},
        {"mask_enabled", true},
        {"rin_std", false},
        {"stride", 1},
        {"train",
         {{"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"optimizer", optimizer_name(t.optimizer)},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_eps", t.adam_eps},
          {"shuffle", t.shuffle},
          {"rin_eps", t.rin_eps},
          {"lr_decay", t.lr_decay},
          {"lr_decay_every", t.lr_decay_every},
          {"max_steps", t.max_steps}}},
        {"repeats", 3},
        {"seed", 1},
    };
}

json to_json(const ExperimentConfig& cfg) {
    json ds = {{"name", cfg.dataset.name},
               {"path", cfg.dataset.path.string()},
               {"expected_channels", nullptr},
               {"sampling", cfg.dataset.sampling},
               {"split_policy", data::to_string(cfg.dataset.split.kind)},
               {"split_ratios", {cfg.dataset.split.train, cfg.dataset.split.val, cfg.dataset.split.test}}};
    if (cfg.dataset.expected_channels) ds["expected_channels"] = *cfg.dataset.expected_channels;
    const auto& t = cfg.train;
    return {
        {"dataset", ds},
        {"L", cfg.L},
        {"horizons", cfg.horizons},
        {"ladder", cfg.ladder},
        {"mask_enabled", cfg.mask_enabled},
        {"rin_std", cfg.rin_std},
        {"stride", cfg.stride},
        {"train",
         {{"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"optimizer", optimizer_name(t.optimizer)},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_eps", t.adam_eps},
          {"shuffle", t.shuffle},
          {"rin_eps", t.rin_eps},
          {"lr_decay", t.lr_decay},
          {"lr_decay_every", t.lr_decay_every},
          {"max_steps", t.max_steps}}},
        {"repeats", cfg.repeats},
        {"seed", cfg.seed},
    };
}

ExperimentConfig from_json(const json& j, const std::filesystem::path& base_dir,
                           const std::filesystem::path& data_dir) {
    check_keys(j, default_config_json(), "");
    ExperimentConfig cfg;

    const json ds = j.value("dataset", json::object());
    cfg.dataset.name = get_or<std::string>(ds, "name", "");
    if (cfg.dataset.name.empty()) {
        throw ConfigError("dataset.name is required");
    }
    if (auto known = data::registry_lookup(cfg.dataset.name, data_dir)) {
        cfg.dataset = *known;
    }
    if (ds.contains("expected_channels")) {
        const auto& ec = ds.at("expected_channels");
        cfg.dataset.expected_channels = ec.is_null() ? std::nullopt : std::optional<Index>(ec.get<Index>());
    }
    cfg.dataset.sampling = get_or<std::string>(ds, "sampling", cfg.dataset.sampling);
    if (ds.contains("split_policy")) {
        cfg.dataset.split.kind = data::split_kind_from_string(ds.at("split_policy").get<std::string>());
    }
    if (ds.contains("split_ratios")) {
        const auto r = ds.at("split_ratios").get<std::vector<double>>();
        if (r.size() != 3) throw ConfigError("dataset.split_ratios needs three entries");
        cfg.dataset.split.train = r[0];
        cfg.dataset.split.val = r[1];
        cfg.dataset.split.test = r[2];
    }
    const std::string path = get_or<std::string>(ds, "path", "");
    if (path.empty()) {
        cfg.dataset.path = data_dir / (cfg.dataset.name + ".csv");
    } else {
        std::filesystem::path p(path);
        if (p.is_absolute()) {
            cfg.dataset.path = p;
        } else if (!base_dir.empty() && std::filesystem::exists(base_dir / p)) {
            cfg.dataset.path = base_dir / p;
        } else {
            cfg.dataset.path = data_dir / p;
        }
    }

    try {
        cfg.L = get_or<Index>(j, "L", cfg.L);
        cfg.horizons = get_or<std::vector<Index>>(j, "horizons", cfg.horizons);
        cfg.ladder = get_or<std::vector<Index>>(j, "ladder", cfg.ladder);
        cfg.mask_enabled = get_or<bool>(j, "mask_enabled", cfg.mask_enabled);
        cfg.rin_std = get_or<bool>(j, "rin_std", cfg.rin_std);
        cfg.stride = get_or<Index>(j, "stride", cfg.stride);
        cfg.repeats = get_or<int>(j, "repeats", cfg.repeats);
        cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);

        const json t = j.value("train", json::object());
        auto& tc = cfg.train;
        tc.learning_rate = get_or<double>(t, "learning_rate", tc.learning_rate);
        tc.batch_size = get_or<Index>(t, "batch_size", tc.batch_size);
        tc.max_epochs = get_or<int>(t, "max_epochs", tc.max_epochs);
        tc.patience = get_or<int>(t, "patience", tc.patience);
        tc.optimizer = optimizer_from(get_or<std::string>(t, "optimizer", optimizer_name(tc.optimizer)));
        tc.beta1 = get_or<double>(t, "beta1", tc.beta1);
        tc.beta2 = get_or<double>(t, "beta2", tc.beta2);
        tc.adam_eps = get_or<double>(t, "adam_eps", tc.adam_eps);
        tc.shuffle = get_or<bool>(t, "shuffle", tc.shuffle);
        tc.rin_eps = get_or<double>(t, "rin_eps", tc.rin_eps);
        tc.lr_decay = get_or<double>(t, "lr_decay", tc.lr_decay);
        tc.lr_decay_every = get_or<int>(t, "lr_decay_every", tc.lr_decay_every);
        tc.max_steps = get_or<std::int64_t>(t, "max_steps", tc.max_steps);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.train.rin_std = cfg.rin_std;
    cfg.validate();
    return cfg;
}

void apply_overrides(json& j, const std::vector<std::string>& overrides) {
    const json schema = default_config_json();
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("override '" + item + "' is not of the form key=value");
        }
        const std::string key = item.substr(0, eq);
        const std::string raw = item.substr(eq + 1);

        const json* node = &schema;
        json* target = &j;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(part)) {
                throw ConfigError("unknown config key '" + key + "'");
            }
            node = &node->at(part);
            if (dot == std::string::npos) {
                json value = json::parse(raw, nullptr, false);
                if (value.is_discarded()) value = raw;
                (*target)[part] = value;
                break;
            }
            if (!target->contains(part)) (*target)[part] = json::object();
            target = &(*target)[part];
            start = dot + 1;
        }
    }
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("MMF_DATA_DIR"); env && *env) {
        return env;
    }
    return "data";
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                             const std::filesystem::path& data_dir) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    json j = json::parse(in, nullptr, false, true);
    if (j.is_discarded()) {
        throw ConfigError("config file " + path.string() + " is not valid JSON");
    }
    apply_overrides(j, overrides);
    return from_json(j, path.parent_path(), data_dir);
}

}  // namespace mmfnet::harness
