#include "mmfnet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "mmfnet/checkpoint.hpp"
#include "mmfnet/config.hpp"
#include "mmfnet/harness.hpp"
#include "mmfnet/selftest.hpp"

namespace mmfnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool quiet = false;
    bool resume = false;
    std::string checkpoint;
    std::string dataset;
    std::vector<std::string> variants;
    double dct_fault = 1.0;
};

harness::ExperimentConfig resolve_config(const Options& o) {
    if (o.config.empty()) {
        throw ConfigError("--config is required");
    }
    harness::ExperimentConfig cfg = harness::load_config(o.config, o.overrides);
    if (o.seed) cfg.seed = *o.seed;
    return cfg;
}

harness::RunOptions run_options(const Options& o, std::ostream& err) {
    harness::RunOptions r;
    r.out_dir = o.out_dir;
    r.workers = o.workers;
    r.reuse_existing = o.resume;
    if (!o.quiet) {
        r.log = [&err](const std::string& msg) { err << msg << std::endl; };
    }
    return r;
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
    const auto cfg = resolve_config(o);
    auto options = run_options(o, err);
    options.save_checkpoints = true;
    for (const auto& r : harness::run_experiment(cfg, options)) {
        out << "trained " << r.dataset << " H=" << r.horizon << " seed=" << r.seed
            << ": val_mse=" << fixed(r.best_val_mse) << " test_mse=" << fixed(r.test.mse)
            << " params=" << r.param_count << " wall=" << fixed(r.wall_ms / 1000.0, 1) << "s checkpoint="
            << (fs::path(o.out_dir) / "checkpoints" / (r.fingerprint + ".ckpt")).string() << '\n';
    }
    return ok;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
    const auto cfg = resolve_config(o);
    if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    const model::ModelParams params = model::load_checkpoint(o.checkpoint);
    if (params.config.lookback != cfg.L) {
        throw ConfigError("checkpoint lookback " + std::to_string(params.config.lookback) +
                          " does not match config L=" + std::to_string(cfg.L));
    }
    const auto prepared = harness::prepare_data(cfg.dataset);
    const auto windows =
        data::split_windows(prepared.values, prepared.bounds, cfg.L, params.config.horizon, cfg.stride);
    const auto m = train::evaluate(windows.test, params, cfg.rin_std, cfg.train.rin_eps);

    const fs::path dir = fs::path(o.out_dir) / "eval";
    fs::create_directories(dir);
    const json result = {{"checkpoint", o.checkpoint}, {"dataset", cfg.dataset.name},
                         {"horizon", params.config.horizon}, {"mse", m.mse}, {"mae", m.mae},
                         {"n_windows", m.n_windows}, {"n_points", m.n_points}};
    std::ofstream(dir / (fs::path(o.checkpoint).stem().string() + ".json")) << result.dump(2) << '\n';
    out << cfg.dataset.name << " H=" << params.config.horizon << ": test mse=" << fixed(m.mse)
        << " mae=" << fixed(m.mae) << " over " << m.n_windows << " windows\n";
    return ok;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto cfg = resolve_config(o);
    auto ablation = harness::default_ablation(cfg);
    if (!o.variants.empty()) {
        std::vector<harness::AblationVariant> kept;
        for (const auto& v : ablation.variants) {
            if (std::find(o.variants.begin(), o.variants.end(), v.name) != o.variants.end()) kept.push_back(v);
        }
        if (kept.empty()) throw ConfigError("--variants matched none of the ablation variants");
        ablation.variants = kept;
    }
    const auto table = harness::ablation_suite(cfg, ablation, run_options(o, err));

    const fs::path dir = fs::path(o.out_dir) / "tables";
    fs::create_directories(dir);
    const fs::path csv = dir / (cfg.dataset.name + "_ablation.csv");
    std::ofstream file(csv);
    harness::write_ablation_csv(file, table);

    out << std::left << std::setw(18) << "variant" << std::setw(6) << "mask";
    for (Index h : table.horizons) out << std::setw(10) << ("H" + std::to_string(h));
    out << '\n';
    for (const auto& row : table.rows) {
        out << std::setw(18) << row.variant << std::setw(6) << (row.mask_enabled ? "on" : "off");
        for (Index h : table.horizons) out << std::setw(10) << fixed(row.mse.at(h));
        out << '\n';
    }
    if (!table.improvement_over_sft.empty()) {
        out << std::setw(24) << "Imp.(MMFT over SFT)";
        for (Index h : table.horizons) out << std::setw(10) << fixed(table.improvement_over_sft.at(h));
        out << '\n';
    }
    if (!table.mask_improvement.empty()) {
        out << std::setw(24) << "Imp.(mask)";
        for (Index h : table.horizons) out << std::setw(10) << fixed(table.mask_improvement.at(h));
        out << '\n';
    }
    out << "table written to " << csv.string() << '\n';
    return ok;
}

int cmd_export_masks(const Options& o, std::ostream& out, std::ostream&) {
    if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    const auto params = model::load_checkpoint(o.checkpoint);
    const fs::path dir = fs::path(o.out_dir) / "masks" / fs::path(o.checkpoint).stem();
    for (const auto& p : harness::export_masks(params, dir)) {
        out << p.string() << '\n';
    }
    return ok;
}

int cmd_dataset_info(const Options& o, std::ostream& out, std::ostream&) {
    const fs::path data_dir = harness::default_data_dir();
    data::DatasetSpec spec;
    if (auto known = data::registry_lookup(o.dataset, data_dir); known && !fs::exists(o.dataset)) {
        spec = *known;
    } else {
        const fs::path path(o.dataset);
        const std::string name = path.stem().string();
        spec = data::registry_lookup(name, data_dir).value_or(data::DatasetSpec{});
        spec.name = name;
        spec.path = path;
    }
    const TimeSeriesFrame frame = data::load_csv(spec);
    out << spec.name << ": C=" << frame.channel_count() << ", T=" << frame.length() << '\n';

    json info = {{"name", spec.name}, {"path", spec.path.string()}, {"channels", frame.channels},
                 {"C", frame.channel_count()}, {"T", frame.length()}, {"split_policy", data::to_string(spec.split.kind)}};
    try {
        const auto b = data::split_bounds(frame.length(), spec.split);
        info["split_bounds"] = {b.train_end, b.val_end, b.test_end};
        out << "split " << data::to_string(spec.split.kind) << ": train [0, " << b.train_end << "), val ["
            << b.train_end << ", " << b.val_end << "), test [" << b.val_end << ", " << b.test_end << ")\n";
    } catch (const InsufficientDataError& e) {
        info["split_bounds"] = nullptr;
        out << "split " << data::to_string(spec.split.kind) << ": " << e.what() << '\n';
    }
    const fs::path dir = fs::path(o.out_dir) / "dataset_info";
    fs::create_directories(dir);
    std::ofstream(dir / (spec.name + ".json")) << info.dump(2) << '\n';
    return ok;
}

int cmd_selftest(const Options& o, std::ostream& out, std::ostream&) {
    selftest::Hooks hooks;
    hooks.dct_scale_fault = o.dct_fault;
    bool all = true;
    for (const auto& suite : selftest::run_selftest(hooks)) {
        out << (suite.passed ? "PASS " : "FAIL ") << suite.name << " (" << suite.detail << ")\n";
        all = all && suite.passed;
    }
    return all ? ok : selftest_failed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-scale masked frequency forecaster: train, evaluate, ablate, inspect"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--workers", o.workers, "Parallel experiment cells")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
    };
    auto add_config = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Experiment config (JSON)")->required();
        sub->add_option("--seed", o.seed, "Base seed (overrides the config)");
        sub->add_option("overrides", o.overrides, "key.sub=value config overrides");
        sub->add_flag("--resume", o.resume, "Reuse cells already recorded under --out");
    };

    auto* train = app.add_subcommand("train", "Train every (horizon, seed) cell and save checkpoints");
    add_config(train);
    add_common(train);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    add_config(eval);
    add_common(eval);
    eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();

    auto* ablate = app.add_subcommand("ablate", "Run the SFT / MFT / MMFT x mask ablation grid");
    add_config(ablate);
    add_common(ablate);
    ablate->add_option("--variants", o.variants, "Restrict to these variant names")->delimiter(',');

    auto* masks = app.add_subcommand("export-masks", "Write learned masks as CSV grids");
    add_common(masks);
    masks->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();

    auto* info = app.add_subcommand("dataset-info", "Print channel count, length and split boundaries");
    add_common(info);
    info->add_option("dataset", o.dataset, "CSV path or registered dataset name")->required();

    auto* self = app.add_subcommand("selftest", "Check the numerical core on synthetic data");
    add_common(self);
    self->add_option("--inject-dct-scale", o.dct_fault)->group("");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    try {
        if (train->parsed()) return cmd_train(o, out, err);
        if (eval->parsed()) return cmd_eval(o, out, err);
        if (ablate->parsed()) return cmd_ablate(o, out, err);
        if (masks->parsed()) return cmd_export_masks(o, out, err);
        if (info->parsed()) return cmd_dataset_info(o, out, err);
        if (self->parsed()) return cmd_selftest(o, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NonFiniteGradientError& e) {
        err << "training diverged: " << e.what() << '\n';
        return diverged;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const fs::filesystem_error& e) {
        err << "file error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
    return ok;
}

}  // namespace mmfnet::cli
