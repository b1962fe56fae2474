#include "doctest.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mmfnet/cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "mmfnet");
    std::ostringstream out, err;
    const int code = mmfnet::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path setup(const std::string& name) {
    const auto dir = oracle::scratch_dir(name);
    std::ofstream csv(dir / "synthetic.csv");
    csv << "date,a,b\n";
    for (int t = 0; t < 300; ++t) {
        csv << t << ',' << std::sin(t * 0.26) << ',' << std::cos(t * 0.5) + 0.01 * t << '\n';
    }
    csv.close();
    fs::copy_file(oracle::fixture("tiny_config.json"), dir / "cfg.json");
    return dir;
}

}  // namespace

TEST_CASE("selftest and its negative control") {
    const auto ok = run({"selftest"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("PASS dct_roundtrip") != std::string::npos);
    CHECK(ok.out.find("FAIL") == std::string::npos);

    const auto bad = run({"selftest", "--inject-dct-scale", "1.001"});
    CHECK(bad.code == 4);
    CHECK(bad.out.find("FAIL dct_roundtrip") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"train"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("train, eval and export-masks") {
    const auto dir = setup("cli_train");
    const std::string out = (dir / "out").string();
    const auto trained = run({"train", "--config", (dir / "cfg.json").string(), "--out", out, "--quiet"});
    REQUIRE(trained.code == 0);
    CHECK(trained.out.find("params=") != std::string::npos);
    CHECK(trained.out.find("val_mse=") != std::string::npos);
    CHECK(trained.err.empty());

    std::vector<fs::path> checkpoints;
    for (const auto& e : fs::directory_iterator(dir / "out" / "checkpoints")) checkpoints.push_back(e.path());
    REQUIRE(checkpoints.size() == 1);
    const std::string fp = checkpoints[0].stem().string();
    CHECK(trained.out.find(fp) != std::string::npos);
    CHECK(fs::exists(dir / "out" / "results" / "synthetic" / (fp + ".history.jsonl")));

    const auto override_run = run({"train", "--config", (dir / "cfg.json").string(), "--out", out, "--quiet",
                                   "train.learning_rate=0.02"});
    REQUIRE(override_run.code == 0);
    CHECK(override_run.out.find(fp) == std::string::npos);
    std::size_t records = 0;
    for (const auto& e : fs::directory_iterator(dir / "out" / "results" / "synthetic")) {
        if (e.path().string().ends_with(".history.jsonl")) continue;
        ++records;
        std::ifstream in(e.path());
        std::string line;
        std::getline(in, line);
        const auto j = nlohmann::json::parse(line);
        const double lr = j.at("config").at("train").at("learning_rate");
        CHECK((lr == 0.01 || lr == 0.02));
    }
    CHECK(records == 2);

    const auto evaluated =
        run({"eval", "--config", (dir / "cfg.json").string(), "--checkpoint", checkpoints[0].string(), "--out", out});
    REQUIRE(evaluated.code == 0);
    CHECK(evaluated.out.find("test mse=") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "eval" / (fp + ".json")));

    const auto masks = run({"export-masks", "--checkpoint", checkpoints[0].string(), "--out", out});
    REQUIRE(masks.code == 0);
    CHECK(fs::exists(dir / "out" / "masks" / fp / "mask_scale0_s4.csv"));
    CHECK(fs::exists(dir / "out" / "masks" / fp / "mask_scale1_s24.csv"));
}

TEST_CASE("ablate writes a table") {
    const auto dir = setup("cli_ablate");
    const auto r = run({"ablate", "--config", (dir / "cfg.json").string(), "--out", (dir / "out").string(), "--quiet",
                        "train.max_epochs=1"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Imp.(MMFT over SFT)") != std::string::npos);
    std::ifstream in(dir / "out" / "tables" / "synthetic_ablation.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "variant,mask,ladder,H8");
}

TEST_CASE("error exit codes") {
    const auto dir = setup("cli_errors");
    const auto missing = run({"train", "--config", (dir / "cfg.json").string(), "--out", (dir / "out").string(),
                              "dataset.path=" + (dir / "nope.csv").string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("nope.csv") != std::string::npos);

    const auto unknown = run({"train", "--config", (dir / "cfg.json").string(), "trian.lr=1"});
    CHECK(unknown.code == 1);
    CHECK(unknown.err.find("trian") != std::string::npos);

    const auto bad_ladder = run({"train", "--config", (dir / "cfg.json").string(), "ladder=[5]"});
    CHECK(bad_ladder.code == 1);

    const auto diverged = run({"train", "--config", (dir / "cfg.json").string(), "--out", (dir / "out").string(),
                               "--quiet", "train.optimizer=sgd", "train.learning_rate=1e200"});
    CHECK(diverged.code == 3);
}

TEST_CASE("dataset-info") {
    const auto dir = oracle::scratch_dir("cli_info");
    const auto r = run({"dataset-info", oracle::fixture("tiny.csv").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("C=2, T=3") != std::string::npos);
    CHECK(fs::exists(dir / "dataset_info" / "tiny.json"));
    CHECK(run({"dataset-info", (dir / "absent.csv").string(), "--out", dir.string()}).code == 2);
}
