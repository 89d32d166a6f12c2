#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dpivae/experiment.hpp"

using namespace dpivae;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory under the system temp root, removed on scope exit.
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dpivae_test_" + std::to_string(std::rand()) +
                std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

ExperimentConfig tiny_beam(const TempDir& tmp) {
    ExperimentConfig cfg;
    cfg.case_id = CaseId::beam;
    cfg.noise = case_definition(CaseId::beam).default_noise;
    cfg.out_dir = (tmp.path / "run").string();
    cfg.n_data = 64;
    cfg.model.encoder_hidden = 16;
    cfg.model.correction_hidden = 16;
    cfg.model.aux_hidden = 8;
    cfg.model.prior_hidden = 8;
    cfg.train.max_epochs = 30;
    cfg.train.patience = 30;
    cfg.train.objective.n_mc = 2;
    cfg.eval_train = 32;
    cfg.eval_test = 16;
    cfg.traverse_grid = 3;
    cfg.traverse_real = 8;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once", "[experiment]") {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(257, 8, [&](int i) { hits[i]++; });
    for (auto& h : hits) REQUIRE(h == 1);
}

TEST_CASE("parallel_for rethrows a worker exception", "[experiment]") {
    REQUIRE_THROWS_AS(parallel_for(16, 4,
                                   [](int i) {
                                       if (i == 7)
                                           throw NumericError("boom");
                                   }),
                      NumericError);
}

TEST_CASE("thread cap env variable bounds the pool", "[experiment]") {
    setenv("DPIVAE_MAX_THREADS", "1", 1);
    // With a cap of one the loop runs inline, so effects are ordered.
    std::vector<int> order;
    parallel_for(5, 8, [&](int i) { order.push_back(i); });
    unsetenv("DPIVAE_MAX_THREADS");
    REQUIRE(order == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("experiment config round trips through json", "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    cfg.sweep_lambdas = {-1.0, 0.0, 0.25};
    cfg.traverse_factor = "E";
    cfg.traverse_fixed["x_F"] = 2.5;
    ExperimentConfig back = experiment_from_json(to_json(cfg));
    REQUIRE(back == cfg);
}

TEST_CASE("unknown config keys are rejected", "[experiment]") {
    nlohmann::json j = {{"case", "beam"}, {"sead", 3}};
    REQUIRE_THROWS_AS(experiment_from_json(j), ConfigError);
    nlohmann::json nested = {{"case", "beam"},
                             {"train", {{"max_epoch", 10}}}};
    REQUIRE_THROWS_AS(experiment_from_json(nested), ConfigError);
}

TEST_CASE("bad case names and values fail validation", "[experiment]") {
    REQUIRE_THROWS_AS(experiment_from_json({{"case", "bream"}}), ConfigError);
    nlohmann::json j = {{"case", "beam"}, {"noise", {{"sigma_x", -1.0}}}};
    REQUIRE_THROWS_AS(experiment_from_json(j), ConfigError);
}

TEST_CASE("bare config adopts the reference schedule", "[experiment]") {
    ExperimentConfig cfg = experiment_from_json({{"case", "beam"}});
    REQUIRE(cfg.train.max_epochs == 20000);
    REQUIRE(cfg.train.patience == 2000);
    REQUIRE(cfg.train.lr == 1e-3);
    REQUIRE(cfg.train.sigma_lr == 5e-3);
    REQUIRE(cfg.train.objective.n_mc == 8);
    REQUIRE(cfg.n_data == 2048);
    // 2048 records split 1024 / 512 / 512.
    REQUIRE(cfg.split.train == 0.5);
    REQUIRE(cfg.split.val == 0.25);
    REQUIRE(cfg.noise.sigma_x ==
            case_definition(CaseId::beam).default_noise.sigma_x);
}

TEST_CASE("generate is deterministic and writes sidecar metadata",
          "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    REQUIRE(cmd_generate(cfg) == 0);
    fs::path csv = fs::path(cfg.out_dir) / "dataset.csv";
    std::string first = slurp(csv);
    REQUIRE(cmd_generate(cfg) == 0);
    REQUIRE(slurp(csv) == first);

    nlohmann::json meta;
    std::ifstream mf(csv.string() + ".json");
    mf >> meta;
    REQUIRE(meta.at("case") == "beam");
    REQUIRE(meta.at("seed") == cfg.seed);

    std::string manifest = slurp(fs::path(cfg.out_dir) / "manifest.json");
    ExperimentConfig back =
        experiment_from_json(nlohmann::json::parse(manifest));
    REQUIRE(back == cfg);
}

TEST_CASE("train, evaluate and traverse chain on one config", "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    REQUIRE(cmd_train(cfg) == 0);
    fs::path dir(cfg.out_dir);
    REQUIRE(fs::exists(dir / "model.json"));
    REQUIRE(fs::exists(dir / "training_log.csv"));

    nlohmann::json summary;
    std::ifstream sf(dir / "train_summary.json");
    sf >> summary;
    REQUIRE(summary.at("epochs_run").get<int>() <= cfg.train.max_epochs);
    REQUIRE(summary.at("best_epoch").get<int>() >= 0);

    REQUIRE(cmd_evaluate(cfg) == 0);
    std::string table = slurp(dir / "disentanglement.csv");
    REQUIRE(table.rfind("subset,factor,r2", 0) == 0);

    cfg.traverse_factor = "E";
    REQUIRE(cmd_traverse(cfg) == 0);
    std::string bands = slurp(dir / "traversal_bands.csv");
    // One band row per (grid value, output channel) plus the header.
    const long rows = std::count(bands.begin(), bands.end(), '\n') - 1;
    REQUIRE(rows == 3 * case_definition(CaseId::beam).d_x);
    std::string records = slurp(dir / "traversal_records.csv");
    const long rec_rows = std::count(records.begin(), records.end(), '\n') - 1;
    REQUIRE(rec_rows == 3 * 8);
}

TEST_CASE("evaluate without a checkpoint is a config error", "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    REQUIRE_THROWS_AS(cmd_evaluate(cfg), ConfigError);
    REQUIRE_THROWS_AS(cmd_traverse(cfg), ConfigError);
}

TEST_CASE("sweep emits one row per lambda, subset and factor", "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    cfg.sweep_lambdas = {-1.0, 0.25};
    cfg.sweep_runs = 2;
    cfg.workers = 2;
    REQUIRE(cmd_sweep(cfg) == 0);
    std::string table = slurp(fs::path(cfg.out_dir) / "sweep.csv");
    const long rows = std::count(table.begin(), table.end(), '\n') - 1;
    REQUIRE(rows == 2 * 3 * case_definition(CaseId::beam).n_factors());
}

TEST_CASE("sweep output is independent of the worker count", "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    cfg.sweep_lambdas = {0.0, 0.25};
    cfg.sweep_runs = 1;
    cfg.train.max_epochs = 10;
    cfg.workers = 1;
    REQUIRE(cmd_sweep(cfg) == 0);
    std::string serial = slurp(fs::path(cfg.out_dir) / "sweep.csv");
    cfg.workers = 4;
    REQUIRE(cmd_sweep(cfg) == 0);
    REQUIRE(slurp(fs::path(cfg.out_dir) / "sweep.csv") == serial);
}

TEST_CASE("benchmark reports every model in both quadrant modes",
          "[experiment]") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_beam(tmp);
    cfg.n_data = 160;
    cfg.benchmark_runs = 1;
    cfg.train.max_epochs = 10;
    cfg.workers = 4;
    REQUIRE(cmd_benchmark(cfg) == 0);

    nlohmann::json summary;
    std::ifstream sf(fs::path(cfg.out_dir) / "benchmark_summary.json");
    sf >> summary;
    for (const char* model :
         {"LIN", "GPR", "MLP", "DPIVAE-A", "DPIVAE-B"}) {
        for (const char* mode : {"interpolation", "extrapolation"}) {
            std::string key = std::string(model) + "/" + mode;
            REQUIRE(summary.contains(key));
            REQUIRE(summary.at(key).at("samples").get<int>() == 4);
        }
    }
}
