#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpivae/benchmark.hpp"
#include "dpivae/datagen.hpp"
#include "dpivae/evaluation.hpp"
#include "dpivae/model.hpp"
#include "dpivae/surrogate.hpp"
#include "dpivae/training.hpp"

namespace dpivae {

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// Hard cap on worker threads, settable through DPIVAE_MAX_THREADS. A cap of
/// one gives bit-reproducible reductions regardless of the --workers flag.
inline int thread_cap() {
    const char* env = std::getenv("DPIVAE_MAX_THREADS");
    if (!env) return std::numeric_limits<int>::max();
    int v = std::atoi(env);
    return v > 0 ? v : 1;
}

/// Runs fn(i) for i in [0, n) on a bounded pool. Exceptions are captured and
/// the first one is rethrown on the caller thread after all workers join.
template <typename Fn>
inline void parallel_for(int n, int workers, Fn&& fn) {
    workers = std::max(1, std::min({workers, n, thread_cap()}));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Declarative description of one experiment. Defaults reproduce the
/// reference training schedule, so a config that only names a case is a
/// complete experiment.
struct ExperimentConfig {
    CaseId case_id = CaseId::beam;
    unsigned long long seed = 0;
    std::string out_dir = "out";
    int workers = 1;

    int n_data = 2048;
    SplitSpec split;
    NoiseSpec noise;
    ModelConfig model;
    TrainConfig train;

    // Sweep over the gradient-reversal coefficient.
    std::vector<double> sweep_lambdas = {-1.0,       -1.0 / 10, -1.0 / 100,
                                         -1.0 / 1000, 0.0,      1.0 / 1000,
                                         1.0 / 100,  1.0 / 10,  1.0};
    int sweep_runs = 3;

    // Factor traversal.
    std::string traverse_factor;
    std::map<std::string, double> traverse_fixed;
    int traverse_grid = 5;
    int traverse_real = 1000;

    // Disentanglement scoring.
    int eval_train = 1024;
    int eval_test = 512;

    // Class-prediction benchmark.
    int benchmark_runs = 3;

    void validate() const {
        noise.validate();
        if (n_data < 4) throw ConfigError("config: n_data must be >= 4");
        if (split.train <= 0 || split.val <= 0 ||
            split.train + split.val >= 1.0)
            throw ConfigError("config: split fractions must be in (0, 1)");
        if (workers < 1) throw ConfigError("config: workers must be >= 1");
        if (sweep_runs < 1 || benchmark_runs < 1)
            throw ConfigError("config: run counts must be >= 1");
        if (traverse_grid < 2 || traverse_real < 1)
            throw ConfigError("config: traversal grid needs >= 2 points");
        if (eval_train < 2 || eval_test < 2)
            throw ConfigError("config: evaluation split too small");
        if (model.case_id != case_id)
            throw ConfigError("config: model case does not match experiment");
    }
};

namespace detail {

/// Rejects keys that are not in the allowed set; typos in config files fail
/// loudly instead of silently falling back to defaults.
inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ConfigError("config: unknown key '" + it.key() + "' in " +
                              where);
    }
}

template <typename T>
inline void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["case"] = to_string(c.case_id);
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    j["workers"] = c.workers;
    j["data"] = {{"n", c.n_data},
                 {"train_fraction", c.split.train},
                 {"val_fraction", c.split.val}};
    j["noise"] = {{"sigma_x", c.noise.sigma_x},
                  {"sigma_c", c.noise.sigma_c},
                  {"sigma_y", c.noise.sigma_y}};
    j["model"] = {{"separate_encoders", c.model.separate_encoders},
                  {"encoder_hidden", c.model.encoder_hidden},
                  {"correction_hidden", c.model.correction_hidden},
                  {"correction_layers", c.model.correction_layers},
                  {"aux_hidden", c.model.aux_hidden},
                  {"prior_hidden", c.model.prior_hidden},
                  {"sigma_x_init", c.model.sigma_x_init}};
    j["objective"] = {{"alpha_x", c.train.objective.alpha_x},
                      {"alpha_c", c.train.objective.alpha_c},
                      {"alpha_y", c.train.objective.alpha_y},
                      {"beta", c.train.objective.beta},
                      {"lambda", c.train.objective.lambda},
                      {"n_mc", c.train.objective.n_mc}};
    j["train"] = {{"max_epochs", c.train.max_epochs},
                  {"patience", c.train.patience},
                  {"lr", c.train.lr},
                  {"sigma_lr", c.train.sigma_lr},
                  {"encoder_lr_multiplier", c.train.encoder_lr_multiplier},
                  {"beta_warmup", c.train.beta_warmup}};
    j["sweep"] = {{"lambdas", c.sweep_lambdas}, {"runs", c.sweep_runs}};
    j["traverse"] = {{"factor", c.traverse_factor},
                     {"fixed", c.traverse_fixed},
                     {"grid", c.traverse_grid},
                     {"realizations", c.traverse_real}};
    j["evaluate"] = {{"n_train", c.eval_train}, {"n_test", c.eval_test}};
    j["benchmark"] = {{"runs", c.benchmark_runs}};
    return j;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::maybe;
    check_keys(j, "root",
               {"case", "seed", "out", "workers", "data", "noise", "model",
                "objective", "train", "sweep", "traverse", "evaluate",
                "benchmark"});
    ExperimentConfig c;
    c.case_id = case_from_string(j.at("case").get<std::string>());
    c.model.case_id = c.case_id;
    c.noise = case_definition(c.case_id).default_noise;
    maybe(j, "seed", c.seed);
    maybe(j, "out", c.out_dir);
    maybe(j, "workers", c.workers);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        check_keys(d, "data", {"n", "train_fraction", "val_fraction"});
        maybe(d, "n", c.n_data);
        maybe(d, "train_fraction", c.split.train);
        maybe(d, "val_fraction", c.split.val);
    }
    if (j.contains("noise")) {
        const auto& d = j.at("noise");
        check_keys(d, "noise", {"sigma_x", "sigma_c", "sigma_y"});
        maybe(d, "sigma_x", c.noise.sigma_x);
        maybe(d, "sigma_c", c.noise.sigma_c);
        maybe(d, "sigma_y", c.noise.sigma_y);
    }
    if (j.contains("model")) {
        const auto& d = j.at("model");
        check_keys(d, "model",
                   {"separate_encoders", "encoder_hidden", "correction_hidden",
                    "correction_layers", "aux_hidden", "prior_hidden",
                    "sigma_x_init"});
        maybe(d, "separate_encoders", c.model.separate_encoders);
        maybe(d, "encoder_hidden", c.model.encoder_hidden);
        maybe(d, "correction_hidden", c.model.correction_hidden);
        maybe(d, "correction_layers", c.model.correction_layers);
        maybe(d, "aux_hidden", c.model.aux_hidden);
        maybe(d, "prior_hidden", c.model.prior_hidden);
        maybe(d, "sigma_x_init", c.model.sigma_x_init);
    }
    if (j.contains("objective")) {
        const auto& d = j.at("objective");
        check_keys(d, "objective",
                   {"alpha_x", "alpha_c", "alpha_y", "beta", "lambda", "n_mc"});
        maybe(d, "alpha_x", c.train.objective.alpha_x);
        maybe(d, "alpha_c", c.train.objective.alpha_c);
        maybe(d, "alpha_y", c.train.objective.alpha_y);
        maybe(d, "beta", c.train.objective.beta);
        maybe(d, "lambda", c.train.objective.lambda);
        maybe(d, "n_mc", c.train.objective.n_mc);
    }
    if (j.contains("train")) {
        const auto& d = j.at("train");
        check_keys(d, "train",
                   {"max_epochs", "patience", "lr", "sigma_lr",
                    "encoder_lr_multiplier", "beta_warmup"});
        maybe(d, "max_epochs", c.train.max_epochs);
        maybe(d, "patience", c.train.patience);
        maybe(d, "lr", c.train.lr);
        maybe(d, "sigma_lr", c.train.sigma_lr);
        maybe(d, "encoder_lr_multiplier", c.train.encoder_lr_multiplier);
        maybe(d, "beta_warmup", c.train.beta_warmup);
    }
    if (j.contains("sweep")) {
        const auto& d = j.at("sweep");
        check_keys(d, "sweep", {"lambdas", "runs"});
        maybe(d, "lambdas", c.sweep_lambdas);
        maybe(d, "runs", c.sweep_runs);
    }
    if (j.contains("traverse")) {
        const auto& d = j.at("traverse");
        check_keys(d, "traverse", {"factor", "fixed", "grid", "realizations"});
        maybe(d, "factor", c.traverse_factor);
        maybe(d, "fixed", c.traverse_fixed);
        maybe(d, "grid", c.traverse_grid);
        maybe(d, "realizations", c.traverse_real);
    }
    if (j.contains("evaluate")) {
        const auto& d = j.at("evaluate");
        check_keys(d, "evaluate", {"n_train", "n_test"});
        maybe(d, "n_train", c.eval_train);
        maybe(d, "n_test", c.eval_test);
    }
    if (j.contains("benchmark")) {
        const auto& d = j.at("benchmark");
        check_keys(d, "benchmark", {"runs"});
        maybe(d, "runs", c.benchmark_runs);
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot read " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse failure in " + path + ": " +
                          e.what());
    }
    return experiment_from_json(j);
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return to_json(a) == to_json(b);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("config: cannot create " + cfg.out_dir);
    std::ofstream f(dir / "manifest.json");
    if (!f) throw ConfigError("config: cannot write run manifest");
    f << to_json(cfg).dump(2) << "\n";
    return dir;
}

inline std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw ConfigError("config: cannot write " + p.string());
    f.precision(12);
    return f;
}

/// The dataset of an experiment lives at a fixed spot in its output
/// directory; commands that need one generate it on demand so a single
/// config can drive the whole pipeline.
inline Dataset obtain_dataset(const ExperimentConfig& cfg,
                              const std::filesystem::path& dir) {
    auto csv = dir / "dataset.csv";
    if (std::filesystem::exists(csv)) return load_dataset(csv.string());
    Rng rng(cfg.seed);
    const CaseDefinition def = case_definition(cfg.case_id);
    Mat s = sample_generative_factors(def, cfg.n_data, rng);
    Dataset ds = generate_observations(def, s, cfg.noise, rng);
    save_dataset(ds, csv.string(), cfg.noise, cfg.seed);
    return ds;
}

inline DpiVae obtain_model(const ExperimentConfig& cfg,
                           const std::filesystem::path& dir) {
    auto ckpt = dir / "model.json";
    if (!std::filesystem::exists(ckpt))
        throw ConfigError("config: no checkpoint at " + ckpt.string() +
                          "; run the train command first");
    return DpiVae::load(ckpt.string());
}

}  // namespace detail

/// Draws the dataset for the config and persists it with its sidecar.
inline int cmd_generate(const ExperimentConfig& cfg) {
    auto dir = detail::prepare_out(cfg);
    auto csv = dir / "dataset.csv";
    std::error_code ec;
    std::filesystem::remove(csv, ec);
    detail::obtain_dataset(cfg, dir);
    return 0;
}

/// Trains a model on the config's dataset and writes the checkpoint taken at
/// the best validation epoch plus a JSON training summary.
inline int cmd_train(const ExperimentConfig& cfg) {
    auto dir = detail::prepare_out(cfg);
    Dataset ds = detail::obtain_dataset(cfg, dir);
    Rng rng(cfg.seed + 1);
    Splits sp = split_dataset(ds, cfg.split, rng);

    DpiVae m(cfg.model, rng);
    if (cfg.case_id == CaseId::bridge) {
        auto spath = dir / "surrogate.json";
        if (std::filesystem::exists(spath)) {
            m.physics().set_surrogate(Surrogate::load(spath.string()));
        } else {
            Rng srng = rng.split();
            Surrogate sur = train_bridge_surrogate(BridgeCase{}, srng);
            sur.save(spath.string());
            m.physics().set_surrogate(std::move(sur));
        }
    }

    TrainConfig tc = cfg.train;
    tc.log_path = (dir / "training_log.csv").string();
    TrainResult res = train_model(m, sp.train, sp.val, tc, rng);
    m.save((dir / "model.json").string());

    nlohmann::json summary = {{"epochs_run", res.epochs_run},
                              {"best_epoch", res.best_epoch},
                              {"best_val_elbo", res.best_val_elbo},
                              {"final_train_elbo", res.final_train_elbo},
                              {"early_stopped", res.early_stopped},
                              {"sigma_x", m.sigma_x()}};
    std::ofstream f(dir / "train_summary.json");
    f << summary.dump(2) << "\n";
    return 0;
}

/// Scores the trained model with the latent-subset regression procedure and
/// writes the per-(subset, factor) table.
inline int cmd_evaluate(const ExperimentConfig& cfg) {
    auto dir = detail::prepare_out(cfg);
    DpiVae m = detail::obtain_model(cfg, dir);
    Rng rng(cfg.seed + 2);
    DisentanglementReport rep = disentanglement_scores(
        m, cfg.noise, cfg.eval_train, cfg.eval_test, rng);

    auto f = detail::open_csv(dir / "disentanglement.csv");
    f << "subset,factor,r2\n";
    const char* subsets[3] = {"z_x", "z_c", "z_y"};
    for (int i = 0; i < 3; ++i)
        for (std::size_t jf = 0; jf < rep.factor_names.size(); ++jf)
            f << subsets[i] << "," << rep.factor_names[jf] << ","
              << rep.r2(i, static_cast<int>(jf)) << "\n";
    return 0;
}

/// Traverses one generative factor and writes both the raw decomposition
/// records and the per-grid mean and +/-2 sigma plot bands.
inline int cmd_traverse(const ExperimentConfig& cfg) {
    if (cfg.traverse_factor.empty())
        throw ConfigError("config: traverse.factor is required");
    auto dir = detail::prepare_out(cfg);
    DpiVae m = detail::obtain_model(cfg, dir);
    Rng rng(cfg.seed + 3);
    TraversalResult tr =
        traverse(m, cfg.traverse_factor, cfg.traverse_fixed, cfg.traverse_grid,
                 cfg.traverse_real, cfg.noise, rng);

    const int d_x = m.definition().d_x;
    {
        auto f = detail::open_csv(dir / "traversal_records.csv");
        f << "grid_value,realization";
        for (int j = 0; j < m.layout().d_z(); ++j) f << ",z_" << j;
        for (const char* tag : {"physics", "correction", "combined"})
            for (int j = 0; j < d_x; ++j) f << "," << tag << "_" << j;
        f << "\n";
        for (int g = 0; g < cfg.traverse_grid; ++g) {
            for (int i = 0; i < cfg.traverse_real; ++i) {
                f << tr.grid[g] << "," << i;
                for (int j = 0; j < m.layout().d_z(); ++j)
                    f << "," << tr.latents[g](i, j);
                for (const Mat* comp : {&tr.x_physics[g], &tr.x_correction[g],
                                        &tr.x_combined[g]})
                    for (int j = 0; j < d_x; ++j) f << "," << (*comp)(i, j);
                f << "\n";
            }
        }
    }
    {
        auto f = detail::open_csv(dir / "traversal_bands.csv");
        f << "grid_value,channel,mean_physics,mean_correction,mean,lo,hi\n";
        for (int g = 0; g < cfg.traverse_grid; ++g) {
            for (int j = 0; j < d_x; ++j) {
                double mp = tr.x_physics[g].col(j).mean();
                double mc = tr.x_correction[g].col(j).mean();
                double mu = tr.x_combined[g].col(j).mean();
                double sd = std::sqrt(
                    (tr.x_combined[g].col(j).array() - mu).square().mean());
                f << tr.grid[g] << "," << j << "," << mp << "," << mc << ","
                  << mu << "," << mu - 2 * sd << "," << mu + 2 * sd << "\n";
            }
        }
    }
    return 0;
}

/// Sweeps the gradient-reversal coefficient; (lambda, run) cells are
/// independent and fan out to the worker pool. Each cell owns its rng, data
/// and model, and cells are pre-seeded in a fixed order so the result does
/// not depend on the worker count.
inline int cmd_sweep(const ExperimentConfig& cfg) {
    auto dir = detail::prepare_out(cfg);
    const CaseDefinition def = case_definition(cfg.case_id);
    const int n_lambda = static_cast<int>(cfg.sweep_lambdas.size());
    const int n_cells = n_lambda * cfg.sweep_runs;

    Rng root(cfg.seed + 4);
    std::vector<Rng> cell_rng;
    cell_rng.reserve(n_cells);
    for (int i = 0; i < n_cells; ++i) cell_rng.push_back(root.split());

    std::vector<Mat> scores(n_cells);
    parallel_for(n_cells, cfg.workers, [&](int i) {
        Rng rng = cell_rng[i];
        const double lambda = cfg.sweep_lambdas[i / cfg.sweep_runs];
        Mat s = sample_generative_factors(def, cfg.n_data, rng);
        Dataset ds = generate_observations(def, s, cfg.noise, rng);
        Splits sp = split_dataset(ds, cfg.split, rng);
        DpiVae m(cfg.model, rng);
        TrainConfig tc = cfg.train;
        tc.objective.lambda = lambda;
        train_model(m, sp.train, sp.val, tc, rng);
        scores[i] = disentanglement_scores(m, cfg.noise, cfg.eval_train,
                                           cfg.eval_test, rng)
                        .r2;
    });

    auto f = detail::open_csv(dir / "sweep.csv");
    f << "lambda,subset,factor,mean_r2,band_r2\n";
    const char* subsets[3] = {"z_x", "z_c", "z_y"};
    for (int li = 0; li < n_lambda; ++li) {
        Mat mean = Mat::Zero(3, def.n_factors());
        for (int r = 0; r < cfg.sweep_runs; ++r)
            mean += scores[li * cfg.sweep_runs + r];
        mean /= static_cast<double>(cfg.sweep_runs);
        Mat var = Mat::Zero(3, def.n_factors());
        for (int r = 0; r < cfg.sweep_runs; ++r)
            var += (scores[li * cfg.sweep_runs + r] - mean)
                       .array()
                       .square()
                       .matrix();
        if (cfg.sweep_runs > 1) var /= static_cast<double>(cfg.sweep_runs - 1);
        for (int i = 0; i < 3; ++i)
            for (int jf = 0; jf < def.n_factors(); ++jf)
                f << cfg.sweep_lambdas[li] << "," << subsets[i] << ","
                  << def.factors[jf].name << "," << mean(i, jf) << ","
                  << 2.0 * std::sqrt(var(i, jf)) << "\n";
    }
    return 0;
}

/// Runs the five-model class-prediction benchmark. Cells over
/// (mode, quadrant, run) fan out to the worker pool; the frozen physics
/// surrogate is trained once and copied into each cell.
inline int cmd_benchmark(const ExperimentConfig& cfg) {
    auto dir = detail::prepare_out(cfg);
    const CaseDefinition def = case_definition(cfg.case_id);

    BenchmarkConfig bc = default_benchmark_config(cfg.case_id);
    bc.runs = cfg.benchmark_runs;
    bc.n_data = cfg.n_data;
    bc.noise = cfg.noise;
    bc.train_a.max_epochs = bc.train_b.max_epochs = cfg.train.max_epochs;
    bc.train_a.patience = bc.train_b.patience = cfg.train.patience;

    Rng root(cfg.seed + 5);
    std::optional<Surrogate> surrogate;
    if (cfg.case_id == CaseId::bridge) {
        Rng srng = root.split();
        surrogate = train_bridge_surrogate(BridgeCase{}, srng);
    }

    struct Cell {
        QuadrantMode mode;
        int quadrant, run;
        Rng rng;
    };
    std::vector<Cell> cells;
    for (QuadrantMode mode : bc.modes)
        for (int q = 0; q < 4; ++q)
            for (int run = 0; run < bc.runs; ++run)
                cells.push_back({mode, q, run, root.split()});

    std::vector<std::vector<BenchmarkRecord>> recs(cells.size());
    auto push = [&](int ci, const std::string& model, const Cell& cell,
                    const Mat& y_true, const Mat& y_pred) {
        BenchmarkRecord rec;
        rec.model = model;
        rec.mode = cell.mode;
        rec.quadrant = cell.quadrant;
        rec.run = cell.run;
        rec.r2 = r_squared_multi(y_true, y_pred);
        rec.mse = mean_squared_error(y_true, y_pred);
        recs[ci].push_back(rec);
    };
    parallel_for(static_cast<int>(cells.size()), cfg.workers, [&](int ci) {
        Cell cell = cells[ci];
        Rng& rng = cell.rng;
        Mat s = sample_generative_factors(def, bc.n_data, rng);
        Dataset ds = generate_observations(def, s, bc.noise, rng);
        QuadrantIndices qi = quadrant_split(def, ds, cell.mode, cell.quadrant);
        Dataset test = ds.rows(qi.test);
        Dataset fit = ds.rows(qi.train);
        for (BaselineKind kind :
             {BaselineKind::lin, BaselineKind::gpr, BaselineKind::mlp}) {
            Rng brng = rng.split();
            auto b = fit_baseline(kind, fit.X, fit.Y, bc.baselines, brng);
            push(ci, b->name(), cell, test.Y, b->predict(test.X));
        }
        std::vector<int> tr_idx, val_idx;
        detail::split_indices(qi.train, bc.val_fraction, rng, tr_idx, val_idx);
        Dataset tr = ds.rows(tr_idx), val = ds.rows(val_idx);
        const std::pair<std::string, bool> variants[2] = {{"DPIVAE-A", true},
                                                          {"DPIVAE-B", false}};
        for (const auto& [name, is_a] : variants) {
            Rng mrng = rng.split();
            DpiVae m(is_a ? bc.model_a : bc.model_b, mrng);
            if (surrogate) m.physics().set_surrogate(*surrogate);
            train_model(m, tr, val, is_a ? bc.train_a : bc.train_b, mrng);
            push(ci, name, cell, test.Y, predict_class(m, test.X).mean);
        }
    });

    BenchmarkResult result;
    result.case_id = cfg.case_id;
    for (auto& r : recs)
        for (auto& rec : r) result.records.push_back(rec);

    auto f = detail::open_csv(dir / "benchmark.csv");
    f << "model,mode,quadrant,run,r2,mse\n";
    for (const auto& rec : result.records)
        f << rec.model << "," << quadrant_mode_name(rec.mode) << ","
          << rec.quadrant
          << "," << rec.run << "," << rec.r2 << "," << rec.mse << "\n";

    nlohmann::json summary;
    for (const auto& [key, stats] : result.summarize())
        summary[key] = {{"mean_r2", stats.mean_r2},
                        {"std_r2", stats.std_r2},
                        {"mean_mse", stats.mean_mse},
                        {"samples", stats.samples}};
    std::ofstream sf(dir / "benchmark_summary.json");
    sf << summary.dump(2) << "\n";
    return 0;
}

}  // namespace dpivae
