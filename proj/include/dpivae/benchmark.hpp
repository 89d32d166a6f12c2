#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "dpivae/baselines.hpp"
#include "dpivae/evaluation.hpp"

namespace dpivae {

/// Settings for the class-prediction benchmark: every model maps the response
/// vector to the class observables, trained and scored on quadrant splits of
/// the first two physics factors.
struct BenchmarkConfig {
    CaseId case_id = CaseId::bridge;
    int runs = 3;       // independent seeds per (mode, quadrant) sub-case
    int n_data = 2048;  // records per generated dataset
    double val_fraction = 0.15;  // carved from the training quadrant(s)
    ModelConfig model_a;         // cooperative variant, separate encoders
    ModelConfig model_b;         // adversarial variant, shared encoder
    TrainConfig train_a;
    TrainConfig train_b;
    BaselineConfig baselines;
    NoiseSpec noise;
    std::vector<QuadrantMode> modes = {QuadrantMode::interpolation,
                                       QuadrantMode::extrapolation};
};

inline BenchmarkConfig default_benchmark_config(CaseId id) {
    BenchmarkConfig cfg;
    cfg.case_id = id;
    const CaseDefinition def = case_definition(id);
    cfg.noise = def.default_noise;
    cfg.model_a.case_id = id;
    cfg.model_a.separate_encoders = true;
    cfg.model_b.case_id = id;
    cfg.train_a.objective.lambda = -1.0;
    cfg.train_b.objective.lambda = 1.0 / 1024.0;
    return cfg;
}

struct BenchmarkRecord {
    std::string model;
    QuadrantMode mode;
    int quadrant = 0;
    int run = 0;
    double r2 = 0.0;
    double mse = 0.0;
};

struct BenchmarkCell {
    double mean_r2 = 0.0;
    double std_r2 = 0.0;
    double mean_mse = 0.0;
    double std_mse = 0.0;
    int samples = 0;
};

inline std::string quadrant_mode_name(QuadrantMode m) {
    return m == QuadrantMode::interpolation ? "interpolation" : "extrapolation";
}

struct BenchmarkResult {
    CaseId case_id = CaseId::bridge;
    std::vector<BenchmarkRecord> records;

    /// Mean/standard deviation per (model, mode), pooled over quadrant
    /// sub-cases and runs. Keys are "MODEL/mode".
    std::map<std::string, BenchmarkCell> summarize() const {
        std::map<std::string, std::vector<const BenchmarkRecord*>> groups;
        for (const auto& r : records)
            groups[r.model + "/" + quadrant_mode_name(r.mode)].push_back(&r);
        std::map<std::string, BenchmarkCell> out;
        for (const auto& [key, rs] : groups) {
            BenchmarkCell c;
            c.samples = static_cast<int>(rs.size());
            for (const auto* r : rs) {
                c.mean_r2 += r->r2;
                c.mean_mse += r->mse;
            }
            c.mean_r2 /= c.samples;
            c.mean_mse /= c.samples;
            if (c.samples > 1) {
                double vr = 0.0, vm = 0.0;
                for (const auto* r : rs) {
                    vr += (r->r2 - c.mean_r2) * (r->r2 - c.mean_r2);
                    vm += (r->mse - c.mean_mse) * (r->mse - c.mean_mse);
                }
                c.std_r2 = std::sqrt(vr / (c.samples - 1));
                c.std_mse = std::sqrt(vm / (c.samples - 1));
            }
            out[key] = c;
        }
        return out;
    }
};

namespace detail {

/// Shuffled train/validation split of a row subset.
inline void split_indices(const std::vector<int>& idx, double val_fraction,
                          Rng& rng, std::vector<int>& train,
                          std::vector<int>& val) {
    std::vector<int> order = idx;
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
        int j = std::min(static_cast<int>(rng.uniform(0.0, i + 1.0)), i);
        std::swap(order[i], order[j]);
    }
    int n_val = std::max(1, static_cast<int>(val_fraction * order.size()));
    val.assign(order.begin(), order.begin() + n_val);
    train.assign(order.begin() + n_val, order.end());
}

inline void score(BenchmarkResult& out, const std::string& model,
                  QuadrantMode mode, int quadrant, int run, const Mat& y_true,
                  const Mat& y_pred) {
    BenchmarkRecord rec;
    rec.model = model;
    rec.mode = mode;
    rec.quadrant = quadrant;
    rec.run = run;
    rec.r2 = r_squared_multi(y_true, y_pred);
    rec.mse = mean_squared_error(y_true, y_pred);
    out.records.push_back(rec);
}

}  // namespace detail

/// Runs the full class-prediction benchmark: for each quadrant mode, each of
/// the four quadrant sub-cases, and each run, a fresh dataset is generated
/// and all five models are fit on the training portion and scored on the
/// held-out quadrant(s).
inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, Rng& rng) {
    if (cfg.runs < 1) throw ConfigError("benchmark: runs must be >= 1");
    const CaseDefinition def = case_definition(cfg.case_id);
    BenchmarkResult out;
    out.case_id = cfg.case_id;

    // The frozen physics surrogate is shared by every DPIVAE fit.
    std::optional<Surrogate> surrogate;
    if (cfg.case_id == CaseId::bridge) {
        Rng srng = rng.split();
        surrogate = train_bridge_surrogate(BridgeCase{}, srng);
    }

    for (QuadrantMode mode : cfg.modes) {
        for (int q = 0; q < 4; ++q) {
            for (int run = 0; run < cfg.runs; ++run) {
                Rng run_rng = rng.split();
                Mat s = sample_generative_factors(def, cfg.n_data, run_rng);
                Dataset ds = generate_observations(def, s, cfg.noise, run_rng);
                QuadrantIndices qi = quadrant_split(def, ds, mode, q);
                Dataset test = ds.rows(qi.test);

                // Purely data-driven baselines use every training record.
                Dataset fit = ds.rows(qi.train);
                for (BaselineKind kind : {BaselineKind::lin, BaselineKind::gpr,
                                          BaselineKind::mlp}) {
                    Rng brng = run_rng.split();
                    auto b = fit_baseline(kind, fit.X, fit.Y, cfg.baselines,
                                          brng);
                    detail::score(out, b->name(), mode, q, run, test.Y,
                                  b->predict(test.X));
                }

                // The DPIVAE variants carve a validation set for early stop.
                std::vector<int> tr_idx, val_idx;
                detail::split_indices(qi.train, cfg.val_fraction, run_rng,
                                      tr_idx, val_idx);
                Dataset tr = ds.rows(tr_idx);
                Dataset val = ds.rows(val_idx);

                const std::pair<std::string, bool> variants[2] = {
                    {"DPIVAE-A", true}, {"DPIVAE-B", false}};
                for (const auto& [name, is_a] : variants) {
                    Rng mrng = run_rng.split();
                    DpiVae m(is_a ? cfg.model_a : cfg.model_b, mrng);
                    if (surrogate) m.physics().set_surrogate(*surrogate);
                    train_model(m, tr, val, is_a ? cfg.train_a : cfg.train_b,
                                mrng);
                    detail::score(out, name, mode, q, run, test.Y,
                                  predict_class(m, test.X).mean);
                }
            }
        }
    }
    return out;
}

}  // namespace dpivae
