#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpivae/cases.hpp"
#include "dpivae/physics/beam.hpp"
#include "dpivae/physics/bridge.hpp"
#include "dpivae/physics/oscillator.hpp"

namespace dpivae {

/// One synthetic corpus: ground-truth factors plus the noisy observations the
/// model is allowed to see.
struct Dataset {
    CaseId case_id = CaseId::beam;
    Mat S;  // n x n_factors, generative factors in definition order
    Mat X;  // n x d_x, noisy responses
    Mat C;  // n x d_c, noisy domain observables
    Mat Y;  // n x d_y, noisy class observables

    int n() const { return static_cast<int>(S.rows()); }

    Dataset rows(const std::vector<int>& idx) const {
        Dataset out;
        out.case_id = case_id;
        out.S.resize(idx.size(), S.cols());
        out.X.resize(idx.size(), X.cols());
        out.C.resize(idx.size(), C.cols());
        out.Y.resize(idx.size(), Y.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.S.row(i) = S.row(idx[i]);
            out.X.row(i) = X.row(idx[i]);
            out.C.row(i) = C.row(idx[i]);
            out.Y.row(i) = Y.row(idx[i]);
        }
        return out;
    }
};

/// Independent uniform draws over every factor's ground-truth range.
inline Mat sample_generative_factors(const CaseDefinition& def, int n,
                                     Rng& rng) {
    Mat s(n, def.n_factors());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < def.n_factors(); ++j)
            s(i, j) = rng.uniform(def.factors[j].lo, def.factors[j].hi);
    return s;
}

/// Noise-free ground-truth response for one factor row.
inline Vec ground_truth_response(const CaseDefinition& def, const Vec& s) {
    switch (def.id) {
        case CaseId::beam: {
            BeamCase c;
            return beam_full_response(s[def.factor_index("E")],
                                      s[def.factor_index("x_F")],
                                      s[def.factor_index("T")],
                                      s[def.factor_index("log_kv")], c);
        }
        case CaseId::oscillator: {
            OscillatorCase c;
            return oscillator_full(s[def.factor_index("m")],
                                   s[def.factor_index("zeta")],
                                   s[def.factor_index("T")],
                                   s[def.factor_index("x0")], c);
        }
        case CaseId::bridge: {
            BridgeCase c;
            return bridge_full_strain(
                s[def.factor_index("log_kv1")], s[def.factor_index("log_kv2")],
                s[def.factor_index("y1")], s[def.factor_index("y2")],
                s[def.factor_index("y3")], s[def.factor_index("delta_v")],
                s[def.factor_index("delta_s")], s[def.factor_index("delta_F")],
                c);
        }
    }
    throw ConfigError("ground truth: unknown case");
}

/// Full observation model: the ground-truth responses and the domain/class
/// factors, each perturbed with independent Gaussian noise.
inline Dataset generate_observations(const CaseDefinition& def, const Mat& s,
                                     const NoiseSpec& noise, Rng& rng) {
    noise.validate();
    const int n = static_cast<int>(s.rows());
    Dataset ds;
    ds.case_id = def.id;
    ds.S = s;
    ds.X.resize(n, def.d_x);
    ds.C.resize(n, def.d_c);
    ds.Y.resize(n, def.d_y);
    auto dom = def.indices(FactorGroup::domain);
    auto cls = def.indices(FactorGroup::cls);
    if (static_cast<int>(dom.size()) != def.d_c ||
        static_cast<int>(cls.size()) != def.d_y)
        throw ConfigError("datagen: factor groups inconsistent with d_c/d_y");
    for (int i = 0; i < n; ++i) {
        Vec x = ground_truth_response(def, s.row(i).transpose());
        for (int j = 0; j < def.d_x; ++j)
            ds.X(i, j) = x[j] + rng.normal(0.0, noise.sigma_x);
        for (int j = 0; j < def.d_c; ++j)
            ds.C(i, j) = s(i, dom[j]) + rng.normal(0.0, noise.sigma_c);
        for (int j = 0; j < def.d_y; ++j)
            ds.Y(i, j) = s(i, cls[j]) + rng.normal(0.0, noise.sigma_y);
    }
    return ds;
}

struct SplitSpec {
    double train = 0.5;   // 1024 of the reference 2048-record dataset
    double val = 0.25;    // remainder is test
};

struct Splits {
    Dataset train, val, test;
};

/// Shuffled train/validation/test partition.
inline Splits split_dataset(const Dataset& ds, const SplitSpec& spec,
                            Rng& rng) {
    if (spec.train <= 0.0 || spec.val < 0.0 || spec.train + spec.val >= 1.0)
        throw ConfigError("split: fractions must leave room for a test set");
    std::vector<int> order(ds.n());
    for (int i = 0; i < ds.n(); ++i) order[i] = i;
    for (int i = ds.n() - 1; i > 0; --i) {
        int j = std::min(static_cast<int>(rng.uniform(0.0, i + 1.0)), i);
        std::swap(order[i], order[j]);
    }
    int n_train = static_cast<int>(spec.train * ds.n());
    int n_val = static_cast<int>(spec.val * ds.n());
    Splits out;
    out.train = ds.rows({order.begin(), order.begin() + n_train});
    out.val = ds.rows({order.begin() + n_train, order.begin() + n_train + n_val});
    out.test = ds.rows({order.begin() + n_train + n_val, order.end()});
    return out;
}

/// Quadrant index over the first two physics factors, split at the midpoints
/// of their generative ranges: bit 0 for the first factor, bit 1 for the
/// second. Quadrant 3 (both above midpoint) is the extrapolation region.
inline int quadrant_of(const CaseDefinition& def, const Vec& s) {
    auto phys = def.indices(FactorGroup::physics);
    if (phys.size() < 2)
        throw ConfigError("quadrant split: needs two physics factors");
    int q = 0;
    for (int b = 0; b < 2; ++b) {
        const FactorSpec& f = def.factors[phys[b]];
        if (s[phys[b]] > 0.5 * (f.lo + f.hi)) q |= (1 << b);
    }
    return q;
}

enum class QuadrantMode { interpolation, extrapolation };

struct QuadrantIndices {
    std::vector<int> train;
    std::vector<int> test;
};

/// Interpolation: train on three quarters, test on the chosen one.
/// Extrapolation: train on the chosen quarter only, test on the other three.
inline QuadrantIndices quadrant_split(const CaseDefinition& def,
                                      const Dataset& ds, QuadrantMode mode,
                                      int quadrant_index) {
    if (quadrant_index < 0 || quadrant_index > 3)
        throw ConfigError("quadrant split: index must be in 0..3");
    QuadrantIndices out;
    for (int i = 0; i < ds.n(); ++i) {
        bool chosen =
            quadrant_of(def, ds.S.row(i).transpose()) == quadrant_index;
        bool is_train =
            (mode == QuadrantMode::interpolation) ? !chosen : chosen;
        (is_train ? out.train : out.test).push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV persistence with a JSON sidecar carrying the generation settings
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& csv_path,
                         const NoiseSpec& noise, unsigned long long seed) {
    const CaseDefinition def = case_definition(ds.case_id);
    std::ofstream f(csv_path);
    if (!f) throw ConfigError("dataset: cannot write " + csv_path);
    f.precision(17);
    for (int j = 0; j < def.n_factors(); ++j)
        f << "s_" << def.factors[j].name << ",";
    for (int j = 0; j < def.d_x; ++j) f << "x_" << j << ",";
    for (int j = 0; j < def.d_c; ++j) f << "c_" << j << ",";
    for (int j = 0; j < def.d_y; ++j)
        f << "y_" << j << (j + 1 < def.d_y ? "," : "\n");
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < def.n_factors(); ++j) f << ds.S(i, j) << ",";
        for (int j = 0; j < def.d_x; ++j) f << ds.X(i, j) << ",";
        for (int j = 0; j < def.d_c; ++j) f << ds.C(i, j) << ",";
        for (int j = 0; j < def.d_y; ++j)
            f << ds.Y(i, j) << (j + 1 < def.d_y ? "," : "\n");
    }

    nlohmann::json meta;
    meta["case"] = to_string(ds.case_id);
    meta["n"] = ds.n();
    meta["seed"] = seed;
    meta["noise"] = {{"sigma_x", noise.sigma_x},
                     {"sigma_c", noise.sigma_c},
                     {"sigma_y", noise.sigma_y}};
    std::ofstream mf(csv_path + ".json");
    if (!mf) throw ConfigError("dataset: cannot write sidecar for " + csv_path);
    mf << meta.dump(2) << "\n";
}

inline Dataset load_dataset(const std::string& csv_path) {
    std::ifstream mf(csv_path + ".json");
    if (!mf) throw ConfigError("dataset: missing sidecar for " + csv_path);
    nlohmann::json meta;
    mf >> meta;
    const CaseDefinition def =
        case_definition(case_from_string(meta.at("case").get<std::string>()));

    std::ifstream f(csv_path);
    if (!f) throw ConfigError("dataset: cannot read " + csv_path);
    std::string line;
    if (!std::getline(f, line))
        throw ConfigError("dataset: empty file " + csv_path);
    const int n_cols = def.n_factors() + def.d_x + def.d_c + def.d_y;
    {
        std::stringstream hs(line);
        std::string tok;
        int seen = 0;
        while (std::getline(hs, tok, ',')) ++seen;
        if (seen != n_cols)
            throw ConfigError("dataset: header does not match the case layout");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(n_cols);
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
        if (static_cast<int>(row.size()) != n_cols)
            throw ConfigError("dataset: ragged row in " + csv_path);
        rows.push_back(std::move(row));
    }
    Dataset ds;
    ds.case_id = def.id;
    const int n = static_cast<int>(rows.size());
    ds.S.resize(n, def.n_factors());
    ds.X.resize(n, def.d_x);
    ds.C.resize(n, def.d_c);
    ds.Y.resize(n, def.d_y);
    for (int i = 0; i < n; ++i) {
        int k = 0;
        for (int j = 0; j < def.n_factors(); ++j) ds.S(i, j) = rows[i][k++];
        for (int j = 0; j < def.d_x; ++j) ds.X(i, j) = rows[i][k++];
        for (int j = 0; j < def.d_c; ++j) ds.C(i, j) = rows[i][k++];
        for (int j = 0; j < def.d_y; ++j) ds.Y(i, j) = rows[i][k++];
    }
    if (meta.contains("n") && meta["n"].get<int>() != n)
        throw ConfigError("dataset: sidecar row count disagrees with the CSV");
    return ds;
}

}  // namespace dpivae
