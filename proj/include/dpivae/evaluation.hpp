#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dpivae/datagen.hpp"
#include "dpivae/training.hpp"

namespace dpivae {

/// Coefficient of determination, 1 - SS_res / SS_tot.
inline double r_squared(const Vec& y_true, const Vec& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() < 2)
        throw ConfigError("r_squared: need two equal-length vectors");
    double mean = y_true.mean();
    double ss_tot = (y_true.array() - mean).square().sum();
    if (ss_tot <= 0.0)
        throw NumericError("r_squared: constant target");
    double ss_res = (y_true - y_pred).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

/// Column-averaged R^2 for multi-output predictions.
inline double r_squared_multi(const Mat& y_true, const Mat& y_pred) {
    double acc = 0.0;
    for (int j = 0; j < y_true.cols(); ++j)
        acc += r_squared(y_true.col(j), y_pred.col(j));
    return acc / y_true.cols();
}

inline double mean_squared_error(const Mat& y_true, const Mat& y_pred) {
    return (y_true - y_pred).array().square().mean();
}

/// Ordinary least squares with intercept; features in rows of x.
struct LinearRegressor {
    Vec coef;
    double intercept = 0.0;

    static LinearRegressor fit(const Mat& x, const Vec& y) {
        Mat a(x.rows(), x.cols() + 1);
        a.leftCols(x.cols()) = x;
        a.col(x.cols()).setOnes();
        Vec sol = a.colPivHouseholderQr().solve(y);
        LinearRegressor r;
        r.coef = sol.head(x.cols());
        r.intercept = sol[x.cols()];
        return r;
    }

    Vec predict(const Mat& x) const {
        return (x * coef).array() + intercept;
    }
};

// ---------------------------------------------------------------------------
// Disentanglement scoring
// ---------------------------------------------------------------------------

struct DisentanglementReport {
    Mat r2;  // 3 x n_factors: rows are latent subsets {z_x, z_c, z_y}
    std::vector<std::string> factor_names;
    int n_train = 0;
    int n_test = 0;
    std::string regressor_id = "linear";
};

/// One posterior sample per record, physics block reported in constrained
/// coordinates. Returns an n x d_z matrix.
inline Mat posterior_samples(DpiVae& m, const Mat& x, Rng& rng) {
    Encoder::Output eo = m.encode(x);
    Mat eps = rng.normal_mat(static_cast<int>(x.rows()), m.layout().d_z());
    Mat u = sample_reparam(eo.q, eps);
    u.leftCols(m.layout().d_zx) =
        m.workspace().to_constrained(u.leftCols(m.layout().d_zx));
    return u;
}

/// The four-step procedure: fresh factor draws for train and test, one
/// posterior sample each, a linear regressor per (latent subset, factor)
/// pair fit on train and scored on test. Degenerate targets yield NaN.
inline DisentanglementReport disentanglement_scores(DpiVae& m,
                                                    const NoiseSpec& noise,
                                                    int n_train, int n_test,
                                                    Rng& rng) {
    const CaseDefinition& def = m.definition();
    Mat s_tr = sample_generative_factors(def, n_train, rng);
    Mat s_te = sample_generative_factors(def, n_test, rng);
    Dataset tr = generate_observations(def, s_tr, noise, rng);
    Dataset te = generate_observations(def, s_te, noise, rng);
    Mat z_tr = posterior_samples(m, tr.X, rng);
    Mat z_te = posterior_samples(m, te.X, rng);

    const auto& lay = m.layout();
    const int offs[4] = {0, lay.d_zx, lay.d_zx + lay.d_zc, lay.d_z()};

    DisentanglementReport rep;
    rep.n_train = n_train;
    rep.n_test = n_test;
    rep.r2 = Mat::Constant(3, def.n_factors(),
                           std::numeric_limits<double>::quiet_NaN());
    for (const auto& f : def.factors) rep.factor_names.push_back(f.name);
    for (int b = 0; b < 3; ++b) {
        Mat f_tr = z_tr.middleCols(offs[b], offs[b + 1] - offs[b]);
        Mat f_te = z_te.middleCols(offs[b], offs[b + 1] - offs[b]);
        for (int j = 0; j < def.n_factors(); ++j) {
            try {
                LinearRegressor reg = LinearRegressor::fit(f_tr, s_tr.col(j));
                rep.r2(b, j) = r_squared(s_te.col(j), reg.predict(f_te));
            } catch (const NumericError&) {
                // degenerate variance: leave the entry missing
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Traversals
// ---------------------------------------------------------------------------

struct TraversalResult {
    std::string factor;
    Vec grid;                    // n_grid factor values
    std::vector<Mat> latents;    // per grid value: n_real x d_z samples
    std::vector<Mat> x_physics;  // per grid value: n_real x d_x
    std::vector<Mat> x_correction;
    std::vector<Mat> x_combined;  // includes the sigma_x observation draw
};

/// Traverses a ground-truth factor between its 5th and 95th percentiles,
/// regenerating fresh noisy observations at each grid value; any factors
/// named in fixed_values stay pinned, the rest are resampled.
inline TraversalResult traverse(DpiVae& m, const std::string& factor,
                                const std::map<std::string, double>& fixed_values,
                                int n_grid, int n_real, const NoiseSpec& noise,
                                Rng& rng) {
    const CaseDefinition& def = m.definition();
    const int fj = def.factor_index(factor);
    const FactorSpec& fs = def.factors[fj];
    const double range = fs.hi - fs.lo;

    TraversalResult out;
    out.factor = factor;
    out.grid = linspace(fs.lo + 0.05 * range, fs.lo + 0.95 * range, n_grid);
    for (int g = 0; g < n_grid; ++g) {
        Mat s = sample_generative_factors(def, n_real, rng);
        for (const auto& [name, value] : fixed_values)
            s.col(def.factor_index(name)).setConstant(value);
        s.col(fj).setConstant(out.grid[g]);
        Dataset ds = generate_observations(def, s, noise, rng);

        Encoder::Output eo = m.encode(ds.X);
        Mat eps = rng.normal_mat(n_real, m.layout().d_z());
        Mat u = sample_reparam(eo.q, eps);
        DpiVae::Decoded dec = m.decode(u);
        Mat comb = dec.x_hat +
                   m.sigma_x() * rng.normal_mat(n_real, def.d_x);
        out.latents.push_back(std::move(u));
        out.x_physics.push_back(std::move(dec.x_physics));
        out.x_correction.push_back(std::move(dec.x_correction));
        out.x_combined.push_back(std::move(comb));
    }
    return out;
}

/// Standard deviation across grid values of the per-grid mean prediction,
/// aggregated over output channels. Measures how strongly a decoder
/// component responds to the traversed factor.
inline double traversal_component_std(const std::vector<Mat>& component) {
    const int n_grid = static_cast<int>(component.size());
    const int d = static_cast<int>(component[0].cols());
    Mat means(n_grid, d);
    for (int g = 0; g < n_grid; ++g)
        means.row(g) = component[g].colwise().mean();
    Vec center = means.colwise().mean().transpose();
    double var = (means.rowwise() - center.transpose()).array().square().sum() /
                 (n_grid * d);
    return std::sqrt(var);
}

// ---------------------------------------------------------------------------
// Class prediction
// ---------------------------------------------------------------------------

struct ClassPrediction {
    Mat mean;  // n x d_y
    Mat std;   // n x d_y
};

/// Deterministic path: posterior mean of z_y through the class decoder.
inline ClassPrediction predict_class(DpiVae& m, const Mat& x) {
    Encoder::Output eo = m.encode(x);
    const auto& lay = m.layout();
    Mat uy = eo.q.mean.rightCols(lay.d_zy);
    Mat h = m.aux_y().apply(uy);
    const int d_y = m.definition().d_y;
    ClassPrediction out;
    out.mean = h.leftCols(d_y);
    out.std = clamp(h.rightCols(d_y), kLogStdLo, kLogStdHi)
                  .value.array()
                  .exp()
                  .matrix();
    return out;
}

// ---------------------------------------------------------------------------
// Lambda sweep
// ---------------------------------------------------------------------------

struct SweepEntry {
    double lambda = 0.0;
    Mat mean_r2;  // 3 x n_factors, averaged over runs
    Mat band_r2;  // two standard deviations over runs
    int runs = 0;
};

struct SweepConfig {
    int runs_per_lambda = 3;
    int n_data = 2048;
    int n_score_train = 1024;
    int n_score_test = 512;
    SplitSpec split;
};

/// Trains fresh models per (lambda, run) with resampled data and
/// initialization, then averages the disentanglement scores.
inline std::vector<SweepEntry> lambda_sweep(
    const std::vector<double>& lambdas, const ModelConfig& mc,
    const TrainConfig& tc, const NoiseSpec& noise, const SweepConfig& sc,
    Rng& rng) {
    if (sc.runs_per_lambda < 1)
        throw ConfigError("sweep: runs_per_lambda must be >= 1");
    const CaseDefinition def = case_definition(mc.case_id);
    std::vector<SweepEntry> out;
    for (double lambda : lambdas) {
        SweepEntry e;
        e.lambda = lambda;
        e.runs = sc.runs_per_lambda;
        std::vector<Mat> scores;
        for (int run = 0; run < sc.runs_per_lambda; ++run) {
            Rng run_rng = rng.split();
            Mat s = sample_generative_factors(def, sc.n_data, run_rng);
            Dataset ds = generate_observations(def, s, noise, run_rng);
            Splits sp = split_dataset(ds, sc.split, run_rng);
            DpiVae m(mc, run_rng);
            TrainConfig cfg = tc;
            cfg.objective.lambda = lambda;
            try {
                train_model(m, sp.train, sp.val, cfg, run_rng);
            } catch (const NumericError& err) {
                throw NumericError("sweep: lambda " + std::to_string(lambda) +
                                   " run " + std::to_string(run) + ": " +
                                   err.what());
            }
            scores.push_back(disentanglement_scores(m, noise, sc.n_score_train,
                                                    sc.n_score_test, run_rng)
                                 .r2);
        }
        Mat mean = Mat::Zero(3, def.n_factors());
        for (const Mat& s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        Mat var = Mat::Zero(3, def.n_factors());
        for (const Mat& s : scores) var += (s - mean).array().square().matrix();
        if (scores.size() > 1) var /= static_cast<double>(scores.size() - 1);
        e.mean_r2 = mean;
        e.band_r2 = 2.0 * var.array().sqrt().matrix();
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace dpivae
