#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dpivae/evaluation.hpp"
#include "dpivae/nn.hpp"

namespace dpivae {

/// Common interface for the purely data-driven reference predictors mapping
/// response vectors to class scores.
class BaselinePredictor {
public:
    virtual ~BaselinePredictor() = default;
    virtual Mat predict(const Mat& x) const = 0;
    virtual std::string name() const = 0;
};

/// Shared input standardization so every baseline sees the same features.
struct FeatureScaler {
    Vec mean, std;
    void fit(const Mat& x) {
        mean = x.colwise().mean().transpose();
        std.resize(x.cols());
        for (int j = 0; j < x.cols(); ++j) {
            double v = (x.col(j).array() - mean[j]).square().mean();
            std[j] = std::max(std::sqrt(v), 1e-12);
        }
    }
    Mat apply(const Mat& x) const {
        return ((x.array().rowwise() - mean.transpose().array()).rowwise() /
                std.transpose().array())
            .matrix();
    }
};

// ---------------------------------------------------------------------------
// LIN: ordinary least squares with intercept
// ---------------------------------------------------------------------------

class LinBaseline : public BaselinePredictor {
public:
    LinBaseline(const Mat& x, const Mat& y) {
        scaler_.fit(x);
        Mat xs = scaler_.apply(x);
        Mat a(xs.rows(), xs.cols() + 1);
        a.leftCols(xs.cols()) = xs;
        a.col(xs.cols()).setOnes();
        w_ = a.colPivHouseholderQr().solve(y);
    }
    Mat predict(const Mat& x) const override {
        Mat xs = scaler_.apply(x);
        Mat a(xs.rows(), xs.cols() + 1);
        a.leftCols(xs.cols()) = xs;
        a.col(xs.cols()).setOnes();
        return a * w_;
    }
    std::string name() const override { return "LIN"; }

private:
    FeatureScaler scaler_;
    Mat w_;
};

// ---------------------------------------------------------------------------
// MLP: two rectified-linear hidden layers
// ---------------------------------------------------------------------------

struct MlpBaselineConfig {
    int hidden = 128;
    int epochs = 400;  // passes over the training set
    int batch = 64;
    double lr = 1e-3;
};

class MlpBaseline : public BaselinePredictor {
public:
    MlpBaseline(const Mat& x, const Mat& y, const MlpBaselineConfig& cfg,
                Rng& rng) {
        scaler_.fit(x);
        y_scaler_.fit(y);
        Mat xs = scaler_.apply(x);
        Mat ys = y_scaler_.apply(y);
        net_ = Mlp({static_cast<int>(x.cols()), cfg.hidden, cfg.hidden,
                    static_cast<int>(y.cols())},
                   rng);
        std::vector<ParamRef> params;
        net_.collect_params(params);
        Adam opt(cfg.lr);
        opt.add_group(params);
        const int n = static_cast<int>(xs.rows());
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        for (int e = 0; e < cfg.epochs; ++e) {
            for (int i = n - 1; i > 0; --i) {
                int j = std::min(static_cast<int>(rng.uniform(0.0, i + 1.0)), i);
                std::swap(order[i], order[j]);
            }
            for (int start = 0; start < n; start += cfg.batch) {
                int bs = std::min(cfg.batch, n - start);
                Mat xb(bs, xs.cols()), yb(bs, ys.cols());
                for (int i = 0; i < bs; ++i) {
                    xb.row(i) = xs.row(order[start + i]);
                    yb.row(i) = ys.row(order[start + i]);
                }
                opt.zero_grad();
                Mat pred = net_.forward(xb);
                net_.backward(2.0 * (pred - yb) /
                              (static_cast<double>(bs) * ys.cols()));
                opt.step();
            }
        }
    }
    Mat predict(const Mat& x) const override {
        Mat ys = net_.apply(scaler_.apply(x));
        return ((ys.array().rowwise() * y_scaler_.std.transpose().array())
                    .rowwise() +
                y_scaler_.mean.transpose().array())
            .matrix();
    }
    std::string name() const override { return "MLP"; }

private:
    FeatureScaler scaler_, y_scaler_;
    Mlp net_;
};

// ---------------------------------------------------------------------------
// GPR: RBF kernel plus white noise, hyperparameters by marginal likelihood
// ---------------------------------------------------------------------------

struct GprConfig {
    int max_opt_points = 512;  // subsample cap for hyperparameter search
    int opt_iters = 150;
    double lr = 0.05;
    double jitter = 1e-10;
};

class GprBaseline : public BaselinePredictor {
public:
    GprBaseline(const Mat& x, const Mat& y, const GprConfig& cfg, Rng& rng)
        : cfg_(cfg) {
        scaler_.fit(x);
        y_mean_ = y.colwise().mean().transpose();
        Mat xs = scaler_.apply(x);
        Mat yc = y.rowwise() - y_mean_.transpose();

        // Hyperparameter search on a bounded subsample, one independent
        // (log ell, log sf, log sn) triple per output column.
        Mat xo = xs, yo = yc;
        if (xs.rows() > cfg.max_opt_points) {
            std::vector<int> idx(xs.rows());
            for (int i = 0; i < xs.rows(); ++i) idx[i] = i;
            for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
                int j = std::min(static_cast<int>(rng.uniform(0.0, i + 1.0)), i);
                std::swap(idx[i], idx[j]);
            }
            xo.resize(cfg.max_opt_points, xs.cols());
            yo.resize(cfg.max_opt_points, yc.cols());
            for (int i = 0; i < cfg.max_opt_points; ++i) {
                xo.row(i) = xs.row(idx[i]);
                yo.row(i) = yc.row(idx[i]);
            }
        }
        hp_.resize(yc.cols());
        for (int j = 0; j < yc.cols(); ++j)
            optimize_hyperparameters(xo, yo.col(j), hp_[j]);

        x_train_ = xs;
        alpha_.resize(xs.rows(), yc.cols());
        for (int j = 0; j < yc.cols(); ++j) {
            Mat k = kernel(xs, xs, hp_[j]);
            k.diagonal().array() += std::exp(2.0 * hp_[j].log_sn) + cfg.jitter;
            Eigen::LLT<Mat> llt(k);
            if (llt.info() != Eigen::Success)
                throw NumericError("gpr: kernel matrix not positive definite");
            alpha_.col(j) = llt.solve(yc.col(j));
        }
    }

    Mat predict(const Mat& x) const override {
        Mat xs = scaler_.apply(x);
        Mat out(x.rows(), alpha_.cols());
        for (int j = 0; j < alpha_.cols(); ++j) {
            Mat ks = kernel(xs, x_train_, hp_[j]);
            out.col(j) = (ks * alpha_.col(j)).array() + y_mean_[j];
        }
        return out;
    }
    std::string name() const override { return "GPR"; }

    double length_scale(int output = 0) const {
        return std::exp(hp_.at(output).log_ell);
    }
    double noise_std(int output = 0) const {
        return std::exp(hp_.at(output).log_sn);
    }

private:
    struct Hyper {
        double log_ell = 0.0;
        double log_sf = 0.0;
        double log_sn = -2.0;
    };

    Mat kernel(const Mat& a, const Mat& b, const Hyper& h) const {
        const double ell2 = std::exp(2.0 * h.log_ell);
        const double sf2 = std::exp(2.0 * h.log_sf);
        Mat d2 = (-2.0 * a * b.transpose());
        d2.colwise() += a.rowwise().squaredNorm();
        d2.rowwise() += b.rowwise().squaredNorm().transpose();
        return (sf2 * (-0.5 * d2.array() / ell2).exp()).matrix();
    }

    void optimize_hyperparameters(const Mat& x, const Vec& y, Hyper& h) {
        const int n = static_cast<int>(x.rows());
        // Median-distance initialization.
        Mat d2 = (-2.0 * x * x.transpose());
        d2.colwise() += x.rowwise().squaredNorm();
        d2.rowwise() += x.rowwise().squaredNorm().transpose();
        double mean_d2 = d2.sum() / (static_cast<double>(n) * n);
        h.log_ell = 0.5 * std::log(std::max(mean_d2, 1e-6));
        double y_var = y.array().square().mean();
        h.log_sf = 0.5 * std::log(std::max(y_var, 1e-12));
        h.log_sn = h.log_sf - 2.0;

        Vec m_adam = Vec::Zero(3), v_adam = Vec::Zero(3);
        for (int it = 1; it <= cfg_.opt_iters; ++it) {
            Mat k = kernel(x, x, h);
            Mat k_noise = k;
            k_noise.diagonal().array() +=
                std::exp(2.0 * h.log_sn) + cfg_.jitter;
            Eigen::LLT<Mat> llt(k_noise);
            if (llt.info() != Eigen::Success)
                throw NumericError("gpr: kernel matrix not positive definite");
            Mat kinv = llt.solve(Mat::Identity(n, n));
            Vec alpha = llt.solve(y);

            // d lml / d theta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
            Mat w = alpha * alpha.transpose() - kinv;
            const double ell2 = std::exp(2.0 * h.log_ell);
            Mat dk_ell = (k.array() * d2.array() / ell2).matrix();
            double g_ell = 0.5 * w.cwiseProduct(dk_ell).sum();
            double g_sf = 0.5 * w.cwiseProduct(2.0 * k).sum();
            double g_sn = 0.5 * w.trace() * 2.0 * std::exp(2.0 * h.log_sn);

            Vec g(3);
            g << -g_ell, -g_sf, -g_sn;  // minimize negative lml
            for (int p = 0; p < 3; ++p) {
                m_adam[p] = 0.9 * m_adam[p] + 0.1 * g[p];
                v_adam[p] = 0.999 * v_adam[p] + 0.001 * g[p] * g[p];
                double mh = m_adam[p] / (1.0 - std::pow(0.9, it));
                double vh = v_adam[p] / (1.0 - std::pow(0.999, it));
                double step = cfg_.lr * mh / (std::sqrt(vh) + 1e-8);
                if (p == 0) h.log_ell -= step;
                if (p == 1) h.log_sf -= step;
                if (p == 2) h.log_sn -= step;
            }
            h.log_sn = std::max(h.log_sn, -6.0);  // keep the solve conditioned
        }
    }

    GprConfig cfg_;
    FeatureScaler scaler_;
    Vec y_mean_;
    Mat x_train_, alpha_;
    std::vector<Hyper> hp_;
};

enum class BaselineKind { lin, gpr, mlp };

struct BaselineConfig {
    MlpBaselineConfig mlp;
    GprConfig gpr;
};

inline std::unique_ptr<BaselinePredictor> fit_baseline(BaselineKind kind,
                                                       const Mat& x,
                                                       const Mat& y,
                                                       const BaselineConfig& cfg,
                                                       Rng& rng) {
    switch (kind) {
        case BaselineKind::lin:
            return std::make_unique<LinBaseline>(x, y);
        case BaselineKind::mlp:
            return std::make_unique<MlpBaseline>(x, y, cfg.mlp, rng);
        case BaselineKind::gpr:
            return std::make_unique<GprBaseline>(x, y, cfg.gpr, rng);
    }
    throw ConfigError("baseline: unknown kind");
}

}  // namespace dpivae
