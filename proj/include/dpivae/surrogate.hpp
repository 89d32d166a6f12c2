#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpivae/cases.hpp"
#include "dpivae/nn.hpp"
#include "dpivae/physics/bridge.hpp"

namespace dpivae {

/// Differentiable stand-in for a nominal model without a cheap closed form.
/// Inputs are affinely mapped to [-1, 1] from their bounds; outputs are
/// standardized per channel. forward/vjp operate in physical units.
class Surrogate {
public:
    Surrogate() = default;
    Surrogate(Mlp net, Vec in_lo, Vec in_hi, Vec out_mean, Vec out_std)
        : net_(std::move(net)), in_lo_(std::move(in_lo)),
          in_hi_(std::move(in_hi)), out_mean_(std::move(out_mean)),
          out_std_(std::move(out_std)) {}

    Mat forward(const Mat& z) {
        Mat h = net_.forward(normalize(z));
        return denormalize(h);
    }

    /// d loss / d z given d loss / d output, for the cached forward pass.
    /// Surrogate weights are frozen, so parameter grads are not accumulated.
    Mat vjp(const Mat& g_out) {
        Mat g = (g_out.array().rowwise() * out_std_.transpose().array()).matrix();
        Mat g_in = net_.backward(g, /*accumulate=*/false);
        Vec scale = 2.0 * (in_hi_ - in_lo_).array().inverse();
        return (g_in.array().rowwise() * scale.transpose().array()).matrix();
    }

    Mat apply(const Mat& z) const { return denorm_const(net_.apply(normalize(z))); }

    int d_in() const { return static_cast<int>(in_lo_.size()); }
    int d_out() const { return static_cast<int>(out_mean_.size()); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["in_lo"] = std::vector<double>(in_lo_.begin(), in_lo_.end());
        j["in_hi"] = std::vector<double>(in_hi_.begin(), in_hi_.end());
        j["out_mean"] = std::vector<double>(out_mean_.begin(), out_mean_.end());
        j["out_std"] = std::vector<double>(out_std_.begin(), out_std_.end());
        j["dims"] = net_.dims();
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : net_.layers()) {
            nlohmann::json jl;
            std::vector<double> w(l.weight().data(),
                                  l.weight().data() + l.weight().size());
            std::vector<double> b(l.bias().data(),
                                  l.bias().data() + l.bias().size());
            jl["w"] = w;
            jl["b"] = b;
            layers.push_back(jl);
        }
        j["layers"] = layers;
        return j;
    }

    static Surrogate from_json(const nlohmann::json& j) {
        auto vec = [](const nlohmann::json& a) {
            std::vector<double> v = a.get<std::vector<double>>();
            return Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())).eval();
        };
        std::vector<int> dims = j.at("dims").get<std::vector<int>>();
        Rng scratch(0);
        Mlp net(dims, scratch);
        const auto& layers = j.at("layers");
        if (layers.size() != net.layers().size())
            throw ConfigError("surrogate: layer count mismatch");
        for (std::size_t i = 0; i < net.layers().size(); ++i) {
            Linear& l = net.layers()[i];
            std::vector<double> w = layers[i].at("w").get<std::vector<double>>();
            std::vector<double> b = layers[i].at("b").get<std::vector<double>>();
            if (static_cast<long>(w.size()) != l.weight().size() ||
                static_cast<long>(b.size()) != l.bias().size())
                throw ConfigError("surrogate: layer shape mismatch");
            std::copy(w.begin(), w.end(), l.weight().data());
            std::copy(b.begin(), b.end(), l.bias().data());
        }
        return Surrogate(std::move(net), vec(j.at("in_lo")), vec(j.at("in_hi")),
                         vec(j.at("out_mean")), vec(j.at("out_std")));
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw ConfigError("surrogate: cannot write " + path);
        f << to_json().dump();
    }

    static Surrogate load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("surrogate: cannot read " + path);
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }

private:
    Mat normalize(const Mat& z) const {
        Mat n(z.rows(), z.cols());
        for (int i = 0; i < z.rows(); ++i)
            for (int j = 0; j < z.cols(); ++j)
                n(i, j) = 2.0 * (z(i, j) - in_lo_[j]) / (in_hi_[j] - in_lo_[j]) -
                          1.0;
        return n;
    }
    Mat denormalize(const Mat& h) const { return denorm_const(h); }
    Mat denorm_const(const Mat& h) const {
        return ((h.array().rowwise() * out_std_.transpose().array()).rowwise() +
                out_mean_.transpose().array())
            .matrix();
    }

    Mlp net_;
    Vec in_lo_, in_hi_, out_mean_, out_std_;
};

struct SurrogateTrainConfig {
    int n_train = 2048;
    int n_val = 512;
    int n_hidden = 64;
    int n_layers = 2;
    int max_epochs = 800;
    int batch = 256;
    double lr = 2e-3;
    double target_r2 = 0.99;
};

/// Fit an MLP to the bridge nominal model over the latent bounds. Throws if
/// the held-out R^2 misses the target.
inline Surrogate train_bridge_surrogate(const BridgeCase& c, Rng& rng,
                                        const SurrogateTrainConfig& cfg = {}) {
    Vec lo(3), hi(3);
    lo << 8.0, 8.0, -2.0;
    hi << 12.0, 12.0, 2.0;

    auto sample = [&](int n, Mat& Z, Mat& X) {
        Z.resize(n, 3);
        X.resize(n, c.n_times);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j)
                Z(i, j) = rng.uniform(lo[j], hi[j]);
            X.row(i) =
                bridge_nominal_strain(Z(i, 0), Z(i, 1), Z(i, 2), c).transpose();
        }
    };
    Mat Ztr, Xtr, Zval, Xval;
    sample(cfg.n_train, Ztr, Xtr);
    sample(cfg.n_val, Zval, Xval);

    Vec out_mean = Xtr.colwise().mean().transpose();
    Vec out_std(c.n_times);
    for (int j = 0; j < c.n_times; ++j) {
        double v = (Xtr.col(j).array() - out_mean[j]).square().mean();
        out_std[j] = std::max(std::sqrt(v), 1e-12);
    }

    std::vector<int> dims = {3};
    for (int i = 0; i < cfg.n_layers; ++i) dims.push_back(cfg.n_hidden);
    dims.push_back(c.n_times);
    Mlp net(dims, rng);
    std::vector<ParamRef> params;
    net.collect_params(params);
    Adam opt(cfg.lr);
    opt.add_group(params);

    auto norm_in = [&](const Mat& Z) {
        Mat n(Z.rows(), 3);
        for (int i = 0; i < Z.rows(); ++i)
            for (int j = 0; j < 3; ++j)
                n(i, j) = 2.0 * (Z(i, j) - lo[j]) / (hi[j] - lo[j]) - 1.0;
        return n;
    };
    Mat Ntr = norm_in(Ztr);
    Mat Ttr = ((Xtr.array().rowwise() - out_mean.transpose().array()).rowwise() /
               out_std.transpose().array())
                  .matrix();

    std::vector<int> order(cfg.n_train);
    for (int i = 0; i < cfg.n_train; ++i) order[i] = i;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        // Fisher-Yates pass using the shared generator keeps runs deterministic.
        for (int i = cfg.n_train - 1; i > 0; --i) {
            int j = static_cast<int>(rng.uniform(0.0, i + 1.0));
            std::swap(order[i], order[std::min(j, i)]);
        }
        for (int start = 0; start < cfg.n_train; start += cfg.batch) {
            int n = std::min(cfg.batch, cfg.n_train - start);
            Mat xb(n, 3), tb(n, c.n_times);
            for (int i = 0; i < n; ++i) {
                xb.row(i) = Ntr.row(order[start + i]);
                tb.row(i) = Ttr.row(order[start + i]);
            }
            opt.zero_grad();
            Mat pred = net.forward(xb);
            Mat g = 2.0 * (pred - tb) / (n * c.n_times);
            net.backward(g);
            opt.step();
        }
    }

    Surrogate s(std::move(net), lo, hi, out_mean, out_std);
    Mat pred = s.apply(Zval);
    double ss_res = (pred - Xval).squaredNorm();
    double ss_tot =
        (Xval.array().rowwise() - Xval.colwise().mean().array()).square().sum();
    double r2 = 1.0 - ss_res / ss_tot;
    if (r2 < cfg.target_r2)
        throw NumericError("surrogate: held-out R^2 " + std::to_string(r2) +
                           " below target");
    return s;
}

}  // namespace dpivae
