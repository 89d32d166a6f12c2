#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpivae/cases.hpp"
#include "dpivae/latent.hpp"
#include "dpivae/nn.hpp"
#include "dpivae/physics/beam.hpp"
#include "dpivae/physics/bridge.hpp"
#include "dpivae/physics/oscillator.hpp"
#include "dpivae/surrogate.hpp"

namespace dpivae {

/// Hard clamp with the pass-through mask needed for the backward pass.
struct Clamped {
    Mat value;
    Mat mask;
};

inline Clamped clamp(const Mat& x, double lo, double hi) {
    Clamped out{x, Mat::Ones(x.rows(), x.cols())};
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) {
            if (x(i, j) < lo) {
                out.value(i, j) = lo;
                out.mask(i, j) = 0.0;
            } else if (x(i, j) > hi) {
                out.value(i, j) = hi;
                out.mask(i, j) = 0.0;
            }
        }
    return out;
}

// Output clamps keeping the variational parameters in a numerically safe box.
inline constexpr double kMeanClamp = 10.0;
inline constexpr double kLogStdLo = -7.0;
inline constexpr double kLogStdHi = 2.0;
inline constexpr double kCovClamp = 5.0;

/// Amortized posterior network. In shared mode a single trunk feeds mean,
/// log-std and dense-covariance heads over the whole latent vector; in
/// separate mode each latent block gets its own trunk with diagonal heads
/// only, so cross-block posterior correlations cannot be represented.
class Encoder {
public:
    Encoder() = default;
    Encoder(int d_x, const LatentLayout& layout, bool separate, int hidden,
            Rng& rng)
        : layout_(layout), separate_(separate) {
        if (separate_) {
            for (int dim : {layout.d_zx, layout.d_zc, layout.d_zy}) {
                trunks_.emplace_back(d_x, hidden, rng);
                mean_heads_.emplace_back(hidden, dim, rng);
                logstd_heads_.emplace_back(hidden, dim, rng);
            }
        } else {
            trunks_.emplace_back(d_x, hidden, rng);
            mean_heads_.emplace_back(hidden, layout.d_z(), rng);
            logstd_heads_.emplace_back(hidden, layout.d_z(), rng);
            cov_head_ = Linear(hidden, layout.d_z() * layout.d_z(), rng);
        }
    }

    struct Output {
        Clamped mean;     // N x d_z
        Clamped log_std;  // N x d_z
        Clamped cov;      // N x d_z^2 (shared mode only; empty otherwise)
        GaussianBatch q;
    };

    Output forward(const Mat& x) {
        const int d = layout_.d_z();
        const int n = static_cast<int>(x.rows());
        Output out;
        if (separate_) {
            Mat mean(n, d), log_std(n, d);
            int off = 0;
            masks_.resize(trunks_.size());
            for (std::size_t b = 0; b < trunks_.size(); ++b) {
                Mat h = trunks_[b].forward(x);
                masks_[b] = (h.array() > 0.0).cast<double>();
                h = h.cwiseProduct(masks_[b]);
                int dim = mean_heads_[b].d_out();
                mean.middleCols(off, dim) = mean_heads_[b].forward(h);
                log_std.middleCols(off, dim) = logstd_heads_[b].forward(h);
                off += dim;
            }
            out.mean = clamp(mean, -kMeanClamp, kMeanClamp);
            out.log_std = clamp(log_std, kLogStdLo, kLogStdHi);
        } else {
            Mat h = trunks_[0].forward(x);
            masks_.resize(1);
            masks_[0] = (h.array() > 0.0).cast<double>();
            h = h.cwiseProduct(masks_[0]);
            out.mean = clamp(mean_heads_[0].forward(h), -kMeanClamp, kMeanClamp);
            out.log_std = clamp(logstd_heads_[0].forward(h), kLogStdLo, kLogStdHi);
            out.cov = clamp(cov_head_->forward(h), -kCovClamp, kCovClamp);
        }
        out.q.mean = out.mean.value;
        out.q.chol.assign(n, Mat::Zero(d, d));
        for (int i = 0; i < n; ++i) {
            Mat& L = out.q.chol[i];
            if (!separate_) {
                for (int r = 1; r < d; ++r)
                    for (int c = 0; c < r; ++c)
                        L(r, c) = out.cov.value(i, r * d + c);
            }
            for (int r = 0; r < d; ++r)
                L(r, r) = std::exp(out.log_std.value(i, r));
        }
        return out;
    }

    /// Backward through the cached forward pass. g_cov is ignored in
    /// separate mode. Clamp masks must already be applied by the caller.
    void backward(const Mat& g_mean, const Mat& g_log_std, const Mat& g_cov) {
        if (separate_) {
            int off = 0;
            for (std::size_t b = 0; b < trunks_.size(); ++b) {
                int dim = mean_heads_[b].d_out();
                Mat gh = mean_heads_[b].backward(g_mean.middleCols(off, dim));
                gh += logstd_heads_[b].backward(g_log_std.middleCols(off, dim));
                trunks_[b].backward(gh.cwiseProduct(masks_[b]));
                off += dim;
            }
        } else {
            Mat gh = mean_heads_[0].backward(g_mean);
            gh += logstd_heads_[0].backward(g_log_std);
            gh += cov_head_->backward(g_cov);
            trunks_[0].backward(gh.cwiseProduct(masks_[0]));
        }
    }

    void collect_params(std::vector<ParamRef>& out) {
        for (auto& t : trunks_) t.collect_params(out);
        for (auto& h : mean_heads_) h.collect_params(out);
        for (auto& h : logstd_heads_) h.collect_params(out);
        if (cov_head_) cov_head_->collect_params(out);
    }

    bool separate() const { return separate_; }
    const LatentLayout& layout() const { return layout_; }
    std::vector<Linear*> linears() {
        std::vector<Linear*> out;
        for (auto& t : trunks_) out.push_back(&t);
        for (auto& h : mean_heads_) out.push_back(&h);
        for (auto& h : logstd_heads_) out.push_back(&h);
        if (cov_head_) out.push_back(&*cov_head_);
        return out;
    }

private:
    LatentLayout layout_;
    bool separate_ = false;
    std::vector<Linear> trunks_;
    std::vector<Linear> mean_heads_;
    std::vector<Linear> logstd_heads_;
    std::optional<Linear> cov_head_;
    std::vector<Mat> masks_;
};

/// Differentiable nominal model f(z_x), batched row-wise. The bridge case can
/// run either through the exact FE adjoint (evaluation) or a frozen surrogate
/// (training speed).
class PhysicsDecoder {
public:
    PhysicsDecoder() = default;
    explicit PhysicsDecoder(CaseId id) : id_(id) {}

    void set_surrogate(Surrogate s) { surrogate_ = std::move(s); }
    bool has_surrogate() const { return surrogate_.has_value(); }
    const Surrogate& surrogate() const { return *surrogate_; }

    Mat forward(const Mat& zx) {
        const int n = static_cast<int>(zx.rows());
        switch (id_) {
            case CaseId::beam: {
                BeamCase c;
                Mat x(n, c.n_sensors);
                jac_.resize(n);
                for (int i = 0; i < n; ++i) {
                    x.row(i) =
                        beam_nominal_deflection(zx(i, 0), zx(i, 1), c).transpose();
                    jac_[i] = beam_nominal_jacobian(zx(i, 0), zx(i, 1), c);
                }
                return x;
            }
            case CaseId::oscillator: {
                OscillatorCase c;
                Mat x(n, c.n_times);
                jac_.resize(n);
                for (int i = 0; i < n; ++i) {
                    x.row(i) = oscillator_nominal(zx(i, 0), c).transpose();
                    jac_[i] = oscillator_nominal_jacobian(zx(i, 0), c);
                }
                return x;
            }
            case CaseId::bridge: {
                if (surrogate_) return surrogate_->forward(zx);
                BridgeCase c;
                Mat x(n, c.n_times);
                jac_.resize(n);
                for (int i = 0; i < n; ++i) {
                    auto res = bridge_nominal_strain_with_jacobian(
                        zx(i, 0), zx(i, 1), zx(i, 2), c);
                    x.row(i) = res.strain.transpose();
                    jac_[i] = res.jacobian;
                }
                return x;
            }
        }
        throw ConfigError("physics decoder: unknown case");
    }

    Mat vjp(const Mat& g_x) {
        if (id_ == CaseId::bridge && surrogate_)
            return surrogate_->vjp(g_x);
        const int n = static_cast<int>(g_x.rows());
        Mat g(n, static_cast<int>(jac_[0].cols()));
        for (int i = 0; i < n; ++i)
            g.row(i) = g_x.row(i) * jac_[i];
        return g;
    }

    CaseId case_id() const { return id_; }

private:
    CaseId id_ = CaseId::beam;
    std::optional<Surrogate> surrogate_;
    std::vector<Mat> jac_;
    // surrogate_ owns its own forward cache; jac_ serves the analytic cases.
};

struct ModelConfig {
    CaseId case_id = CaseId::beam;
    bool separate_encoders = false;
    int encoder_hidden = 128;
    int correction_hidden = 128;
    int correction_layers = 2;
    int aux_hidden = 64;
    int prior_hidden = 64;
    double sigma_x_init = 0.1;
};

/// The full generative/inference stack: encoder, physics decoder, correction
/// network, auxiliary decoders for the domain and class observables, and the
/// conditional prior networks for the non-physics latent blocks.
class DpiVae {
public:
    DpiVae() = default;
    DpiVae(const ModelConfig& cfg, Rng& rng)
        : cfg_(cfg), def_(case_definition(cfg.case_id)) {
        layout_ = {def_.d_zx, def_.d_zc, def_.d_zy};
        wtrans_ = workspace_for_case(def_);
        phys_ = PhysicsDecoder(cfg.case_id);
        enc_ = Encoder(def_.d_x, layout_, cfg.separate_encoders,
                       cfg.encoder_hidden, rng);

        std::vector<int> cd = {layout_.d_zc + layout_.d_zy};
        for (int i = 0; i < cfg.correction_layers; ++i)
            cd.push_back(cfg.correction_hidden);
        cd.push_back(def_.d_x);
        corr_ = Mlp(cd, rng);

        aux_c_ = Mlp({layout_.d_zc, cfg.aux_hidden, 2 * def_.d_c}, rng);
        aux_y_ = Mlp({layout_.d_zy, cfg.aux_hidden, 2 * def_.d_y}, rng);
        prior_c_ = Mlp({def_.d_c, cfg.prior_hidden, 2 * layout_.d_zc}, rng);
        prior_y_ = Mlp({def_.d_y, cfg.prior_hidden, 2 * layout_.d_zy}, rng);

        log_sigma_x_ = Mat::Constant(1, 1, std::log(cfg.sigma_x_init));
        g_log_sigma_x_ = Mat::Zero(1, 1);

        x_mean_ = Vec::Zero(def_.d_x);
        x_std_ = Vec::Ones(def_.d_x);
        c_mean_ = Vec::Zero(def_.d_c);
        c_std_ = Vec::Ones(def_.d_c);
        y_mean_ = Vec::Zero(def_.d_y);
        y_std_ = Vec::Ones(def_.d_y);
    }

    /// Input standardization statistics, fitted on the training split.
    void set_normalization(const Mat& x, const Mat& c, const Mat& y) {
        auto fit = [](const Mat& m, Vec& mean, Vec& std) {
            mean = m.colwise().mean().transpose();
            for (int j = 0; j < m.cols(); ++j) {
                double v = (m.col(j).array() - mean[j]).square().mean();
                std[j] = std::max(std::sqrt(v), 1e-12);
            }
        };
        fit(x, x_mean_, x_std_);
        fit(c, c_mean_, c_std_);
        fit(y, y_mean_, y_std_);
    }

    Mat normalize_x(const Mat& x) const { return normalize(x, x_mean_, x_std_); }
    Mat normalize_c(const Mat& c) const { return normalize(c, c_mean_, c_std_); }
    Mat normalize_y(const Mat& y) const { return normalize(y, y_mean_, y_std_); }

    Encoder& encoder() { return enc_; }
    PhysicsDecoder& physics() { return phys_; }
    Mlp& correction() { return corr_; }
    Mlp& aux_c() { return aux_c_; }
    Mlp& aux_y() { return aux_y_; }
    Mlp& prior_c() { return prior_c_; }
    Mlp& prior_y() { return prior_y_; }
    Mat& log_sigma_x() { return log_sigma_x_; }
    Mat& g_log_sigma_x() { return g_log_sigma_x_; }
    double sigma_x() const { return std::exp(log_sigma_x_(0, 0)); }

    const ModelConfig& config() const { return cfg_; }
    const CaseDefinition& definition() const { return def_; }
    const LatentLayout& layout() const { return layout_; }
    const WorkspaceTransform& workspace() const { return wtrans_; }

    /// Posterior for a batch of responses in physical units.
    Encoder::Output encode(const Mat& x) { return enc_.forward(normalize_x(x)); }

    /// Physics, correction and combined reconstructions for workspace draws.
    struct Decoded {
        Mat x_physics;
        Mat x_correction;
        Mat x_hat;
        Mat z_x;  // constrained physics latents
    };
    Decoded decode(const Mat& u) {
        Decoded d;
        Mat ux = u.leftCols(layout_.d_zx);
        Mat a = u.rightCols(layout_.d_zc + layout_.d_zy);
        d.z_x = wtrans_.to_constrained(ux);
        d.x_physics = phys_.forward(d.z_x);
        d.x_correction = corr_.forward(a);
        d.x_hat = d.x_physics + d.x_correction;
        return d;
    }

    /// Parameter groups in a fixed order: encoder, correction, auxiliary
    /// decoders, prior networks, observation noise.
    struct ParamGroups {
        std::vector<ParamRef> encoder;
        std::vector<ParamRef> correction;
        std::vector<ParamRef> aux;
        std::vector<ParamRef> prior;
        std::vector<ParamRef> sigma;
    };
    ParamGroups param_groups() {
        ParamGroups g;
        enc_.collect_params(g.encoder);
        corr_.collect_params(g.correction);
        aux_c_.collect_params(g.aux);
        aux_y_.collect_params(g.aux);
        prior_c_.collect_params(g.prior);
        prior_y_.collect_params(g.prior);
        g.sigma.push_back({&log_sigma_x_, &g_log_sigma_x_});
        return g;
    }

    nlohmann::json to_json() const;
    static DpiVae from_json(const nlohmann::json& j);
    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw ConfigError("model: cannot write " + path);
        f << to_json().dump();
    }
    static DpiVae load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("model: cannot read " + path);
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }

private:
    static Mat normalize(const Mat& m, const Vec& mean, const Vec& std) {
        return ((m.array().rowwise() - mean.transpose().array()).rowwise() /
                std.transpose().array())
            .matrix();
    }

    ModelConfig cfg_;
    CaseDefinition def_;
    LatentLayout layout_;
    WorkspaceTransform wtrans_;
    Encoder enc_;
    PhysicsDecoder phys_;
    Mlp corr_, aux_c_, aux_y_, prior_c_, prior_y_;
    Mat log_sigma_x_, g_log_sigma_x_;
    Vec x_mean_, x_std_, c_mean_, c_std_, y_mean_, y_std_;

    friend struct ModelSerializer;
};

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

struct ModelSerializer {
    static nlohmann::json mat_json(const Mat& m) {
        nlohmann::json j;
        j["rows"] = m.rows();
        j["cols"] = m.cols();
        j["data"] = std::vector<double>(m.data(), m.data() + m.size());
        return j;
    }
    static Mat mat_from(const nlohmann::json& j) {
        long r = j.at("rows"), c = j.at("cols");
        std::vector<double> d = j.at("data").get<std::vector<double>>();
        if (static_cast<long>(d.size()) != r * c)
            throw ConfigError("checkpoint: matrix size mismatch");
        Mat m(r, c);
        std::copy(d.begin(), d.end(), m.data());
        return m;
    }
    static nlohmann::json mlp_json(const Mlp& net) {
        nlohmann::json j;
        j["dims"] = net.dims();
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : net.layers()) {
            nlohmann::json jl;
            jl["w"] = mat_json(l.weight());
            jl["b"] = mat_json(l.bias());
            layers.push_back(jl);
        }
        j["layers"] = layers;
        return j;
    }
    static void mlp_load(Mlp& net, const nlohmann::json& j) {
        if (j.at("dims").get<std::vector<int>>() != net.dims())
            throw ConfigError("checkpoint: network layout mismatch");
        const auto& layers = j.at("layers");
        for (std::size_t i = 0; i < net.layers().size(); ++i) {
            Mat w = mat_from(layers[i].at("w"));
            Mat b = mat_from(layers[i].at("b"));
            if (w.rows() != net.layers()[i].weight().rows() ||
                w.cols() != net.layers()[i].weight().cols())
                throw ConfigError("checkpoint: layer shape mismatch");
            net.layers()[i].weight() = w;
            net.layers()[i].bias() = b;
        }
    }
    static nlohmann::json vec_json(const Vec& v) {
        return std::vector<double>(v.begin(), v.end());
    }
    static Vec vec_from(const nlohmann::json& j, long expect) {
        std::vector<double> d = j.get<std::vector<double>>();
        if (static_cast<long>(d.size()) != expect)
            throw ConfigError("checkpoint: vector size mismatch");
        return Eigen::Map<const Vec>(d.data(), expect).eval();
    }

    static nlohmann::json dump(const DpiVae& m) {
        nlohmann::json j;
        j["format"] = "dpivae-checkpoint-v1";
        j["case"] = to_string(m.cfg_.case_id);
        j["separate_encoders"] = m.cfg_.separate_encoders;
        j["encoder_hidden"] = m.cfg_.encoder_hidden;
        j["correction_hidden"] = m.cfg_.correction_hidden;
        j["correction_layers"] = m.cfg_.correction_layers;
        j["aux_hidden"] = m.cfg_.aux_hidden;
        j["prior_hidden"] = m.cfg_.prior_hidden;
        j["sigma_x_init"] = m.cfg_.sigma_x_init;

        nlohmann::json enc = nlohmann::json::array();
        for (const Linear* l :
             const_cast<Encoder&>(m.enc_).linears()) {
            nlohmann::json jl;
            jl["w"] = mat_json(l->weight());
            jl["b"] = mat_json(l->bias());
            enc.push_back(jl);
        }
        j["encoder"] = enc;
        j["correction"] = mlp_json(m.corr_);
        j["aux_c"] = mlp_json(m.aux_c_);
        j["aux_y"] = mlp_json(m.aux_y_);
        j["prior_c"] = mlp_json(m.prior_c_);
        j["prior_y"] = mlp_json(m.prior_y_);
        j["log_sigma_x"] = m.log_sigma_x_(0, 0);
        j["x_mean"] = vec_json(m.x_mean_);
        j["x_std"] = vec_json(m.x_std_);
        j["c_mean"] = vec_json(m.c_mean_);
        j["c_std"] = vec_json(m.c_std_);
        j["y_mean"] = vec_json(m.y_mean_);
        j["y_std"] = vec_json(m.y_std_);
        if (m.phys_.has_surrogate())
            j["surrogate"] = m.phys_.surrogate().to_json();
        return j;
    }

    static DpiVae restore(const nlohmann::json& j) {
        if (j.value("format", "") != "dpivae-checkpoint-v1")
            throw ConfigError("checkpoint: unrecognized format");
        ModelConfig cfg;
        cfg.case_id = case_from_string(j.at("case").get<std::string>());
        cfg.separate_encoders = j.at("separate_encoders");
        cfg.encoder_hidden = j.at("encoder_hidden");
        cfg.correction_hidden = j.at("correction_hidden");
        cfg.correction_layers = j.at("correction_layers");
        cfg.aux_hidden = j.at("aux_hidden");
        cfg.prior_hidden = j.at("prior_hidden");
        cfg.sigma_x_init = j.at("sigma_x_init");
        Rng scratch(0);
        DpiVae m(cfg, scratch);

        auto enc_layers = m.enc_.linears();
        const auto& enc = j.at("encoder");
        if (enc.size() != enc_layers.size())
            throw ConfigError("checkpoint: encoder layout mismatch");
        for (std::size_t i = 0; i < enc_layers.size(); ++i) {
            Mat w = mat_from(enc[i].at("w"));
            Mat b = mat_from(enc[i].at("b"));
            if (w.rows() != enc_layers[i]->weight().rows() ||
                w.cols() != enc_layers[i]->weight().cols())
                throw ConfigError("checkpoint: encoder shape mismatch");
            enc_layers[i]->weight() = w;
            enc_layers[i]->bias() = b;
        }
        mlp_load(m.corr_, j.at("correction"));
        mlp_load(m.aux_c_, j.at("aux_c"));
        mlp_load(m.aux_y_, j.at("aux_y"));
        mlp_load(m.prior_c_, j.at("prior_c"));
        mlp_load(m.prior_y_, j.at("prior_y"));
        m.log_sigma_x_(0, 0) = j.at("log_sigma_x");
        m.x_mean_ = vec_from(j.at("x_mean"), m.def_.d_x);
        m.x_std_ = vec_from(j.at("x_std"), m.def_.d_x);
        m.c_mean_ = vec_from(j.at("c_mean"), m.def_.d_c);
        m.c_std_ = vec_from(j.at("c_std"), m.def_.d_c);
        m.y_mean_ = vec_from(j.at("y_mean"), m.def_.d_y);
        m.y_std_ = vec_from(j.at("y_std"), m.def_.d_y);
        if (j.contains("surrogate"))
            m.phys_.set_surrogate(Surrogate::from_json(j.at("surrogate")));
        return m;
    }
};

inline nlohmann::json DpiVae::to_json() const {
    return ModelSerializer::dump(*this);
}
inline DpiVae DpiVae::from_json(const nlohmann::json& j) {
    return ModelSerializer::restore(j);
}

}  // namespace dpivae
