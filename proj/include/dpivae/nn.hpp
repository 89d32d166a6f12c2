#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dpivae/core.hpp"

namespace dpivae {

/// Reference to one trainable parameter matrix and its gradient accumulator.
struct ParamRef {
    Mat* value;
    Mat* grad;
};

/// Fully connected layer operating on batch-major (N x d) matrices.
class Linear {
public:
    Linear() = default;
    Linear(int d_in, int d_out, Rng& rng) {
        // He initialization, suited to the ReLU nonlinearity used throughout.
        double s = std::sqrt(2.0 / d_in);
        W_ = rng.normal_mat(d_in, d_out) * s;
        b_ = Mat::Zero(1, d_out);
        gW_ = Mat::Zero(d_in, d_out);
        gb_ = Mat::Zero(1, d_out);
    }

    Mat forward(const Mat& x) {
        x_ = x;
        return (x * W_).rowwise() + b_.row(0);
    }

    /// Accumulates parameter gradients and returns the input gradient.
    Mat backward(const Mat& g, bool accumulate = true) {
        if (accumulate) {
            gW_.noalias() += x_.transpose() * g;
            gb_.row(0) += g.colwise().sum();
        }
        return g * W_.transpose();
    }

    /// Forward pass without caching, for inference-only use.
    Mat apply(const Mat& x) const { return (x * W_).rowwise() + b_.row(0); }

    int d_in() const { return static_cast<int>(W_.rows()); }
    int d_out() const { return static_cast<int>(W_.cols()); }
    Mat& weight() { return W_; }
    Mat& bias() { return b_; }
    const Mat& weight() const { return W_; }
    const Mat& bias() const { return b_; }

    void collect_params(std::vector<ParamRef>& out) {
        out.push_back({&W_, &gW_});
        out.push_back({&b_, &gb_});
    }

private:
    Mat W_, b_, gW_, gb_, x_;
};

/// Multilayer perceptron with ReLU hidden activations and a linear output.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::vector<int>& dims, Rng& rng) : dims_(dims) {
        if (dims.size() < 2) throw ConfigError("mlp: need at least two layer sizes");
        for (std::size_t i = 0; i + 1 < dims.size(); ++i)
            layers_.emplace_back(dims[i], dims[i + 1], rng);
        masks_.resize(layers_.size() > 0 ? layers_.size() - 1 : 0);
    }

    Mat forward(const Mat& x) {
        Mat h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            h = layers_[i].forward(h);
            if (i + 1 < layers_.size()) {
                masks_[i] = (h.array() > 0.0).cast<double>();
                h = h.cwiseProduct(masks_[i]);
            }
        }
        return h;
    }

    /// Backpropagates through the cached forward pass; returns d loss / d input.
    Mat backward(const Mat& g_out, bool accumulate = true) {
        Mat g = g_out;
        for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
            if (i + 1 < static_cast<int>(layers_.size()))
                g = g.cwiseProduct(masks_[i]);
            // Hidden-activation mask is applied before the layer that fed it.
            g = layers_[i].backward(g, accumulate);
        }
        return g;
    }

    Mat apply(const Mat& x) const {
        Mat h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            h = layers_[i].apply(h);
            if (i + 1 < layers_.size()) h = h.cwiseMax(0.0);
        }
        return h;
    }

    void collect_params(std::vector<ParamRef>& out) {
        for (auto& l : layers_) l.collect_params(out);
    }

    const std::vector<int>& dims() const { return dims_; }
    std::vector<Linear>& layers() { return layers_; }
    const std::vector<Linear>& layers() const { return layers_; }

private:
    std::vector<int> dims_;
    std::vector<Linear> layers_;
    std::vector<Mat> masks_;
};

/// Adam optimizer over a flat list of parameter references, with a per-group
/// learning-rate scale (used for the encoder learning-rate multiplier).
class Adam {
public:
    struct Group {
        std::vector<ParamRef> params;
        double lr_scale = 1.0;
    };

    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void add_group(std::vector<ParamRef> params, double lr_scale = 1.0) {
        for (auto& p : params) {
            m_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
            v_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
        }
        groups_.push_back({std::move(params), lr_scale});
    }

    void zero_grad() {
        for (auto& g : groups_)
            for (auto& p : g.params) p.grad->setZero();
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        std::size_t k = 0;
        for (auto& g : groups_) {
            double lr = lr_ * g.lr_scale;
            for (auto& p : g.params) {
                Mat& m = m_[k];
                Mat& v = v_[k];
                ++k;
                m = beta1_ * m + (1.0 - beta1_) * (*p.grad);
                v = beta2_ * v +
                    (1.0 - beta2_) * p.grad->cwiseProduct(*p.grad);
                p.value->array() -=
                    lr * (m.array() / bc1) /
                    ((v.array() / bc2).sqrt() + eps_);
            }
        }
    }

    double& lr() { return lr_; }
    long steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Group> groups_;
    std::vector<Mat> m_, v_;
};

}  // namespace dpivae
