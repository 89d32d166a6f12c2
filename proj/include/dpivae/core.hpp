#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dpivae {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Deterministic random stream. All stochastic operations take one of these
/// explicitly; nothing in the library touches a global generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    double normal(double mean = 0.0, double std = 1.0) {
        return std::normal_distribution<double>(mean, std)(gen_);
    }

    Vec normal_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Mat normal_mat(Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    std::uint64_t next_seed() { return gen_(); }

    /// Independent child stream; advances this stream.
    Rng split() { return Rng(gen_()); }

private:
    std::mt19937_64 gen_;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// log(sigmoid(u)) without overflow for large |u|.
inline double log_sigmoid(double u) {
    return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline Vec linspace(double lo, double hi, int n) {
    Vec v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

}  // namespace dpivae
