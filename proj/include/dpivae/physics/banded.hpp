#pragma once

#include "dpivae/core.hpp"

namespace dpivae {

/// Symmetric positive-definite banded matrix with fixed half-bandwidth,
/// stored by diagonals: band(k, i) = A(i + k, i) for k = 0..hbw.
/// Factorized in place as L D L^T without pivoting.
class BandedSpd {
public:
    BandedSpd(int n, int half_bandwidth)
        : n_(n), hbw_(half_bandwidth), band_(Mat::Zero(half_bandwidth + 1, n)) {}

    int size() const { return n_; }

    double& at(int row, int col) {
        if (row < col) std::swap(row, col);
        return band_(row - col, col);
    }

    double get(int row, int col) const {
        if (row < col) std::swap(row, col);
        if (row - col > hbw_) return 0.0;
        return band_(row - col, col);
    }

    void add(int row, int col, double v) { at(row, col) += v; }

    /// y = A x for the unfactorized matrix.
    Vec multiply(const Vec& x) const {
        Vec y = Vec::Zero(n_);
        for (int j = 0; j < n_; ++j) {
            y[j] += band_(0, j) * x[j];
            for (int k = 1; k <= hbw_ && j + k < n_; ++k) {
                y[j + k] += band_(k, j) * x[j];
                y[j] += band_(k, j) * x[j + k];
            }
        }
        return y;
    }

    void factorize() {
        for (int j = 0; j < n_; ++j) {
            double d = band_(0, j);
            for (int k = 1; k <= hbw_ && j - k >= 0; ++k) {
                double l = band_(k, j - k);
                d -= l * l * band_(0, j - k);
            }
            if (!(d > 0.0) || !std::isfinite(d))
                throw NumericError("banded LDL^T: matrix not positive definite");
            band_(0, j) = d;
            for (int i = 1; i <= hbw_ && j + i < n_; ++i) {
                double s = band_(i, j);
                for (int k = 1; k <= hbw_; ++k) {
                    int col = j - k;
                    if (col < 0 || i + k > hbw_) continue;
                    s -= band_(i + k, col) * band_(k, col) * band_(0, col);
                }
                band_(i, j) = s / d;
            }
        }
        factorized_ = true;
    }

    Vec solve(const Vec& rhs) const {
        if (!factorized_) throw NumericError("banded LDL^T: solve before factorize");
        Vec x = rhs;
        for (int j = 0; j < n_; ++j)
            for (int k = 1; k <= hbw_ && j + k < n_; ++k)
                x[j + k] -= band_(k, j) * x[j];
        for (int j = 0; j < n_; ++j) x[j] /= band_(0, j);
        for (int j = n_ - 1; j >= 0; --j)
            for (int k = 1; k <= hbw_ && j + k < n_; ++k)
                x[j] -= band_(k, j) * x[j + k];
        return x;
    }

private:
    int n_;
    int hbw_;
    Mat band_;
    bool factorized_ = false;
};

}  // namespace dpivae
