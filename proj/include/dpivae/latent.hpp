#pragma once

#include <vector>

#include "dpivae/cases.hpp"
#include "dpivae/core.hpp"

namespace dpivae {

/// Partition of the latent vector into physics, domain and class blocks.
struct LatentLayout {
    int d_zx = 0;
    int d_zc = 0;
    int d_zy = 0;

    int d_z() const { return d_zx + d_zc + d_zy; }
    int x_begin() const { return 0; }
    int c_begin() const { return d_zx; }
    int y_begin() const { return d_zx + d_zc; }
};

/// Bounded physics latents live in an unconstrained workspace u; the model
/// maps them through a scaled logistic onto (lo, hi).
struct WorkspaceTransform {
    Vec lo;  // length d_zx
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }

    /// u -> z = lo + (hi - lo) * sigmoid(u), batch-major (N x d_zx).
    Mat to_constrained(const Mat& u) const {
        Mat z(u.rows(), u.cols());
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < u.cols(); ++j)
                z(i, j) = lo[j] + (hi[j] - lo[j]) * sigmoid(u(i, j));
        return z;
    }

    /// z -> u = logit((z - lo) / (hi - lo)); throws off the open interval.
    Mat to_workspace(const Mat& z) const {
        Mat u(z.rows(), z.cols());
        for (int i = 0; i < z.rows(); ++i)
            for (int j = 0; j < z.cols(); ++j) {
                double f = (z(i, j) - lo[j]) / (hi[j] - lo[j]);
                if (!(f > 0.0 && f < 1.0))
                    throw NumericError("workspace: value outside the open bounds");
                u(i, j) = std::log(f / (1.0 - f));
            }
        return u;
    }

    /// Per-row log |dz/du| = sum_j log[(hi-lo)_j * s_j * (1 - s_j)].
    Vec log_det(const Mat& u) const {
        Vec out = Vec::Zero(u.rows());
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < u.cols(); ++j) {
                // log sigma(u) + log sigma(-u) is stable at both tails.
                out[i] += std::log(hi[j] - lo[j]) + log_sigmoid(u(i, j)) +
                          log_sigmoid(-u(i, j));
            }
        return out;
    }

    /// d z_j / d u_j, elementwise (the transform is diagonal).
    Mat dz_du(const Mat& u) const {
        Mat out(u.rows(), u.cols());
        for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < u.cols(); ++j) {
                double s = sigmoid(u(i, j));
                out(i, j) = (hi[j] - lo[j]) * s * (1.0 - s);
            }
        return out;
    }

    /// d log_det / d u_j = 1 - 2 * sigmoid(u_j), elementwise.
    Mat dlogdet_du(const Mat& u) const {
        return u.unaryExpr([](double v) { return 1.0 - 2.0 * sigmoid(v); });
    }
};

/// Build the workspace transform for a case's physics block from the
/// ground-truth factor ranges of the physics group.
inline WorkspaceTransform workspace_for_case(const CaseDefinition& def) {
    WorkspaceTransform w;
    w.lo.resize(def.d_zx);
    w.hi.resize(def.d_zx);
    int k = 0;
    for (const auto& pr : def.physics_priors) {
        w.lo[k] = pr.lb;
        w.hi[k] = pr.ub;
        ++k;
    }
    return w;
}

/// Batch of full-covariance Gaussians q(u | x): one mean row and one lower
/// Cholesky factor per record.
struct GaussianBatch {
    Mat mean;                 // N x d_z
    std::vector<Mat> chol;    // N lower-triangular d_z x d_z factors

    int n() const { return static_cast<int>(mean.rows()); }
    int dim() const { return static_cast<int>(mean.cols()); }
};

/// u = mean + L * eps for a standard-normal draw eps (N x d_z).
inline Mat sample_reparam(const GaussianBatch& q, const Mat& eps) {
    Mat u = q.mean;
    for (int i = 0; i < q.n(); ++i)
        u.row(i) += (q.chol[i] * eps.row(i).transpose()).transpose();
    return u;
}

/// log N(u_i; mean_i, L_i L_i^T) per record.
inline Vec gaussian_log_prob(const GaussianBatch& q, const Mat& u) {
    const int d = q.dim();
    Vec out(q.n());
    for (int i = 0; i < q.n(); ++i) {
        Vec r = (u.row(i) - q.mean.row(i)).transpose();
        Vec w = q.chol[i].triangularView<Eigen::Lower>().solve(r);
        double log_det = q.chol[i].diagonal().array().log().sum();
        out[i] = -0.5 * w.squaredNorm() - log_det - 0.5 * d * kLogTwoPi;
    }
    return out;
}

/// log N(u; m, diag(s^2)) per record for a diagonal Gaussian given as mean
/// and log-std matrices (each N x d).
inline Vec diag_gaussian_log_prob(const Mat& u, const Mat& mean,
                                  const Mat& log_std) {
    Mat z = (u - mean).array() / log_std.array().exp();
    return (-0.5 * z.array().square() - log_std.array() -
            0.5 * kLogTwoPi)
        .rowwise()
        .sum();
}

/// Analytic KL(N(m0, L0 L0^T) || N(m1, diag(s1^2))) for one record.
inline double kld_gaussian_analytic(const Vec& m0, const Mat& L0,
                                    const Vec& m1, const Vec& s1) {
    const int d = static_cast<int>(m0.size());
    double tr = 0.0;
    // tr(S1^-1 S0) with S0 = L0 L0^T: sum over rows of |L0 row|^2 / s1_j^2.
    for (int j = 0; j < d; ++j)
        tr += L0.row(j).squaredNorm() / (s1[j] * s1[j]);
    double quad = ((m1 - m0).array() / s1.array()).square().sum();
    double log_det1 = 2.0 * s1.array().log().sum();
    double log_det0 = 2.0 * L0.diagonal().array().log().sum();
    return 0.5 * (tr + quad - d + log_det1 - log_det0);
}

/// Monte Carlo estimate of the same KL divergence, for cross-checking.
inline double kld_monte_carlo(const Vec& m0, const Mat& L0, const Vec& m1,
                              const Vec& s1, int n_samples, Rng& rng) {
    const int d = static_cast<int>(m0.size());
    double acc = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Vec eps = rng.normal_vec(d);
        Vec u = m0 + L0 * eps;
        double log_q = -L0.diagonal().array().log().sum() -
                       0.5 * eps.squaredNorm() - 0.5 * d * kLogTwoPi;
        double log_p = (-0.5 * ((u - m1).array() / s1.array()).square() -
                        s1.array().log() - 0.5 * kLogTwoPi)
                           .sum();
        acc += log_q - log_p;
    }
    return acc / n_samples;
}

}  // namespace dpivae
