#pragma once

#include <vector>

#include "dpivae/model.hpp"

namespace dpivae {

struct ObjectiveConfig {
    double alpha_x = 1.0;
    double alpha_c = 1.0;
    double alpha_y = 1.0;
    double beta = 1.0;
    double lambda = 0.0;  // gradient-reversal coefficient
    int n_mc = 8;
};

/// Per-term breakdown of the objective, averaged over records and MC draws.
/// elbo = alpha_x rx + alpha_c rc + alpha_y ry - beta kld.
struct ObjectiveBreakdown {
    double elbo = 0.0;
    double recon_x = 0.0;
    double recon_c = 0.0;
    double recon_y = 0.0;
    double kld = 0.0;
};

/// Evaluates the variational objective on one batch and, when requested,
/// accumulates d(-elbo)/d(params) into every parameter's gradient buffer.
/// Gradients must be zeroed by the caller beforehand.
///
/// The Monte Carlo KL term is fully reparameterized: at the draw
/// u = mu + L eps the entropy term log q(u) reduces to
/// -sum log L_ii - |eps|^2 / 2 - const, exact in the variational parameters.
/// The gradient-reversal layer sits between the latent draw and the
/// correction network: the correction parameters receive the ordinary
/// reconstruction gradient while the encoder-bound gradient on (z_c, z_y)
/// from that path is scaled by -lambda.
inline ObjectiveBreakdown elbo_objective(DpiVae& m, const Mat& X, const Mat& C,
                                         const Mat& Y, const ObjectiveConfig& cfg,
                                         Rng& rng, bool with_grad = true) {
    const auto& lay = m.layout();
    const int n = static_cast<int>(X.rows());
    const int d_z = lay.d_z();
    const int d_zx = lay.d_zx, d_zc = lay.d_zc, d_zy = lay.d_zy;
    const int d_x = m.definition().d_x;
    const int d_c = m.definition().d_c;
    const int d_y = m.definition().d_y;
    const double w = 1.0 / (static_cast<double>(n) * cfg.n_mc);
    const auto& wt = m.workspace();
    const auto& priors = m.definition().physics_priors;

    Encoder::Output eo = m.encode(X);

    // Conditional prior networks depend only on the observables; run them
    // once and accumulate their head gradients across MC draws.
    Mat pc = m.prior_c().forward(m.normalize_c(C));
    Mat py = m.prior_y().forward(m.normalize_y(Y));
    Clamped lpc = clamp(pc.rightCols(d_zc), kLogStdLo, kLogStdHi);
    Clamped lpy = clamp(py.rightCols(d_zy), kLogStdLo, kLogStdHi);
    Mat mpc = pc.leftCols(d_zc), mpy = py.leftCols(d_zy);
    Mat vpc = (2.0 * lpc.value).array().exp().matrix();
    Mat vpy = (2.0 * lpy.value).array().exp().matrix();

    const double sig = m.sigma_x();
    const double sig2 = sig * sig;

    Mat g_mean = Mat::Zero(n, d_z);
    Mat g_logstd = Mat::Zero(n, d_z);
    std::vector<Mat> g_chol(with_grad ? n : 0, Mat::Zero(d_z, d_z));
    Mat g_pc = Mat::Zero(n, 2 * d_zc), g_py = Mat::Zero(n, 2 * d_zy);
    double g_logsig = 0.0;

    ObjectiveBreakdown out;
    for (int s = 0; s < cfg.n_mc; ++s) {
        Mat eps = rng.normal_mat(n, d_z);
        Mat u = sample_reparam(eo.q, eps);
        Mat ux = u.leftCols(d_zx);
        Mat uc = u.middleCols(d_zx, d_zc);
        Mat uy = u.rightCols(d_zy);
        Mat a(n, d_zc + d_zy);
        a << uc, uy;

        Mat zx = wt.to_constrained(ux);
        Mat dzdu = wt.dz_du(ux);
        Vec logdet = wt.log_det(ux);

        Mat xp = m.physics().forward(zx);
        Mat xd = m.correction().forward(a);
        Mat r = X - (xp + xd);

        Vec r2 = r.rowwise().squaredNorm();
        out.recon_x +=
            w * (-0.5 * d_x * kLogTwoPi * n - d_x * std::log(sig) * n -
                 0.5 * r2.sum() / sig2);

        Mat hc = m.aux_c().forward(uc);
        Clamped lc = clamp(hc.rightCols(d_c), kLogStdLo, kLogStdHi);
        Mat mc = hc.leftCols(d_c);
        Mat vc = (2.0 * lc.value).array().exp().matrix();
        Mat dc2 = ((C - mc).array().square() / vc.array()).matrix();
        out.recon_c += w * (-0.5 * kLogTwoPi * n * d_c - lc.value.sum() -
                            0.5 * dc2.sum());

        Mat hy = m.aux_y().forward(uy);
        Clamped ly = clamp(hy.rightCols(d_y), kLogStdLo, kLogStdHi);
        Mat my = hy.leftCols(d_y);
        Mat vy = (2.0 * ly.value).array().exp().matrix();
        Mat dy2 = ((Y - my).array().square() / vy.array()).matrix();
        out.recon_y += w * (-0.5 * kLogTwoPi * n * d_y - ly.value.sum() -
                            0.5 * dy2.sum());

        // KL pieces at the reparameterized draw.
        Vec log_q = (-eo.log_std.value.rowwise().sum().array() -
                     0.5 * eps.rowwise().squaredNorm().array() -
                     0.5 * d_z * kLogTwoPi)
                        .matrix();
        Vec log_px = Vec::Zero(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d_zx; ++j)
                log_px[i] += priors[j].log_density(zx(i, j));
        Vec log_pc = diag_gaussian_log_prob(uc, mpc, lpc.value);
        Vec log_py = diag_gaussian_log_prob(uy, mpy, lpy.value);
        out.kld += w * (log_q.sum() - logdet.sum() - log_px.sum() -
                        log_pc.sum() - log_py.sum());

        if (!with_grad) continue;

        // --- response reconstruction ---
        Mat g_xhat = (-cfg.alpha_x * w / sig2) * r;
        g_logsig += -cfg.alpha_x * w * (-static_cast<double>(d_x) * n +
                                        r2.sum() / sig2);
        Mat g_zx = m.physics().vjp(g_xhat);
        Mat g_ux = g_zx.cwiseProduct(dzdu);
        Mat g_a = m.correction().backward(g_xhat);
        Mat g_a_enc = (-cfg.lambda) * g_a;

        // --- auxiliary decoders ---
        Mat g_mc = (-cfg.alpha_c * w) * ((C - mc).array() / vc.array()).matrix();
        Mat g_lc = ((-cfg.alpha_c * w) * (dc2.array() - 1.0) *
                    lc.mask.array())
                       .matrix();
        Mat g_hc(n, 2 * d_c);
        g_hc << g_mc, g_lc;
        Mat g_uc = m.aux_c().backward(g_hc);

        Mat g_my = (-cfg.alpha_y * w) * ((Y - my).array() / vy.array()).matrix();
        Mat g_ly = ((-cfg.alpha_y * w) * (dy2.array() - 1.0) *
                    ly.mask.array())
                       .matrix();
        Mat g_hy(n, 2 * d_y);
        g_hy << g_my, g_ly;
        Mat g_uy = m.aux_y().backward(g_hy);

        // --- Monte Carlo KL ---
        g_logstd.array() += -cfg.beta * w;  // entropy term, exact at the draw
        g_ux += cfg.beta * w * (-wt.dlogdet_du(ux));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d_zx; ++j)
                g_ux(i, j) += -cfg.beta * w *
                              priors[j].grad_log_density(zx(i, j)) * dzdu(i, j);

        Mat duc = ((uc - mpc).array() / vpc.array()).matrix();
        g_uc += cfg.beta * w * duc;
        Mat duy = ((uy - mpy).array() / vpy.array()).matrix();
        g_uy += cfg.beta * w * duy;

        g_pc.leftCols(d_zc) += -cfg.beta * w * duc;
        g_pc.rightCols(d_zc) +=
            (cfg.beta * w *
             (1.0 - (uc - mpc).array().square() / vpc.array()) *
             lpc.mask.array())
                .matrix();
        g_py.leftCols(d_zy) += -cfg.beta * w * duy;
        g_py.rightCols(d_zy) +=
            (cfg.beta * w *
             (1.0 - (uy - mpy).array().square() / vpy.array()) *
             lpy.mask.array())
                .matrix();

        // --- assemble d loss / d u and push to the variational parameters ---
        Mat g_u(n, d_z);
        g_u.leftCols(d_zx) = g_ux;
        g_u.middleCols(d_zx, d_zc) = g_a_enc.leftCols(d_zc) + g_uc;
        g_u.rightCols(d_zy) = g_a_enc.rightCols(d_zy) + g_uy;

        g_mean += g_u;
        for (int i = 0; i < n; ++i)
            g_chol[i].noalias() +=
                g_u.row(i).transpose() * eps.row(i);
    }

    out.elbo = cfg.alpha_x * out.recon_x + cfg.alpha_c * out.recon_c +
               cfg.alpha_y * out.recon_y - cfg.beta * out.kld;

    if (with_grad) {
        // Cholesky gradients back to the head parameterization:
        // diagonal entries are exp(log_std), off-diagonals are raw.
        Mat g_cov = Mat::Zero(n, d_z * d_z);
        for (int i = 0; i < n; ++i) {
            for (int r0 = 0; r0 < d_z; ++r0) {
                g_logstd(i, r0) += g_chol[i](r0, r0) *
                                   std::exp(eo.log_std.value(i, r0));
                for (int c0 = 0; c0 < r0; ++c0)
                    g_cov(i, r0 * d_z + c0) = g_chol[i](r0, c0);
            }
        }
        Mat gm = g_mean.cwiseProduct(eo.mean.mask);
        Mat gs = g_logstd.cwiseProduct(eo.log_std.mask);
        if (eo.cov.value.size() > 0) g_cov = g_cov.cwiseProduct(eo.cov.mask);
        m.encoder().backward(gm, gs, g_cov);
        m.prior_c().backward(g_pc);
        m.prior_y().backward(g_py);
        m.g_log_sigma_x()(0, 0) += g_logsig;
    }
    return out;
}

}  // namespace dpivae
