#pragma once

#include <fstream>
#include <limits>
#include <string>

#include "dpivae/datagen.hpp"
#include "dpivae/objective.hpp"

namespace dpivae {

struct TrainConfig {
    ObjectiveConfig objective;
    int max_epochs = 20000;
    int patience = 2000;       // epochs without validation improvement
    double lr = 1e-3;
    double sigma_lr = 5e-3;    // separate rate for the observation noise
    double encoder_lr_multiplier = 1.0;
    int val_every = 1;
    int beta_warmup = 0;       // epochs of linear KL ramp-up; 0 disables
    int max_nonfinite = 5;     // consecutive non-finite epochs tolerated
    std::string log_path;      // per-epoch CSV log; empty disables
};

/// Effective KL weight at an epoch under the linear warmup schedule.
inline double beta_at(const TrainConfig& cfg, int epoch) {
    if (cfg.beta_warmup <= 0) return cfg.objective.beta;
    double f = std::min(1.0, static_cast<double>(epoch + 1) / cfg.beta_warmup);
    return cfg.objective.beta * f;
}

struct TrainResult {
    int epochs_run = 0;
    int best_epoch = -1;
    double best_val_elbo = -std::numeric_limits<double>::infinity();
    double final_train_elbo = 0.0;
    bool early_stopped = false;
};

/// Full-batch training with early stopping on the validation objective. The
/// best-scoring parameters are restored into the model before returning.
inline TrainResult train_model(DpiVae& m, const Dataset& train,
                               const Dataset& val, const TrainConfig& cfg,
                               Rng& rng) {
    m.set_normalization(train.X, train.C, train.Y);

    auto groups = m.param_groups();
    Adam opt(cfg.lr);
    opt.add_group(groups.encoder, cfg.encoder_lr_multiplier);
    opt.add_group(groups.correction);
    opt.add_group(groups.aux);
    opt.add_group(groups.prior);
    opt.add_group(groups.sigma, cfg.lr > 0.0 ? cfg.sigma_lr / cfg.lr : 0.0);

    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) throw ConfigError("training: cannot write " + cfg.log_path);
        log << "epoch,elbo,recon_x,recon_c,recon_y,kld,val_elbo,sigma_x,beta\n";
    }

    TrainResult res;
    nlohmann::json best_state;
    int since_best = 0, nonfinite = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        ObjectiveConfig oc = cfg.objective;
        oc.beta = beta_at(cfg, epoch);

        opt.zero_grad();
        ObjectiveBreakdown tb =
            elbo_objective(m, train.X, train.C, train.Y, oc, rng, true);
        if (!std::isfinite(tb.elbo)) {
            if (++nonfinite > cfg.max_nonfinite)
                throw NumericError("training: objective diverged");
            continue;  // skip the update, keep the previous parameters
        }
        nonfinite = 0;
        opt.step();
        res.final_train_elbo = tb.elbo;
        res.epochs_run = epoch + 1;

        double val_elbo = std::numeric_limits<double>::quiet_NaN();
        if (epoch % cfg.val_every == 0) {
            ObjectiveBreakdown vb =
                elbo_objective(m, val.X, val.C, val.Y, oc, rng, false);
            val_elbo = vb.elbo;
            if (std::isfinite(val_elbo) && val_elbo > res.best_val_elbo) {
                res.best_val_elbo = val_elbo;
                res.best_epoch = epoch;
                best_state = m.to_json();
                since_best = 0;
            } else {
                since_best += cfg.val_every;
            }
            if (since_best > cfg.patience) {
                res.early_stopped = true;
                if (log)
                    log << epoch << "," << tb.elbo << "," << tb.recon_x << ","
                        << tb.recon_c << "," << tb.recon_y << "," << tb.kld
                        << "," << val_elbo << "," << m.sigma_x() << ","
                        << oc.beta << "\n";
                break;
            }
        }
        if (log && (epoch % 25 == 0 || epoch + 1 == cfg.max_epochs))
            log << epoch << "," << tb.elbo << "," << tb.recon_x << ","
                << tb.recon_c << "," << tb.recon_y << "," << tb.kld << ","
                << val_elbo << "," << m.sigma_x() << "," << oc.beta << "\n";
    }

    if (!best_state.is_null()) m = DpiVae::from_json(best_state);
    return res;
}

}  // namespace dpivae
