/// Acceptance gate for the oscillator confounder study: with adversarial
/// training the data-driven correction stays flat under a traversal of the
/// unobserved initial amplitude, and the unexplained variation is absorbed
/// into the learned observation noise instead.

#include <cstdio>

#include "dpivae/evaluation.hpp"

using namespace dpivae;

namespace {

int failures = 0;

void report(const char* name, bool ok, const char* detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name, detail);
    std::fflush(stdout);
    if (!ok) ++failures;
}

struct Fit {
    double correction_std = 0.0;  // response of x_hat_d to the x0 traversal
    double sigma_x = 0.0;
};

Fit fit_at(double lambda, unsigned seed, double* input_std) {
    const CaseDefinition def = case_definition(CaseId::oscillator);
    const NoiseSpec noise = def.default_noise;
    Rng rng(seed);
    Mat s = sample_generative_factors(def, 2048, rng);
    Dataset ds = generate_observations(def, s, noise, rng);
    Splits sp = split_dataset(ds, SplitSpec{}, rng);

    ModelConfig mc;
    mc.case_id = CaseId::oscillator;
    TrainConfig tc;
    tc.objective.lambda = lambda;
    DpiVae m(mc, rng);
    train_model(m, sp.train, sp.val, tc, rng);

    TraversalResult tr = traverse(m, "x0", {}, 5, 1000, noise, rng);
    Fit out;
    out.correction_std = traversal_component_std(tr.x_correction);
    out.sigma_x = m.sigma_x();

    if (input_std) {
        // The same std-of-per-grid-means statistic applied to the noiseless
        // ground-truth signal as x0 traverses its grid.
        const int fj = def.factor_index("x0");
        std::vector<Mat> truth;
        for (int g = 0; g < tr.grid.size(); ++g) {
            Mat sg = sample_generative_factors(def, 1000, rng);
            sg.col(fj).setConstant(tr.grid[g]);
            Mat X(sg.rows(), def.d_x);
            for (int i = 0; i < sg.rows(); ++i)
                X.row(i) =
                    ground_truth_response(def, sg.row(i).transpose()).transpose();
            truth.push_back(std::move(X));
        }
        *input_std = traversal_component_std(truth);
    }
    return out;
}

}  // namespace

int main() {
    int pass_flat = 0, pass_sigma = 0;
    char d1[256], d2[256];
    int o1 = 0, o2 = 0;
    for (unsigned seed : {41u, 42u, 43u}) {
        double input_std = 0.0;
        Fit adv = fit_at(1.0 / 128.0, seed, &input_std);
        Fit col = fit_at(-1.0, seed, nullptr);
        double var_ratio = (adv.correction_std * adv.correction_std) /
                           (input_std * input_std);
        if (var_ratio <= 0.10) ++pass_flat;
        if (adv.sigma_x > col.sigma_x) ++pass_sigma;
        o1 += std::snprintf(d1 + o1, sizeof d1 - o1, "%s%.1f%%",
                            o1 ? ", " : "", 100.0 * var_ratio);
        o2 += std::snprintf(d2 + o2, sizeof d2 - o2, "%s%.4f>%.4f",
                            o2 ? ", " : "", adv.sigma_x, col.sigma_x);
        std::printf("seed %u: var ratio %.2f%%, sigma_x %.4f (adv) vs %.4f\n",
                    seed, 100.0 * var_ratio, adv.sigma_x, col.sigma_x);
        std::fflush(stdout);
    }

    char line[320];
    std::snprintf(line, sizeof line,
                  "x0 variance ratios {%s} (<= 10%%) on %d of 3 seeds (need 2)",
                  d1, pass_flat);
    report("criterion 6a (correction flat under the confounder)",
           pass_flat >= 2, line);
    std::snprintf(line, sizeof line,
                  "sigma_x {%s} larger under adversarial training on %d of 3 "
                  "seeds (need 2)",
                  d2, pass_sigma);
    report("criterion 6b (uncertainty absorbed into sigma_x)", pass_sigma >= 2,
           line);

    return failures == 0 ? 0 : 1;
}
