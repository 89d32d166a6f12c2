/// Command-line front end: one experiment per config file, one command per
/// process. Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dpivae/experiment.hpp"

namespace {

struct Overrides {
    std::optional<unsigned long long> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

dpivae::ExperimentConfig resolve(const std::string& config_path,
                                 const Overrides& ov) {
    dpivae::ExperimentConfig cfg = dpivae::load_experiment(config_path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.out) cfg.out_dir = *ov.out;
    if (ov.workers) cfg.workers = *ov.workers;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed VAE experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    const std::map<std::string,
                   std::function<int(const dpivae::ExperimentConfig&)>>
        commands = {{"generate", dpivae::cmd_generate},
                    {"train", dpivae::cmd_train},
                    {"evaluate", dpivae::cmd_evaluate},
                    {"traverse", dpivae::cmd_traverse},
                    {"sweep", dpivae::cmd_sweep},
                    {"benchmark", dpivae::cmd_benchmark}};

    std::string chosen;
    for (const auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Experiment config file")
            ->required();
        sub->add_option("--seed", [&ov](const CLI::results_t& r) {
            ov.seed = std::stoull(r[0]);
            return true;
        }, "Override the config seed");
        sub->add_option("--out", [&ov](const CLI::results_t& r) {
            ov.out = r[0];
            return true;
        }, "Override the output directory");
        sub->add_option("--workers", [&ov](const CLI::results_t& r) {
            ov.workers = std::stoi(r[0]);
            return true;
        }, "Override the worker-pool size");
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        dpivae::ExperimentConfig cfg = resolve(config_path, ov);
        return commands.at(chosen)(cfg);
    } catch (const dpivae::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 2;
    }
}
