#include "driftml/experiments.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

namespace ex = driftml::experiments;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::optional<double> budget_secs;
    std::optional<std::size_t> workers;
    std::string data_dir;
};

void add_common(CLI::App &cmd, Overrides &o, bool config_required) {
    auto *config = cmd.add_option("--config", o.config, "Run config (JSON, comments allowed)");
    if (config_required) {
        config->required();
    }
    cmd.add_option("--seed", o.seed, "Run a single seed");
    cmd.add_option("--seeds", o.seeds, "Comma-separated seed list")->delimiter(',');
    cmd.add_option("--out", o.out, "Output directory");
    cmd.add_option("--budget-secs", o.budget_secs, "AutoML wall-clock budget in seconds");
    cmd.add_option("--workers", o.workers, "Seeds run concurrently");
    cmd.add_option("--data-dir", o.data_dir, "Directory holding batch1.dat..batch10.dat");
}

ex::RunConfig resolve(const Overrides &o, ex::Experiment experiment) {
    ex::RunConfig cfg = o.config.empty() ? ex::RunConfig{} : ex::load_run_config(o.config);
    cfg.experiment = experiment;
    if (o.seed) {
        cfg.seeds = { *o.seed };
    }
    if (!o.seeds.empty()) {
        cfg.seeds = o.seeds;
    }
    if (!o.out.empty()) {
        cfg.output_dir = o.out;
    }
    if (o.budget_secs) {
        cfg.budget.wall_clock_limit = *o.budget_secs;
        cfg.budget.per_trial_limit = std::min(cfg.budget.per_trial_limit, *o.budget_secs);
    }
    if (o.workers) {
        cfg.workers = *o.workers;
    }
    if (!o.data_dir.empty()) {
        cfg.dataset = ex::DatasetSource{};
        cfg.dataset.data_dir = o.data_dir;
    }
    return cfg;
}

int run(const Overrides &o, ex::Experiment experiment) {
    const auto cfg = resolve(o, experiment);
    const auto result = ex::run_experiment(cfg, std::cerr);
    for (const auto &line : result.summary) {
        std::cout << line << '\n';
    }
    std::cout << "results written to " << cfg.output_dir.string() << '\n';
    return 0;
}

int fetch_check(const Overrides &o) {
    ex::DatasetSource source;
    if (!o.data_dir.empty()) {
        source.data_dir = o.data_dir;
    } else if (!o.config.empty()) {
        source = ex::load_run_config(o.config).dataset;
    } else {
        throw driftml::config_error("fetch-check needs --data-dir or --config");
    }
    const auto check = ex::check_gas_dataset(source.load());
    for (const auto &line : check.lines) {
        std::cout << line << '\n';
    }
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        std::ofstream{ std::filesystem::path{ o.out } / "fetch_check.json" } << check.details.dump(2) << '\n';
    }
    std::cout << (check.ok ? "dataset matches the reference counts" : "dataset does NOT match the reference counts") << '\n';
    return check.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{ "Drift-compensation AutoML and benchmarking harness" };
    app.require_subcommand(1);
    Overrides o;
    const std::vector<std::pair<std::string, ex::Experiment>> verbs{
        { "benchmark", ex::Experiment::benchmark }, { "cv-compare", ex::Experiment::cv_compare }, { "online", ex::Experiment::online },
        { "ablation", ex::Experiment::ablation },   { "linearity", ex::Experiment::linearity },   { "automl", ex::Experiment::automl },
        { "grid", ex::Experiment::grid },
    };
    std::vector<std::pair<CLI::App *, ex::Experiment>> commands;
    for (const auto &[name, e] : verbs) {
        auto *cmd = app.add_subcommand(name, fmt::format("Run the {} experiment", ex::to_string(e)));
        add_common(*cmd, o, true);
        commands.emplace_back(cmd, e);
    }
    auto *check = app.add_subcommand("fetch-check", "Validate downloaded batch files against the reference count tables");
    add_common(*check, o, false);

    CLI11_PARSE(app, argc, argv);
    try {
        if (check->parsed()) {
            return fetch_check(o);
        }
        for (const auto &[cmd, e] : commands) {
            if (cmd->parsed()) {
                return run(o, e);
            }
        }
    } catch (const driftml::config_error &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
