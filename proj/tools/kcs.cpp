#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kcs/commands.hpp"
#include "kcs/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Confidence bounds and kernel bandit experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t jobs = 1;
    std::string out;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Experiment config file (key = value)");
        sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "Output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
    };
    auto* run = app.add_subcommand("run", "Regret runs: one CSV per method and repetition, plus summary.csv");
    auto* coverage = app.add_subcommand("coverage", "Monte-Carlo simultaneous coverage study");
    auto* curves = app.add_subcommand("curves", "Bounds of every method on a 1-D grid");
    auto* bench = app.add_subcommand("bench", "Per-step timing in windows of t");
    for (auto* sub : {run, coverage, curves, bench}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kcs::exit_ok : kcs::exit_config;
    }

    CLI::App* active = app.get_subcommands().front();
    try {
        kcs::ExperimentConfig cfg =
            config_path.empty() ? kcs::ExperimentConfig{} : kcs::load_config(config_path);
        kcs::CommandOptions options;
        options.jobs = jobs;
        if (active->count("--out")) options.out = out;
        if (active->count("--seed")) options.seed = seed;

        kcs::CommandReport report;
        if (active == run) {
            report = kcs::cmd_run(cfg, options, std::cerr);
        } else if (active == coverage) {
            report = kcs::cmd_coverage(cfg, options, std::cerr);
        } else if (active == curves) {
            report = kcs::cmd_curves(cfg, options, std::cerr);
        } else {
            report = kcs::cmd_bench(cfg, options, std::cerr);
        }
        return report.exit_code;
    } catch (const kcs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kcs::exit_config;
    } catch (const kcs::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kcs::exit_config;
    } catch (const kcs::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kcs::exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kcs::exit_numeric;
    }
}
