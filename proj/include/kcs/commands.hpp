#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kcs/config.hpp"

namespace kcs {

struct CommandOptions {
    std::size_t jobs = 1;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
};

struct CommandReport {
    int exit_code = 0;
    std::vector<std::filesystem::path> files;
    /// Episodes or runs that stopped on a bound error.
    std::vector<std::string> failures;
};

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_numeric = 2 };

/// Applies --seed and --out overrides, then validates.
[[nodiscard]] ExperimentConfig apply_overrides(ExperimentConfig cfg, const CommandOptions& options);

/// Regret CSV per (method, repetition) and summary.csv per sweep cell.
CommandReport cmd_run(const ExperimentConfig& cfg, const CommandOptions& options, std::ostream& log);
/// coverage.csv: simultaneous coverage frequency and radius statistics per method.
CommandReport cmd_coverage(const ExperimentConfig& cfg, const CommandOptions& options,
                           std::ostream& log);
/// curves.csv: bounds of every method on a uniform grid over [0, 1] after curves.t observations.
CommandReport cmd_curves(const ExperimentConfig& cfg, const CommandOptions& options,
                         std::ostream& log);
/// bench.csv: mean per-step bound + selection time in windows of bench.window rounds.
CommandReport cmd_bench(const ExperimentConfig& cfg, const CommandOptions& options,
                        std::ostream& log);

/// Mean and sample standard deviation; std is 0 for fewer than two values.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
[[nodiscard]] MeanStd mean_std(const std::vector<double>& values);

}  // namespace kcs
