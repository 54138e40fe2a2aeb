#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kcs/bandit.hpp"
#include "kcs/confbound.hpp"

namespace kcs {

/// Experiment description read from a flat `key = value` file.
///
/// Grammar, one entry per line:
///   line    := blank | comment | entry
///   comment := '#' anything
///   entry   := key '=' value [comment]
///   key     := segment ('.' segment)*
///   list    := value (',' value)*
/// Keys may appear at most once. Unknown keys are rejected.
///
/// Bound hyperparameters left unset take values derived from the rest of the
/// file when `confidence()` is called: c = 1 for rbf and T^(-d/(2d+2nu)) for
/// Matern kernels, alpha_grid = {0.1, 0.3, 1, 3, 10} sigma^2/c,
/// lambda = sigma^2/c and eta = 2/T.
struct ExperimentConfig {
    KernelSpec kernel{KernelFamily::rbf, 0.5};

    Method bound_method = Method::dmm;
    double sigma = 0.1;
    double B = 10.0;
    double delta = 0.01;
    std::optional<double> c;
    std::optional<std::vector<double>> alpha_grid;
    std::optional<double> lambda;
    std::optional<double> eta;

    int d = 2;
    std::size_t T = 300;
    int m = 100;
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;
    std::vector<Policy> methods{Policy::cmm, Policy::dmm, Policy::amm,
                                Policy::ay,  Policy::igp, Policy::random};

    /// Environment noise and norm; default to the bound's sigma and B.
    std::optional<double> env_sigma;
    std::optional<double> env_B;

    std::size_t coverage_runs = 200;
    std::size_t coverage_probes = 10;
    std::size_t curves_resolution = 201;
    std::size_t curves_t = 10;
    std::size_t bench_window = 25;

    StateOptions state{};

    std::string output_dir = "out";
    /// When false, per-step wall times are written as 0 so reruns are byte-identical.
    bool output_timing = true;

    /// `sweep.<key> = v1,v2,...` entries, in file order.
    std::vector<std::pair<std::string, std::vector<std::string>>> sweeps;

    void validate() const;
    [[nodiscard]] ConfidenceConfig confidence() const;
    [[nodiscard]] double env_noise() const { return env_sigma.value_or(sigma); }
    [[nodiscard]] double env_norm() const { return env_B.value_or(B); }

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses config text. Throws ConfigError with the offending line number.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form: every set key, doubles printed with 17 significant digits.
[[nodiscard]] std::string serialize(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the canonical text.
[[nodiscard]] std::uint64_t config_hash(const ExperimentConfig& cfg);
[[nodiscard]] std::string hash_hex(std::uint64_t hash);

/// Cartesian product of the sweep lists. Each cell has `sweeps` cleared.
/// A config without sweeps expands to itself.
[[nodiscard]] std::vector<ExperimentConfig> expand_sweeps(const ExperimentConfig& cfg);

/// Full key names accepted by the parser.
[[nodiscard]] std::vector<std::string> config_keys();

}  // namespace kcs
