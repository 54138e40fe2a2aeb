#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/confbound.hpp"

namespace kcs {

using Rng = std::mt19937_64;

/// Streams fanned out from one master seed. Every policy run under the same
/// seed sees the same environment, action sets and noise sequence.
enum class Stream : std::uint64_t {
    environment = 0,
    action_sets = 1,
    noise = 2,
    random_policy = 3,
    probes = 4,
};

/// SplitMix64 mix of (master, stream).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
[[nodiscard]] Rng make_stream(std::uint64_t master, Stream stream);

/// Synthetic kernel bandit: f*(x) = b sum_i w_i k(x, z_i) with b chosen so
/// that ||f*||_H = B.
struct BanditEnv {
    KernelSpec spec;
    int d = 1;
    std::vector<Point> inducing;
    Eigen::VectorXd weights;
    double scale = 1.0;  // b
    double B = 10.0;     // target RKHS norm
    double sigma = 0.1;  // noise standard deviation
    int m = 100;         // actions per round
    std::uint64_t seed = 0;
    int resamples = 0;  // degenerate weight draws that were rejected

    [[nodiscard]] double rkhs_norm() const;
};

[[nodiscard]] BanditEnv make_env(std::uint64_t seed, int d, const KernelSpec& spec, double B,
                                 double sigma, int m = 100, int num_inducing = 20);
/// Environment from explicit inducing points and weights; b is fitted to B.
[[nodiscard]] BanditEnv make_env(std::vector<Point> inducing, Eigen::VectorXd weights,
                                 const KernelSpec& spec, double B, double sigma, int m = 100,
                                 std::uint64_t seed = 0);

[[nodiscard]] double true_f(const BanditEnv& env, const Point& x);
[[nodiscard]] std::vector<Point> sample_action_set(const BanditEnv& env, Rng& rng);
[[nodiscard]] Point sample_point(int d, Rng& rng);

/// Index of the largest value, lowest index on ties. NaN raises NumericError.
[[nodiscard]] std::size_t select_action(std::span<const double> ucbs);

enum class Policy { cmm, dmm, amm, ay, igp, random };

[[nodiscard]] std::string_view to_string(Policy policy);
[[nodiscard]] Policy parse_policy(std::string_view name);
[[nodiscard]] std::optional<Method> bound_method(Policy policy);

struct RoundRecord {
    std::size_t t = 0;
    std::size_t action_index = 0;
    double reward = 0.0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    double step_seconds = 0.0;
    double ucb_at_chosen = 0.0;
};

struct RegretLog {
    Policy policy = Policy::random;
    std::vector<RoundRecord> rounds;
    std::vector<Point> actions;  // x_t for each round
    /// Set when a bound computation failed; `rounds` holds the rounds completed before it.
    std::optional<std::string> error;

    [[nodiscard]] double final_regret() const {
        return rounds.empty() ? 0.0 : rounds.back().cum_regret;
    }
};

struct EpisodeOptions {
    StateOptions state{};
};

/// KernelUCB: each round plays the argmax of the upper bound over a fresh
/// action set, then appends the noisy reward.
[[nodiscard]] RegretLog run_episode(Policy policy, const BanditEnv& env, std::size_t T,
                                    const ConfidenceConfig& cfg,
                                    const EpisodeOptions& options = {});

struct CoverageTrace {
    bool covered = true;
    /// Round whose state first excluded f* at some checked point.
    std::optional<std::size_t> first_violation;
    double final_radius = 0.0;
    double mean_half_width = 0.0;
    std::size_t checks = 0;
    std::optional<std::string> error;
};

/// Runs KernelUCB with `method` and checks lcb <= f* <= ucb on the action set
/// and `probes` extra uniform points at every state t = 0..T.
[[nodiscard]] CoverageTrace track_coverage(Method method, const BanditEnv& env, std::size_t T,
                                           const ConfidenceConfig& cfg, std::size_t probes,
                                           const EpisodeOptions& options = {});

/// 0.5 ln det(K_t / alpha + I) along the realised trajectory.
[[nodiscard]] double info_gain_empirical(const RegressionState& state, double alpha);

struct EllipticalCheck {
    double lhs = 0.0;  // sum_t min(1, rho^2_{t-1}(x_t) / alpha)
    double rhs = 0.0;  // 1.5 ln det(K_T / alpha + I)
    double margin = 0.0;
    bool pass = true;
};

[[nodiscard]] EllipticalCheck check_elliptical_potential(const KernelSpec& spec,
                                                         std::span<const Point> trajectory,
                                                         double alpha, double slack = 1e-9);

}  // namespace kcs
