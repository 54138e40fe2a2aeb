#include "kcs/bandit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "kcs/errors.hpp"

namespace kcs {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng make_stream(std::uint64_t master, Stream stream) {
    return Rng(derive_seed(master, static_cast<std::uint64_t>(stream)));
}

double BanditEnv::rkhs_norm() const {
    const Eigen::MatrixXd kz = gram(spec, inducing);
    return scale * std::sqrt(std::max(0.0, weights.dot(kz * weights)));
}

Point sample_point(int d, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Point x(d);
    for (int i = 0; i < d; ++i) x(i) = unif(rng);
    return x;
}

BanditEnv make_env(std::vector<Point> inducing, Eigen::VectorXd weights, const KernelSpec& spec,
                   double B, double sigma, int m, std::uint64_t seed) {
    spec.validate();
    if (!(B > 0.0)) throw ConfigError("environment norm bound B must be positive");
    if (!(sigma >= 0.0)) throw ConfigError("environment noise sigma must be nonnegative");
    if (m < 1) throw ConfigError("action set size m must be at least 1");
    if (inducing.empty() || static_cast<Eigen::Index>(inducing.size()) != weights.size()) {
        throw InputError("environment needs one weight per inducing point");
    }
    const double q = weights.dot(gram(spec, inducing) * weights);
    if (!(q > 1e-12)) throw NumericError("degenerate environment: w^T K_Z w <= 1e-12");

    BanditEnv env;
    env.spec = spec;
    env.d = static_cast<int>(inducing.front().size());
    env.inducing = std::move(inducing);
    env.weights = std::move(weights);
    env.scale = B / std::sqrt(q);
    env.B = B;
    env.sigma = sigma;
    env.m = m;
    env.seed = seed;
    return env;
}

BanditEnv make_env(std::uint64_t seed, int d, const KernelSpec& spec, double B, double sigma,
                   int m, int num_inducing) {
    if (d < 1) throw ConfigError("action dimension d must be at least 1");
    if (num_inducing < 1) throw ConfigError("need at least one inducing point");
    for (int attempt = 0;; ++attempt) {
        Rng rng = make_stream(seed + static_cast<std::uint64_t>(attempt), Stream::environment);
        std::vector<Point> z;
        z.reserve(static_cast<std::size_t>(num_inducing));
        for (int i = 0; i < num_inducing; ++i) z.push_back(sample_point(d, rng));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd w(num_inducing);
        for (int i = 0; i < num_inducing; ++i) w(i) = normal(rng);
        try {
            BanditEnv env = make_env(std::move(z), std::move(w), spec, B, sigma, m, seed);
            env.resamples = attempt;
            return env;
        } catch (const NumericError&) {
            if (attempt >= 100) throw;
        }
    }
}

double true_f(const BanditEnv& env, const Point& x) {
    double f = 0.0;
    for (std::size_t i = 0; i < env.inducing.size(); ++i) {
        f += env.weights(static_cast<Eigen::Index>(i)) * eval(env.spec, x, env.inducing[i]);
    }
    return env.scale * f;
}

std::vector<Point> sample_action_set(const BanditEnv& env, Rng& rng) {
    std::vector<Point> actions;
    actions.reserve(static_cast<std::size_t>(env.m));
    for (int j = 0; j < env.m; ++j) actions.push_back(sample_point(env.d, rng));
    return actions;
}

std::size_t select_action(std::span<const double> ucbs) {
    if (ucbs.empty()) throw InputError("select_action: empty action set");
    std::size_t best = 0;
    for (std::size_t j = 0; j < ucbs.size(); ++j) {
        if (std::isnan(ucbs[j])) throw NumericError("select_action: NaN upper bound");
        if (ucbs[j] > ucbs[best]) best = j;
    }
    return best;
}

std::string_view to_string(Policy policy) {
    switch (policy) {
        case Policy::cmm: return "cmm";
        case Policy::dmm: return "dmm";
        case Policy::amm: return "amm";
        case Policy::ay: return "ay";
        case Policy::igp: return "igp";
        case Policy::random: return "random";
    }
    return "unknown";
}

Policy parse_policy(std::string_view name) {
    if (name == "random") return Policy::random;
    switch (parse_method(name)) {
        case Method::cmm: return Policy::cmm;
        case Method::dmm: return Policy::dmm;
        case Method::amm: return Policy::amm;
        case Method::ay: return Policy::ay;
        case Method::igp: return Policy::igp;
    }
    return Policy::random;
}

std::optional<Method> bound_method(Policy policy) {
    switch (policy) {
        case Policy::cmm: return Method::cmm;
        case Policy::dmm: return Method::dmm;
        case Policy::amm: return Method::amm;
        case Policy::ay: return Method::ay;
        case Policy::igp: return Method::igp;
        case Policy::random: break;
    }
    return std::nullopt;
}

RegretLog run_episode(Policy policy, const BanditEnv& env, std::size_t T,
                      const ConfidenceConfig& cfg, const EpisodeOptions& options) {
    if (T < 1) throw ConfigError("episode length T must be at least 1");
    cfg.validate();
    ConfidenceConfig bound_cfg = cfg;
    const auto method = bound_method(policy);
    if (method) {
        bound_cfg.method = *method;
        if (*method == Method::dmm && !bound_cfg.grid_contains_matched_alpha()) {
            throw ConfigError("DMM runs need sigma^2/c in bound.alpha_grid");
        }
    }

    Rng action_rng = make_stream(env.seed, Stream::action_sets);
    Rng noise_rng = make_stream(env.seed, Stream::noise);
    Rng policy_rng = make_stream(env.seed, Stream::random_policy);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::vector<double> alphas =
        method ? bound_cfg.required_alphas() : std::vector<double>{1.0};
    RegressionState state(env.spec, alphas, options.state);

    RegretLog log;
    log.policy = policy;
    log.rounds.reserve(T);
    log.actions.reserve(T);
    double cumulative = 0.0;
    std::vector<double> ucbs(static_cast<std::size_t>(env.m));

    for (std::size_t t = 1; t <= T; ++t) {
        const std::vector<Point> actions = sample_action_set(env, action_rng);
        const double noise = normal(noise_rng);

        std::size_t chosen = 0;
        double ucb_chosen = std::numeric_limits<double>::quiet_NaN();
        const auto start = std::chrono::steady_clock::now();
        try {
            if (method) {
                const auto bounds = compute_bounds(state, bound_cfg, actions);
                for (std::size_t j = 0; j < bounds.size(); ++j) ucbs[j] = bounds[j].ucb;
                chosen = select_action(ucbs);
                ucb_chosen = ucbs[chosen];
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
                chosen = pick(policy_rng);
            }
        } catch (const NumericError& e) {
            log.error = "round " + std::to_string(t) + ": " + e.what();
            return log;
        } catch (const InternalError& e) {
            log.error = "round " + std::to_string(t) + ": " + e.what();
            return log;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : actions) best = std::max(best, true_f(env, a));
        const double f_chosen = true_f(env, actions[chosen]);
        const double regret = std::max(0.0, best - f_chosen);
        cumulative += regret;
        const double reward = f_chosen + env.sigma * noise;

        log.rounds.push_back({t, chosen, reward, regret, cumulative, seconds, ucb_chosen});
        log.actions.push_back(actions[chosen]);
        if (method) {
            try {
                state.append(actions[chosen], reward);
            } catch (const InternalError& e) {
                log.error = "round " + std::to_string(t) + ": " + e.what();
                return log;
            }
        }
    }
    return log;
}

CoverageTrace track_coverage(Method method, const BanditEnv& env, std::size_t T,
                             const ConfidenceConfig& cfg, std::size_t probes,
                             const EpisodeOptions& options) {
    ConfidenceConfig bound_cfg = cfg;
    bound_cfg.method = method;
    bound_cfg.validate();

    Rng action_rng = make_stream(env.seed, Stream::action_sets);
    Rng noise_rng = make_stream(env.seed, Stream::noise);
    Rng probe_rng = make_stream(env.seed, Stream::probes);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::vector<double> alphas = bound_cfg.required_alphas();
    RegressionState state(env.spec, alphas, options.state);

    CoverageTrace trace;
    double half_width_sum = 0.0;
    for (std::size_t t = 0; t <= T; ++t) {
        std::vector<Point> points = sample_action_set(env, action_rng);
        const std::size_t m = points.size();
        for (std::size_t p = 0; p < probes; ++p) points.push_back(sample_point(env.d, probe_rng));
        std::vector<BoundResult> bounds;
        try {
            bounds = compute_bounds(state, bound_cfg, points);
        } catch (const NumericError& e) {
            trace.error = "round " + std::to_string(t) + ": " + e.what();
            return trace;
        } catch (const InternalError& e) {
            trace.error = "round " + std::to_string(t) + ": " + e.what();
            return trace;
        }
        std::vector<double> ucbs(m);
        for (std::size_t j = 0; j < points.size(); ++j) {
            const double f = true_f(env, points[j]);
            if (j < m) ucbs[j] = bounds[j].ucb;
            half_width_sum += 0.5 * (bounds[j].ucb - bounds[j].lcb);
            ++trace.checks;
            if ((f < bounds[j].lcb || f > bounds[j].ucb) && trace.covered) {
                trace.covered = false;
                trace.first_violation = t;
            }
        }
        trace.final_radius = bounds.front().radius;
        if (t == T) break;
        const std::size_t chosen = select_action(ucbs);
        const double y = true_f(env, points[chosen]) + env.sigma * normal(noise_rng);
        state.append(points[chosen], y);
    }
    trace.mean_half_width = half_width_sum / static_cast<double>(trace.checks);
    return trace;
}

double info_gain_empirical(const RegressionState& state, double alpha) {
    return 0.5 * state.logdet_scaled(alpha);
}

EllipticalCheck check_elliptical_potential(const KernelSpec& spec, std::span<const Point> trajectory,
                                           double alpha, double slack) {
    const double alphas[] = {alpha};
    RegressionState state(spec, alphas);
    EllipticalCheck out;
    for (const auto& x : trajectory) {
        out.lhs += std::min(1.0, state.ridge_var(alpha, x) / alpha);
        state.append(x, 0.0);
    }
    out.rhs = 1.5 * state.logdet_scaled(alpha);
    out.margin = out.rhs - out.lhs;
    out.pass = out.lhs <= out.rhs + slack;
    return out;
}

}  // namespace kcs
