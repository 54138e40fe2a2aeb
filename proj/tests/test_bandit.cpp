#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "kcs/bandit.hpp"
#include "kcs/errors.hpp"
#include "support/instances.hpp"

using namespace kcs;

namespace {

ConfidenceConfig default_cfg() {
    ConfidenceConfig cfg;
    cfg.alpha_grid = {0.001, 0.003, 0.01, 0.03, 0.1};
    return cfg;
}

Point pt2(double a, double b) {
    Point p(2);
    p << a, b;
    return p;
}

bool same_log(const RegretLog& a, const RegretLog& b) {
    if (a.rounds.size() != b.rounds.size()) return false;
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
        const auto& x = a.rounds[i];
        const auto& y = b.rounds[i];
        const bool ucb_same = (std::isnan(x.ucb_at_chosen) && std::isnan(y.ucb_at_chosen)) ||
                              x.ucb_at_chosen == y.ucb_at_chosen;
        if (x.t != y.t || x.action_index != y.action_index || x.reward != y.reward ||
            x.inst_regret != y.inst_regret || x.cum_regret != y.cum_regret || !ucb_same) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("seed streams are distinct and reproducible") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    Rng a = make_stream(9, Stream::noise);
    Rng b = make_stream(9, Stream::noise);
    CHECK(a() == b());
}

TEST_CASE("environment construction") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const BanditEnv e1 = make_env(42, 3, spec, 10.0, 0.1);
    const BanditEnv e2 = make_env(42, 3, spec, 10.0, 0.1);
    CHECK(e1.inducing.size() == 20);
    CHECK(e1.m == 100);
    CHECK(e1.weights == e2.weights);
    CHECK(e1.scale == e2.scale);
    for (std::size_t i = 0; i < e1.inducing.size(); ++i) {
        CHECK(e1.inducing[i] == e2.inducing[i]);
        CHECK(e1.inducing[i].minCoeff() >= 0.0);
        CHECK(e1.inducing[i].maxCoeff() <= 1.0);
    }
    // ||f*||_H^2 = b^2 w^T K_Z w = B^2
    const Eigen::MatrixXd KZ = testing::dense_gram(spec, e1.inducing);
    const double norm2 = e1.scale * e1.scale * e1.weights.dot(KZ * e1.weights);
    CHECK(std::abs(norm2 - 100.0) / 100.0 < 1e-8);
    CHECK(std::abs(e1.rkhs_norm() - 10.0) / 10.0 < 1e-8);
    CHECK(make_env(43, 3, spec, 10.0, 0.1).weights != e1.weights);
}

TEST_CASE("single inducing point with unit weight gives b = B") {
    const auto spec = make_kernel(KernelFamily::matern32, 0.3);
    Eigen::VectorXd w(1);
    w << 1.0;
    const BanditEnv env = make_env({pt2(0.2, 0.4)}, w, spec, 10.0, 0.1);
    CHECK(env.scale == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(true_f(env, pt2(0.2, 0.4)) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("degenerate weights are rejected") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.3);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS((void)make_env({pt2(0.1, 0.1), pt2(0.9, 0.9)}, w, spec, 10.0, 0.1), NumericError);
    CHECK_THROWS_AS((void)make_env(1, 0, spec, 10.0, 0.1), ConfigError);
    CHECK_THROWS_AS((void)make_env(1, 2, spec, 0.0, 0.1), ConfigError);
}

TEST_CASE("true function at far-apart inducing points") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.01);
    const std::vector<Point> z{pt2(0.1, 0.1), pt2(0.9, 0.1), pt2(0.5, 0.9)};
    Eigen::VectorXd w(3);
    w << 0.7, -1.3, 2.1;
    const BanditEnv env = make_env(z, w, spec, 10.0, 0.1);
    for (int j = 0; j < 3; ++j) {
        CHECK(true_f(env, z[static_cast<std::size_t>(j)]) == doctest::Approx(env.scale * w(j)).epsilon(1e-12));
    }
}

TEST_CASE("true function: linear in the weights and matches a direct sum") {
    std::mt19937_64 rng(301);
    const auto spec = make_kernel(KernelFamily::matern52, 0.4);
    const BanditEnv env = make_env(7, 2, spec, 10.0, 0.1);
    BanditEnv doubled = env;
    doubled.weights *= 2.0;
    double bound = 0.0;
    for (int i = 0; i < 20; ++i) bound += std::abs(env.weights(i));
    bound *= env.scale;
    for (int i = 0; i < 50; ++i) {
        const Point x = sample_point(2, rng);
        double direct = 0.0;
        for (std::size_t k = 0; k < env.inducing.size(); ++k) {
            direct += env.weights(static_cast<Eigen::Index>(k)) * eval(spec, x, env.inducing[k]);
        }
        direct *= env.scale;
        CHECK(std::abs(true_f(env, x) - direct) < 1e-12);
        CHECK(true_f(doubled, x) == doctest::Approx(2.0 * true_f(env, x)).epsilon(1e-14));
        CHECK(std::abs(true_f(env, x)) <= bound);
    }
}

TEST_CASE("action sets") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    BanditEnv env = make_env(3, 4, spec, 10.0, 0.1, 37);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng a(seed);
        Rng b(seed);
        const auto s1 = sample_action_set(env, a);
        const auto s2 = sample_action_set(env, b);
        REQUIRE(s1.size() == 37);
        for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i] == s2[i]);
    }
    Rng rng(99);
    double sum = 0.0;
    std::size_t count = 0;
    while (count < 10000 * 4) {
        for (const auto& p : sample_action_set(env, rng)) {
            CHECK(p.minCoeff() >= 0.0);
            CHECK(p.maxCoeff() <= 1.0);
            sum += p.sum();
            count += 4;
        }
    }
    CHECK(std::abs(sum / static_cast<double>(count) - 0.5) < 0.05);
}

TEST_CASE("action selection") {
    const std::vector<double> a{1.0, 3.0, 2.0};
    CHECK(select_action(a) == 1);
    const std::vector<double> b{2.0, 2.0};
    CHECK(select_action(b) == 0);
    const std::vector<double> c(100, 0.5);
    CHECK(select_action(c) == 0);
    const std::vector<double> d{1.0, std::nan("")};
    CHECK_THROWS_AS((void)select_action(d), NumericError);
    CHECK_THROWS_AS((void)select_action(std::vector<double>{}), InputError);
}

TEST_CASE("policy names") {
    for (auto p : {Policy::cmm, Policy::dmm, Policy::amm, Policy::ay, Policy::igp, Policy::random}) {
        CHECK(parse_policy(to_string(p)) == p);
    }
    CHECK_FALSE(bound_method(Policy::random).has_value());
    CHECK(bound_method(Policy::ay) == Method::ay);
    CHECK_THROWS_AS((void)parse_policy("thompson"), ConfigError);
}

TEST_CASE("episode invariants for every policy") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const BanditEnv env = make_env(11, 2, spec, 10.0, 0.1, 30);
    for (auto p : {Policy::cmm, Policy::dmm, Policy::amm, Policy::ay, Policy::igp, Policy::random}) {
        const RegretLog log = run_episode(p, env, 25, default_cfg());
        REQUIRE_FALSE(log.error);
        REQUIRE(log.rounds.size() == 25);
        CHECK(log.actions.size() == 25);
        double prev = 0.0;
        for (std::size_t i = 0; i < log.rounds.size(); ++i) {
            const auto& r = log.rounds[i];
            CHECK(r.t == i + 1);
            CHECK(r.inst_regret >= 0.0);
            CHECK(r.cum_regret >= prev);
            CHECK(r.action_index < 30);
            CHECK(r.step_seconds >= 0.0);
            prev = r.cum_regret;
        }
    }
}

TEST_CASE("noiseless single round regret is the gap to the round maximum") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const BanditEnv env = make_env(13, 2, spec, 10.0, 0.0, 50);
    ConfidenceConfig cfg = default_cfg();
    const RegretLog log = run_episode(Policy::amm, env, 1, cfg);
    REQUIRE(log.rounds.size() == 1);
    Rng rng = make_stream(env.seed, Stream::action_sets);
    const auto actions = sample_action_set(env, rng);
    double best = -1e300;
    for (const auto& a : actions) best = std::max(best, true_f(env, a));
    const auto& r = log.rounds[0];
    CHECK(r.inst_regret == doctest::Approx(best - true_f(env, actions[r.action_index])).epsilon(1e-14));
    CHECK(r.inst_regret >= 0.0);
    CHECK(r.reward == true_f(env, actions[r.action_index]));
}

TEST_CASE("identical seeds give identical logs") {
    const auto spec = make_kernel(KernelFamily::matern52, 0.5);
    const BanditEnv env = make_env(17, 2, spec, 10.0, 0.1, 40);
    for (auto p : {Policy::cmm, Policy::dmm, Policy::random}) {
        const RegretLog a = run_episode(p, env, 20, default_cfg());
        const RegretLog b = run_episode(p, env, 20, default_cfg());
        CHECK(same_log(a, b));
    }
}

TEST_CASE("a singleton grid reproduces the analytic policy") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const BanditEnv env = make_env(19, 2, spec, 10.0, 0.1, 40);
    ConfidenceConfig cfg = default_cfg();
    cfg.alpha_grid = {cfg.matched_alpha()};
    const RegretLog dmm = run_episode(Policy::dmm, env, 30, cfg);
    const RegretLog amm = run_episode(Policy::amm, env, 30, cfg);
    CHECK(same_log(dmm, amm));
}

TEST_CASE("grid policy requires the matched alpha") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const BanditEnv env = make_env(19, 2, spec, 10.0, 0.1, 10);
    ConfidenceConfig cfg = default_cfg();
    cfg.alpha_grid = {0.1, 1.0};
    CHECK_THROWS_AS((void)run_episode(Policy::dmm, env, 3, cfg), ConfigError);
    CHECK_THROWS_AS((void)run_episode(Policy::amm, env, 0, cfg), ConfigError);
}

TEST_CASE("bound failures abort the episode with a diagnostic") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    // Data drawn from a norm-10 function but the bound assumes norm 0.01.
    const BanditEnv env = make_env(23, 2, spec, 10.0, 0.1, 20);
    ConfidenceConfig cfg = default_cfg();
    cfg.B = 0.01;
    const RegretLog log = run_episode(Policy::dmm, env, 30, cfg);
    REQUIRE(log.error.has_value());
    CHECK(log.rounds.size() < 30);
    CHECK(log.error->find("round") != std::string::npos);
}

TEST_CASE("random policy regret matches a direct Monte-Carlo estimate") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const BanditEnv env = make_env(29, 2, spec, 10.0, 0.1, 100);
    const std::size_t T = 2000;
    const RegretLog log = run_episode(Policy::random, env, T, default_cfg());
    const double per_round = log.final_regret() / static_cast<double>(T);

    // E[max f - f(uniform action)] over fresh action sets.
    Rng rng(123456);
    double acc = 0.0;
    const int sets = 4000;
    for (int i = 0; i < sets; ++i) {
        const auto actions = sample_action_set(env, rng);
        double best = -1e300;
        double mean = 0.0;
        for (const auto& a : actions) {
            const double f = true_f(env, a);
            best = std::max(best, f);
            mean += f;
        }
        acc += best - mean / static_cast<double>(actions.size());
    }
    const double expected = acc / sets;
    CHECK(std::abs(per_round - expected) <= 0.1 * expected);
}

TEST_CASE("per-round regret bound on noiseless runs") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const BanditEnv env = make_env(seed, 2, spec, 10.0, 0.0, 50);
        ConfidenceConfig cfg = default_cfg();
        const double alpha = cfg.matched_alpha();
        const RegretLog log = run_episode(Policy::amm, env, 60, cfg);
        REQUIRE_FALSE(log.error);
        // Replay the trajectory to recover the pre-round state.
        const std::vector<double> alphas{alpha};
        RegressionState state(spec, alphas);
        for (std::size_t i = 0; i < log.rounds.size(); ++i) {
            const Point& x = log.actions[i];
            const double width = 2.0 * tilde_radius(state, cfg, alpha) / std::sqrt(alpha) *
                                 std::sqrt(state.ridge_var(alpha, x));
            CHECK(log.rounds[i].inst_regret <= width + 1e-9);
            state.append(x, log.rounds[i].reward);
        }
    }
}

TEST_CASE("empirical information gain") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const std::vector<double> alphas{0.01};
    RegressionState s(spec, alphas);
    CHECK(info_gain_empirical(s, 0.01) == 0.0);
    s.append(pt2(0.3, 0.3), 1.0);
    CHECK(info_gain_empirical(s, 0.01) == doctest::Approx(0.5 * std::log(101.0)).epsilon(1e-12));
    CHECK(info_gain_empirical(s, 0.01) == doctest::Approx(2.3075603).epsilon(1e-7));
    std::mt19937_64 rng(41);
    double prev = info_gain_empirical(s, 0.01);
    for (int i = 0; i < 40; ++i) {
        s.append(sample_point(2, rng), 0.0);
        CHECK(info_gain_empirical(s, 0.01) >= prev);
        prev = info_gain_empirical(s, 0.01);
    }
}

TEST_CASE("elliptical potential") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const auto empty = check_elliptical_potential(spec, std::vector<Point>{}, 0.01);
    CHECK(empty.lhs == 0.0);
    CHECK(empty.rhs == 0.0);
    CHECK(empty.pass);

    const std::vector<Point> one{pt2(0.5, 0.5)};
    const auto single = check_elliptical_potential(spec, one, 0.01);
    CHECK(single.lhs == 1.0);
    CHECK(single.rhs == doctest::Approx(1.5 * std::log(101.0)).epsilon(1e-12));
    CHECK(single.rhs == doctest::Approx(6.9226808).epsilon(1e-7));
    CHECK(single.pass);

    for (std::uint64_t seed : {51u, 52u, 53u}) {
        const BanditEnv env = make_env(seed, 2, spec, 10.0, 0.1, 50);
        const RegretLog log = run_episode(Policy::dmm, env, 200, default_cfg());
        REQUIRE_FALSE(log.error);
        for (double a : {0.001, 0.01, 0.1}) {
            const auto check = check_elliptical_potential(spec, log.actions, a);
            INFO("seed " << seed << " alpha " << a << " margin " << check.margin);
            CHECK(check.pass);
            CHECK(check.margin == doctest::Approx(check.rhs - check.lhs));
        }
    }
}

TEST_CASE("coverage tracking on a small study") {
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    ConfidenceConfig cfg = default_cfg();
    cfg.delta = 0.1;
    for (auto m : {Method::cmm, Method::dmm, Method::amm, Method::ay, Method::igp}) {
        std::size_t covered = 0;
        for (std::uint64_t run = 0; run < 5; ++run) {
            const BanditEnv env = make_env(700 + run, 2, spec, 10.0, 0.1, 20);
            const CoverageTrace tr = track_coverage(m, env, 20, cfg, 5);
            REQUIRE_FALSE(tr.error);
            CHECK(tr.checks == 21 * 25);
            CHECK(tr.mean_half_width > 0.0);
            if (tr.covered) ++covered;
        }
        CHECK(covered >= 4);
    }
}
