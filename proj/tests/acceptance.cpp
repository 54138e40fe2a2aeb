#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kcs/bandit.hpp"
#include "kcs/confbound.hpp"
#include "kcs/config.hpp"
#include "kcs/errors.hpp"
#include "support/instances.hpp"

using namespace kcs;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

Point scalar_point(double v) {
    Point p(1);
    p(0) = v;
    return p;
}

Verdict tightness() {
    const auto start = Clock::now();
    std::mt19937_64 rng(9001);
    std::uniform_int_distribution<std::size_t> tdist(1, 50);
    double min_ay = std::numeric_limits<double>::infinity();
    double min_igp = std::numeric_limits<double>::infinity();
    int instances = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const double lambda = std::array{0.01, 0.1, 1.0}[trial % 3];
        const double eta = std::array{0.002, 0.1}[trial % 2];
        const double delta = std::array{0.01, 0.1}[(trial / 6) % 2];
        const auto inst = testing::random_instance(50000 + trial, tdist(rng), 2, testing::random_spec(rng));
        const std::vector<double> alphas{lambda, 1.0 + eta};
        const auto s = testing::build_state(inst, alphas);

        ConfidenceConfig ay_cfg;
        ay_cfg.delta = delta;
        ay_cfg.lambda = lambda;
        ay_cfg.c = ay_cfg.sigma * ay_cfg.sigma / lambda;
        min_ay = std::min(min_ay, ay_radius(s, ay_cfg) - tilde_radius(s, ay_cfg, lambda));

        ConfidenceConfig igp_cfg;
        igp_cfg.delta = delta;
        igp_cfg.eta = eta;
        const double a = 1.0 + eta;
        igp_cfg.c = igp_cfg.sigma * igp_cfg.sigma / a;
        min_igp = std::min(min_igp, igp_radius(s, igp_cfg) - tilde_radius(s, igp_cfg, a) / std::sqrt(a));
        ++instances;
    }
    const double secs = seconds_since(start);
    return {min_ay > 0.0 && min_igp > 0.0 && instances >= 100 && secs < 10.0,
            fmt("%d instances, min margin vs AY %.4g, vs IGP %.4g, %.2f s (limit 10 s)", instances, min_ay,
                min_igp, secs)};
}

Verdict nesting() {
    const auto start = Clock::now();
    std::mt19937_64 rng(9101);
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        ConfidenceConfig cfg;
        std::uniform_int_distribution<std::size_t> tdist(0, 40);
        const auto inst = testing::random_instance(60000 + trial, tdist(rng), 2, testing::random_spec(rng));
        const auto s = testing::build_state(inst, cfg.alpha_grid);
        const Point x = sample_point(2, rng);
        const auto e = exact_bounds(s, cfg, x);
        const auto g = dual_bounds_grid(s, cfg, x);
        worst = std::max({worst, e.ucb - g.ucb, g.lcb - e.lcb});
        for (double a : cfg.alpha_grid) {
            const auto an = analytic_bounds(s, cfg, a, x);
            worst = std::max({worst, g.ucb - an.ucb, an.lcb - g.lcb});
        }
    }
    double worst_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ConfidenceConfig cfg;
        std::uniform_int_distribution<std::size_t> tdist(1, 10);
        const auto inst = testing::random_instance(61000 + trial, tdist(rng), 2, testing::random_spec(rng));
        const std::vector<double> alphas{cfg.matched_alpha()};
        const auto s = testing::build_state(inst, alphas);
        const Point x = sample_point(2, rng);
        const double primal = socp_primal_ucb(s, cfg, x);
        const double dual = exact_bounds(s, cfg, x).ucb;
        worst_gap = std::max(worst_gap, std::abs(dual - primal) / std::max(1.0, std::abs(primal)));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-9 && worst_gap <= 1e-4 && secs < 60.0,
            fmt("max nesting violation %.3g (slack 1e-9), max primal/dual gap %.3g (tol 1e-4), %.2f s", worst,
                worst_gap, secs)};
}

Verdict fidelity() {
    const auto start = Clock::now();
    std::mt19937_64 rng(9201);
    const std::vector<double> alphas{0.001, 0.01, 0.1, 1.0};
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = testing::random_instance(62000 + trial, 50, 2, testing::random_spec(rng));
        StateOptions opts;
        opts.reanchor_every = 0;
        RegressionState s(inst.spec, alphas, opts);
        std::vector<Point> seen;
        for (std::size_t i = 0; i < inst.xs.size(); ++i) {
            s.append(inst.xs[i], inst.y(static_cast<Eigen::Index>(i)));
            seen.push_back(inst.xs[i]);
            const Eigen::MatrixXd K = testing::dense_gram(inst.spec, seen);
            for (double a : alphas) {
                const auto& c = s.cache(a);
                const Eigen::MatrixXd Ka = testing::shifted(K, a);
                const Eigen::MatrixXd inv = Ka.fullPivLu().inverse();
                const Eigen::MatrixXd U = Ka.llt().matrixU();
                worst = std::max(worst, testing::rel_frob(c.inverse, inv));
                worst = std::max(worst, testing::rel_frob(c.chol_upper, U));
                worst = std::max(worst, testing::rel_err(c.logdet_scaled, testing::dense_logdet(K, a)));
            }
        }
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-8 && secs < 30.0,
            fmt("20 trajectories x 50 steps, max relative deviation %.3g (tol 1e-8), %.2f s", worst, secs)};
}

Verdict coverage() {
    const auto start = Clock::now();
    ExperimentConfig ec;
    ec.delta = 0.1;
    ec.T = 100;
    const ConfidenceConfig cfg = ec.confidence();
    const std::size_t runs = 200;
    std::map<Method, int> covered;
    std::map<Method, int> errors;
    const std::array methods{Method::cmm, Method::dmm, Method::amm, Method::ay, Method::igp};
    for (std::size_t run = 0; run < runs; ++run) {
        const BanditEnv env = make_env(70000 + run, ec.d, ec.kernel, ec.B, ec.sigma, ec.m);
        for (Method m : methods) {
            const auto trace = track_coverage(m, env, 100, cfg, 10);
            covered[m] += trace.covered && !trace.error ? 1 : 0;
            errors[m] += trace.error ? 1 : 0;
        }
    }
    const double secs = seconds_since(start);
    bool pass = secs < 300.0;
    std::ostringstream detail;
    for (Method m : methods) {
        const double frac = static_cast<double>(covered[m]) / static_cast<double>(runs);
        pass = pass && frac >= 0.9;
        detail << to_string(m) << " " << frac << (errors[m] ? " (" + std::to_string(errors[m]) + " errors)" : "")
               << ", ";
    }
    detail << fmt("%zu runs x 100 steps, %.1f s (limit 300 s)", runs, secs);
    return {pass, detail.str()};
}

struct RegretStudy {
    ExperimentConfig config;
    std::map<Policy, std::vector<RegretLog>> logs;
    double seconds = 0.0;
};

RegretStudy run_regret_study() {
    RegretStudy study;
    study.config.d = 2;
    study.config.T = 300;
    study.config.kernel = make_kernel(KernelFamily::rbf, 0.5);
    study.config.m = 100;
    const ConfidenceConfig cfg = study.config.confidence();
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const BanditEnv env = make_env(seed, 2, study.config.kernel, study.config.B, study.config.sigma,
                                       study.config.m);
        for (Policy p : study.config.methods) {
            study.logs[p].push_back(run_episode(p, env, 300, cfg));
        }
    }
    study.seconds = seconds_since(start);
    return study;
}

double mean_final(const std::vector<RegretLog>& logs) {
    double s = 0.0;
    for (const auto& l : logs) s += l.final_regret();
    return s / static_cast<double>(logs.size());
}

Verdict regret_ordering(const RegretStudy& study) {
    std::map<Policy, double> mean;
    int failed = 0;
    for (const auto& [p, logs] : study.logs) {
        mean[p] = mean_final(logs);
        for (const auto& l : logs) failed += l.error ? 1 : 0;
    }
    const double rnd = mean.at(Policy::random);
    bool pass = failed == 0 && study.seconds < 600.0;
    pass = pass && mean.at(Policy::dmm) < mean.at(Policy::amm);
    pass = pass && mean.at(Policy::amm) < mean.at(Policy::ay);
    pass = pass && mean.at(Policy::dmm) < mean.at(Policy::igp);
    for (Policy p : {Policy::cmm, Policy::dmm, Policy::amm, Policy::ay, Policy::igp}) pass = pass && mean.at(p) < rnd;
    std::ostringstream detail;
    for (const auto& [p, m] : mean) detail << to_string(p) << " " << fmt("%.2f", m) << ", ";
    detail << fmt("%d failed episodes, %.1f s (limit 600 s)", failed, study.seconds);
    return {pass, detail.str()};
}

Verdict elliptical(const RegretStudy& study) {
    const ConfidenceConfig cfg = study.config.confidence();
    double min_margin = std::numeric_limits<double>::infinity();
    int checked = 0;
    bool pass = true;
    for (const auto& [p, logs] : study.logs) {
        for (const auto& l : logs) {
            for (double a : cfg.alpha_grid) {
                const auto check = check_elliptical_potential(study.config.kernel, l.actions, a, 1e-9);
                pass = pass && check.pass;
                min_margin = std::min(min_margin, check.margin);
                ++checked;
            }
        }
    }
    return {pass, fmt("%d trajectory/alpha pairs, min margin rhs - lhs %.4g", checked, min_margin)};
}

double mean_step(const std::vector<RegretLog>& logs) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& l : logs)
        for (const auto& r : l.rounds) {
            s += r.step_seconds;
            ++n;
        }
    return s / static_cast<double>(n);
}

Verdict timing(const RegretStudy& study) {
    const std::size_t grid = study.config.confidence().alpha_grid.size();
    const double amm = mean_step(study.logs.at(Policy::amm));
    const double ay = mean_step(study.logs.at(Policy::ay));
    const double igp = mean_step(study.logs.at(Policy::igp));
    const double dmm = mean_step(study.logs.at(Policy::dmm));
    const auto within2 = [](double r) { return r >= 0.5 && r <= 2.0; };
    const double r_ay = amm / ay;
    const double r_igp = amm / igp;
    const double r_dmm = dmm / (static_cast<double>(grid) * amm);

    const auto& cmm_logs = study.logs.at(Policy::cmm);
    const std::size_t T = cmm_logs.front().rounds.size();
    std::vector<double> per_t(T, 0.0);
    for (const auto& l : cmm_logs)
        for (std::size_t i = 0; i < T; ++i) per_t[i] += l.rounds[i].step_seconds / static_cast<double>(cmm_logs.size());
    double tbar = 0.0;
    double ybar = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
        tbar += static_cast<double>(i);
        ybar += per_t[i];
    }
    tbar /= static_cast<double>(T);
    ybar /= static_cast<double>(T);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
        sxy += (static_cast<double>(i) - tbar) * (per_t[i] - ybar);
        sxx += (static_cast<double>(i) - tbar) * (static_cast<double>(i) - tbar);
    }
    const double slope = sxy / sxx;
    const std::size_t w = T / 6;
    double first = 0.0;
    double last = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        first += per_t[i] / static_cast<double>(w);
        last += per_t[T - w + i] / static_cast<double>(w);
    }
    const bool pass = within2(r_ay) && within2(r_igp) && within2(r_dmm) && slope > 0.0 && last > first;
    return {pass, fmt("AMM/AY %.2f, AMM/IGP %.2f, DMM/(%zu AMM) %.2f (band [0.5, 2]); CMM slope %.3g s/round, "
                      "first window %.3g s, last window %.3g s",
                      r_ay, r_igp, grid, r_dmm, slope, first, last)};
}

Verdict golden() {
    ConfidenceConfig cfg;
    cfg.sigma = 0.1;
    cfg.c = 1.0;
    cfg.delta = 0.01;
    cfg.B = 10.0;
    cfg.lambda = 0.01;
    cfg.alpha_grid = {0.01};
    const std::vector<double> alphas{0.01};
    const auto spec = make_kernel(KernelFamily::rbf, 0.5);
    const RegressionState empty(spec, alphas);
    RegressionState one(spec, alphas);
    one.append(scalar_point(0.5), 1.0);

    struct Golden {
        const char* name;
        double value;
        double expected;
    };
    const std::array values{
        Golden{"R0", radius_R(empty, cfg), 0.303485},
        Golden{"R1", radius_R(one, cfg), 0.384911},
        Golden{"R~", tilde_radius(one, cfg, 0.01), 1.066890},
        Golden{"ucb", analytic_bounds(one, cfg, 0.01, scalar_point(0.5)).ucb, 2.051693},
        Golden{"R~AY", ay_radius(one, cfg), 1.371827},
    };
    bool pass = true;
    std::ostringstream detail;
    for (const auto& g : values) {
        const double err = std::abs(g.value - g.expected);
        pass = pass && err <= 1e-5;
        detail << g.name << fmt(" %.7f (|err| %.1e), ", g.value, err);
    }
    detail << "tol 1e-5";
    return {pass, detail.str()};
}

Verdict guarded(const std::function<Verdict()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

}  // namespace

int main() {
    const auto start = Clock::now();
    int failures = 0;
    const auto report = [&](int id, const char* name, const Verdict& v) {
        std::printf("criterion %d %s: %s (%s)\n", id, name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    };
    report(1, "tightness", guarded(tightness));
    report(2, "bound nesting", guarded(nesting));
    report(3, "recursive-update fidelity", guarded(fidelity));
    report(4, "coverage", guarded(coverage));

    RegretStudy study;
    std::string study_error;
    try {
        study = run_regret_study();
    } catch (const std::exception& e) {
        study_error = e.what();
    }
    const auto with_study = [&](Verdict (*fn)(const RegretStudy&)) {
        if (!study_error.empty()) return Verdict{false, "regret study failed: " + study_error};
        return guarded([&] { return fn(study); });
    };
    report(5, "regret ordering", with_study(regret_ordering));
    report(6, "elliptical potential", with_study(elliptical));
    report(7, "scalar golden values", guarded(golden));
    report(8, "timing sanity", with_study(timing));
    std::printf("%d of 8 criteria failed, total %.1f s\n", failures, seconds_since(start));
    return failures == 0 ? 0 : 1;
}
