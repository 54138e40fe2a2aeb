#include "kcs/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "kcs/csv.hpp"
#include "kcs/errors.hpp"
#include "kcs/pool.hpp"

namespace kcs {
namespace {

struct Cell {
    ExperimentConfig cfg;
    std::filesystem::path dir;
    std::uint64_t hash = 0;
};

std::vector<Cell> prepare_cells(const ExperimentConfig& cfg, CommandReport& report) {
    const auto expanded = expand_sweeps(cfg);
    const std::filesystem::path root = cfg.output_dir;
    std::filesystem::create_directories(root);
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < expanded.size(); ++i) {
        Cell cell;
        cell.cfg = expanded[i];
        cell.cfg.validate();
        if (expanded.size() == 1) {
            cell.dir = root;
        } else {
            char name[32];
            std::snprintf(name, sizeof name, "cell_%03zu", i);
            cell.dir = root / name;
        }
        std::filesystem::create_directories(cell.dir);
        cell.hash = config_hash(cell.cfg);
        const auto config_path = cell.dir / "config.txt";
        std::ofstream(config_path) << serialize(cell.cfg);
        report.files.push_back(config_path);
        cells.push_back(std::move(cell));
    }
    if (expanded.size() > 1) {
        const auto path = root / "config.txt";
        std::ofstream(path) << serialize(cfg);
        report.files.push_back(path);
    }
    return cells;
}

BanditEnv cell_env(const ExperimentConfig& cfg, std::uint64_t seed) {
    return make_env(seed, cfg.d, cfg.kernel, cfg.env_norm(), cfg.env_noise(), cfg.m);
}

EpisodeOptions episode_options(const ExperimentConfig& cfg) {
    EpisodeOptions opts;
    opts.state = cfg.state;
    return opts;
}

std::vector<Method> bound_methods(const ExperimentConfig& cfg) {
    std::vector<Method> out;
    for (auto p : cfg.methods) {
        if (auto m = bound_method(p)) out.push_back(*m);
    }
    return out;
}

}  // namespace

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return out;
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const CommandOptions& options) {
    if (options.seed) cfg.seed = *options.seed;
    if (options.out) cfg.output_dir = options.out->string();
    if (options.jobs < 1) throw ConfigError("--jobs must be at least 1");
    cfg.validate();
    return cfg;
}

CommandReport cmd_run(const ExperimentConfig& cfg, const CommandOptions& options, std::ostream& log) {
    CommandReport report;
    const ExperimentConfig base = apply_overrides(cfg, options);
    const auto cells = prepare_cells(base, report);

    struct Job {
        std::size_t cell;
        Policy policy;
        std::size_t rep;
    };
    struct Outcome {
        double final_regret = 0.0;
        double mean_step = 0.0;
        std::optional<std::string> error;
        std::filesystem::path file;
    };
    std::vector<std::vector<BanditEnv>> envs(cells.size());
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cc = cells[c].cfg;
        for (std::size_t r = 0; r < cc.repetitions; ++r) {
            envs[c].push_back(cell_env(cc, cc.seed + r));
            if (envs[c].back().resamples > 0) {
                log << "cell " << c << " rep " << r << ": environment resampled "
                    << envs[c].back().resamples << " time(s)\n";
            }
        }
        for (auto p : cc.methods) {
            for (std::size_t r = 0; r < cc.repetitions; ++r) jobs.push_back({c, p, r});
        }
    }

    std::vector<Outcome> outcomes(jobs.size());
    parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
        const Job& job = jobs[i];
        const Cell& cell = cells[job.cell];
        const BanditEnv& env = envs[job.cell][job.rep];
        const RegretLog result =
            run_episode(job.policy, env, cell.cfg.T, cell.cfg.confidence(), episode_options(cell.cfg));
        Outcome& out = outcomes[i];
        out.final_regret = result.final_regret();
        double total = 0.0;
        for (const auto& r : result.rounds) total += r.step_seconds;
        out.mean_step = result.rounds.empty() ? 0.0 : total / static_cast<double>(result.rounds.size());
        out.error = result.error;
        out.file = cell.dir / ("regret_" + std::string(to_string(job.policy)) + "_rep" +
                               std::to_string(job.rep) + ".csv");
        write_regret_csv(out.file, result, cell.hash, cell.cfg.seed, env.seed, cell.cfg.output_timing);
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Cell& cell = cells[c];
        const auto path = cell.dir / "summary.csv";
        CsvWriter w(path, cell.hash, cell.cfg.seed,
                    {"method", "runs", "completed", "mean_final_regret", "std_final_regret",
                     "mean_step_seconds"});
        for (auto p : cell.cfg.methods) {
            std::vector<double> finals;
            std::vector<double> steps;
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                if (jobs[i].cell != c || jobs[i].policy != p) continue;
                report.files.push_back(outcomes[i].file);
                if (outcomes[i].error) {
                    const std::string msg = std::string(to_string(p)) + " rep " +
                                            std::to_string(jobs[i].rep) + ": " + *outcomes[i].error;
                    report.failures.push_back(msg);
                    w.comment("failed " + msg);
                    continue;
                }
                finals.push_back(outcomes[i].final_regret);
                steps.push_back(outcomes[i].mean_step);
            }
            const auto ms = mean_std(finals);
            const double step = cell.cfg.output_timing ? mean_std(steps).mean : 0.0;
            w.row({std::string(to_string(p)), std::to_string(cell.cfg.repetitions),
                   std::to_string(finals.size()), format_sig(ms.mean), format_sig(ms.std),
                   format_sig(step)});
            log << "cell " << c << " " << to_string(p) << ": final regret " << format_sig(ms.mean, 6)
                << " +/- " << format_sig(ms.std, 6) << " (" << finals.size() << "/"
                << cell.cfg.repetitions << " runs)\n";
        }
        w.close();
        report.files.push_back(path);
    }
    for (const auto& f : report.failures) log << "episode failed: " << f << '\n';
    report.exit_code = report.failures.empty() ? exit_ok : exit_numeric;
    return report;
}

CommandReport cmd_coverage(const ExperimentConfig& cfg, const CommandOptions& options,
                           std::ostream& log) {
    CommandReport report;
    const ExperimentConfig base = apply_overrides(cfg, options);
    const auto cells = prepare_cells(base, report);

    struct Job {
        std::size_t cell;
        Method method;
        std::size_t run;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (auto m : bound_methods(cells[c].cfg)) {
            for (std::size_t r = 0; r < cells[c].cfg.coverage_runs; ++r) jobs.push_back({c, m, r});
        }
    }
    if (jobs.empty()) throw ConfigError("coverage needs at least one bound method in experiment.methods");

    std::vector<CoverageTrace> traces(jobs.size());
    parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
        const auto& cc = cells[jobs[i].cell].cfg;
        const BanditEnv env = cell_env(cc, cc.seed + jobs[i].run);
        traces[i] = track_coverage(jobs[i].method, env, cc.T, cc.confidence(), cc.coverage_probes,
                                   episode_options(cc));
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Cell& cell = cells[c];
        const auto path = cell.dir / "coverage.csv";
        CsvWriter w(path, cell.hash, cell.cfg.seed,
                    {"method", "runs", "covered", "coverage", "errors", "mean_final_radius",
                     "max_final_radius", "mean_half_width"});
        for (auto m : bound_methods(cell.cfg)) {
            std::size_t runs = 0, covered = 0, errors = 0;
            std::vector<double> radii, widths;
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                if (jobs[i].cell != c || jobs[i].method != m) continue;
                const auto& tr = traces[i];
                ++runs;
                if (tr.error) {
                    ++errors;
                    report.failures.push_back(std::string(to_string(m)) + " run " +
                                              std::to_string(jobs[i].run) + ": " + *tr.error);
                    continue;
                }
                if (tr.covered) ++covered;
                radii.push_back(tr.final_radius);
                widths.push_back(tr.mean_half_width);
            }
            const double frac = static_cast<double>(covered) / static_cast<double>(runs);
            const double max_radius = radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end());
            w.row({std::string(to_string(m)), std::to_string(runs), std::to_string(covered),
                   format_sig(frac), std::to_string(errors), format_sig(mean_std(radii).mean),
                   format_sig(max_radius), format_sig(mean_std(widths).mean)});
            log << "cell " << c << " " << to_string(m) << ": coverage " << format_sig(frac, 6) << " ("
                << covered << "/" << runs << ")\n";
        }
        w.close();
        report.files.push_back(path);
    }
    for (const auto& f : report.failures) log << "run failed: " << f << '\n';
    report.exit_code = report.failures.empty() ? exit_ok : exit_numeric;
    return report;
}

CommandReport cmd_curves(const ExperimentConfig& cfg, const CommandOptions& options,
                         std::ostream& log) {
    CommandReport report;
    const ExperimentConfig base = apply_overrides(cfg, options);
    for (const auto& cell : expand_sweeps(base)) {
        if (cell.d != 1) throw ConfigError("curves needs experiment.d = 1");
    }
    const auto cells = prepare_cells(base, report);

    parallel_for(cells.size(), options.jobs, [&](std::size_t c) {
        const Cell& cell = cells[c];
        const auto& cc = cell.cfg;
        const BanditEnv env = cell_env(cc, cc.seed);
        const ConfidenceConfig conf = cc.confidence();
        const auto methods = bound_methods(cc);

        std::set<double> alpha_set;
        for (auto m : methods) {
            ConfidenceConfig mc = conf;
            mc.method = m;
            for (double a : mc.required_alphas()) alpha_set.insert(a);
        }
        const std::vector<double> alphas(alpha_set.begin(), alpha_set.end());
        RegressionState state(cc.kernel, alphas, cc.state);
        Rng point_rng = make_stream(env.seed, Stream::action_sets);
        Rng noise_rng = make_stream(env.seed, Stream::noise);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t t = 0; t < cc.curves_t; ++t) {
            const Point x = sample_point(1, point_rng);
            state.append(x, true_f(env, x) + env.sigma * normal(noise_rng));
        }

        std::vector<Point> grid;
        for (std::size_t i = 0; i < cc.curves_resolution; ++i) {
            Point x(1);
            x(0) = static_cast<double>(i) / static_cast<double>(cc.curves_resolution - 1);
            grid.push_back(x);
        }
        const auto path = cell.dir / "curves.csv";
        CsvWriter w(path, cell.hash, cc.seed, {"method", "x", "f_star", "lcb", "ucb"},
                    "t=" + std::to_string(cc.curves_t));
        for (auto m : methods) {
            ConfidenceConfig mc = conf;
            mc.method = m;
            const auto bounds = compute_bounds(state, mc, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                w.row({std::string(to_string(m)), format_sig(grid[i](0)),
                       format_sig(true_f(env, grid[i])), format_sig(bounds[i].lcb),
                       format_sig(bounds[i].ucb)});
            }
        }
        w.close();
    });
    for (const auto& cell : cells) {
        report.files.push_back(cell.dir / "curves.csv");
        log << "wrote " << (cell.dir / "curves.csv").string() << '\n';
    }
    return report;
}

CommandReport cmd_bench(const ExperimentConfig& cfg, const CommandOptions& options,
                        std::ostream& log) {
    CommandReport report;
    const ExperimentConfig base = apply_overrides(cfg, options);
    const auto cells = prepare_cells(base, report);
    if (options.jobs > 1) log << "note: concurrent jobs share cores and inflate step times\n";

    struct Job {
        std::size_t cell;
        Policy policy;
        std::size_t rep;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (auto p : cells[c].cfg.methods) {
            for (std::size_t r = 0; r < cells[c].cfg.repetitions; ++r) jobs.push_back({c, p, r});
        }
    }
    std::vector<RegretLog> logs(jobs.size());
    parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
        const auto& cc = cells[jobs[i].cell].cfg;
        const BanditEnv env = cell_env(cc, cc.seed + jobs[i].rep);
        logs[i] = run_episode(jobs[i].policy, env, cc.T, cc.confidence(), episode_options(cc));
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Cell& cell = cells[c];
        const auto& cc = cell.cfg;
        const auto path = cell.dir / "bench.csv";
        CsvWriter w(path, cell.hash, cc.seed,
                    {"method", "t_start", "t_end", "mean_step_seconds", "samples"});
        for (auto p : cc.methods) {
            for (std::size_t start = 1; start <= cc.T; start += cc.bench_window) {
                const std::size_t end = std::min(cc.T, start + cc.bench_window - 1);
                double total = 0.0;
                std::size_t samples = 0;
                for (std::size_t i = 0; i < jobs.size(); ++i) {
                    if (jobs[i].cell != c || jobs[i].policy != p) continue;
                    for (const auto& r : logs[i].rounds) {
                        if (r.t >= start && r.t <= end) {
                            total += r.step_seconds;
                            ++samples;
                        }
                    }
                }
                w.row({std::string(to_string(p)), std::to_string(start), std::to_string(end),
                       format_sig(samples ? total / static_cast<double>(samples) : 0.0),
                       std::to_string(samples)});
            }
        }
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (jobs[i].cell == c && logs[i].error) {
                report.failures.push_back(std::string(to_string(jobs[i].policy)) + " rep " +
                                          std::to_string(jobs[i].rep) + ": " + *logs[i].error);
                w.comment("failed " + report.failures.back());
            }
        }
        w.close();
        report.files.push_back(path);
        log << "wrote " << path.string() << '\n';
    }
    for (const auto& f : report.failures) log << "episode failed: " << f << '\n';
    report.exit_code = report.failures.empty() ? exit_ok : exit_numeric;
    return report;
}

}  // namespace kcs
