#include "kcs/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "kcs/errors.hpp"

namespace kcs {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos
                                                                                   : comma - start));
        out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double to_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

std::uint64_t to_u64(std::string_view key, std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(std::string(key) + ": expected a nonnegative integer, got '" +
                          std::string(text) + "'");
    }
    return v;
}

int to_int(std::string_view key, std::string_view text) {
    const auto v = to_u64(key, text);
    if (v > 1'000'000) throw ConfigError(std::string(key) + ": value too large");
    return static_cast<int>(v);
}

bool to_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
}

std::vector<double> to_doubles(std::string_view key, std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
    return out;
}

std::string doubles_text(const std::vector<double>& values) {
    std::vector<std::string> items;
    for (double v : values) items.push_back(format_double(v));
    return join(items);
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::optional<std::string>(const ExperimentConfig&)>;

struct Field {
    std::string key;
    Setter set;
    Getter get;
    bool list = false;
};

template <typename T>
Getter optional_double(std::optional<T> ExperimentConfig::*member) {
    return [member](const ExperimentConfig& c) -> std::optional<std::string> {
        if (!(c.*member)) return std::nullopt;
        return format_double(*(c.*member));
    };
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto num = [&f](std::string key, double ExperimentConfig::*member) {
            f.push_back({key,
                         [key, member](ExperimentConfig& c, std::string_view v) {
                             c.*member = to_double(key, v);
                         },
                         [member](const ExperimentConfig& c) -> std::optional<std::string> {
                             return format_double(c.*member);
                         }});
        };
        auto opt = [&f](std::string key, std::optional<double> ExperimentConfig::*member) {
            f.push_back({key,
                         [key, member](ExperimentConfig& c, std::string_view v) {
                             c.*member = to_double(key, v);
                         },
                         optional_double(member)});
        };
        auto count = [&f](std::string key, std::size_t ExperimentConfig::*member) {
            f.push_back({key,
                         [key, member](ExperimentConfig& c, std::string_view v) {
                             c.*member = static_cast<std::size_t>(to_u64(key, v));
                         },
                         [member](const ExperimentConfig& c) -> std::optional<std::string> {
                             return std::to_string(c.*member);
                         }});
        };
        auto integer = [&f](std::string key, int ExperimentConfig::*member) {
            f.push_back({key,
                         [key, member](ExperimentConfig& c, std::string_view v) {
                             c.*member = to_int(key, v);
                         },
                         [member](const ExperimentConfig& c) -> std::optional<std::string> {
                             return std::to_string(c.*member);
                         }});
        };

        f.push_back({"kernel.family",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.kernel.family = parse_kernel_family(v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return std::string(to_string(c.kernel.family));
                     }});
        f.push_back({"kernel.lengthscale",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.kernel.lengthscale = to_double("kernel.lengthscale", v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return format_double(c.kernel.lengthscale);
                     }});
        f.push_back({"bound.method",
                     [](ExperimentConfig& c, std::string_view v) { c.bound_method = parse_method(v); },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return std::string(to_string(c.bound_method));
                     }});
        num("bound.sigma", &ExperimentConfig::sigma);
        num("bound.B", &ExperimentConfig::B);
        num("bound.delta", &ExperimentConfig::delta);
        opt("bound.c", &ExperimentConfig::c);
        f.push_back({"bound.alpha_grid",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.alpha_grid = to_doubles("bound.alpha_grid", v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         if (!c.alpha_grid) return std::nullopt;
                         return doubles_text(*c.alpha_grid);
                     },
                     true});
        opt("bound.lambda", &ExperimentConfig::lambda);
        opt("bound.eta", &ExperimentConfig::eta);

        integer("experiment.d", &ExperimentConfig::d);
        count("experiment.T", &ExperimentConfig::T);
        integer("experiment.m", &ExperimentConfig::m);
        count("experiment.repetitions", &ExperimentConfig::repetitions);
        f.push_back({"experiment.seed",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.seed = to_u64("experiment.seed", v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return std::to_string(c.seed);
                     }});
        f.push_back({"experiment.methods",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.methods.clear();
                         for (const auto& item : split_list(v)) c.methods.push_back(parse_policy(item));
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         std::vector<std::string> items;
                         for (auto p : c.methods) items.emplace_back(to_string(p));
                         return join(items);
                     },
                     true});

        opt("env.sigma", &ExperimentConfig::env_sigma);
        opt("env.B", &ExperimentConfig::env_B);

        count("coverage.runs", &ExperimentConfig::coverage_runs);
        count("coverage.probes", &ExperimentConfig::coverage_probes);
        count("curves.resolution", &ExperimentConfig::curves_resolution);
        count("curves.t", &ExperimentConfig::curves_t);
        count("bench.window", &ExperimentConfig::bench_window);

        f.push_back({"state.reanchor_every",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.state.reanchor_every =
                             static_cast<std::size_t>(to_u64("state.reanchor_every", v));
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return std::to_string(c.state.reanchor_every);
                     }});
        f.push_back({"state.jitter",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.state.jitter = to_double("state.jitter", v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return format_double(c.state.jitter);
                     }});

        f.push_back({"output.dir",
                     [](ExperimentConfig& c, std::string_view v) {
                         if (v.empty()) throw ConfigError("output.dir must not be empty");
                         c.output_dir = std::string(v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return c.output_dir;
                     }});
        f.push_back({"output.timing",
                     [](ExperimentConfig& c, std::string_view v) {
                         c.output_timing = to_bool("output.timing", v);
                     },
                     [](const ExperimentConfig& c) -> std::optional<std::string> {
                         return std::string(c.output_timing ? "true" : "false");
                     }});
        return f;
    }();
    return table;
}

const Field* find_field(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

/// Full key for a sweep target: exact match, or a unique match on the last segment.
const Field& resolve_sweep_target(std::string_view name) {
    if (const Field* f = find_field(name)) {
        if (f->list) throw ConfigError("sweep." + std::string(name) + ": list-valued keys cannot be swept");
        return *f;
    }
    const Field* match = nullptr;
    for (const auto& f : fields()) {
        const auto dot = f.key.rfind('.');
        if (std::string_view(f.key).substr(dot + 1) == name) {
            if (match) {
                throw ConfigError("sweep." + std::string(name) + " is ambiguous; use the full key");
            }
            match = &f;
        }
    }
    if (!match) throw ConfigError("sweep." + std::string(name) + ": unknown key");
    if (match->list) throw ConfigError("sweep." + std::string(name) + ": list-valued keys cannot be swept");
    return *match;
}

double kernel_c(const KernelSpec& spec, std::size_t T, int d) {
    if (spec.family == KernelFamily::rbf) return 1.0;
    const double nu = spec.smoothness();
    const double dd = static_cast<double>(d);
    return std::pow(static_cast<double>(T), -dd / (2.0 * dd + 2.0 * nu));
}

}  // namespace

ConfidenceConfig ExperimentConfig::confidence() const {
    ConfidenceConfig cc;
    cc.sigma = sigma;
    cc.B = B;
    cc.delta = delta;
    cc.method = bound_method;
    cc.c = c.value_or(kernel_c(kernel, T, d));
    const double matched = sigma * sigma / cc.c;
    if (alpha_grid) {
        cc.alpha_grid = *alpha_grid;
    } else {
        cc.alpha_grid.clear();
        for (double f : {0.1, 0.3, 1.0, 3.0, 10.0}) cc.alpha_grid.push_back(f * matched);
    }
    cc.lambda = lambda.value_or(matched);
    cc.eta = eta.value_or(2.0 / static_cast<double>(std::max<std::size_t>(T, 1)));
    return cc;
}

void ExperimentConfig::validate() const {
    kernel.validate();
    if (d < 1) throw ConfigError("experiment.d must be at least 1");
    if (T < 1) throw ConfigError("experiment.T must be at least 1");
    if (m < 1) throw ConfigError("experiment.m must be at least 1");
    if (repetitions < 1) throw ConfigError("experiment.repetitions must be at least 1");
    if (methods.empty()) throw ConfigError("experiment.methods must not be empty");
    for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            if (methods[i] == methods[j]) throw ConfigError("experiment.methods lists a method twice");
        }
    }
    if (!(sigma > 0.0)) throw ConfigError("bound.sigma must be positive");
    if (env_sigma && !(*env_sigma >= 0.0)) throw ConfigError("env.sigma must be nonnegative");
    if (env_B && !(*env_B > 0.0)) throw ConfigError("env.B must be positive");
    if (coverage_runs < 1) throw ConfigError("coverage.runs must be at least 1");
    if (curves_resolution < 2) throw ConfigError("curves.resolution must be at least 2");
    if (bench_window < 1) throw ConfigError("bench.window must be at least 1");
    if (!(state.jitter >= 0.0)) throw ConfigError("state.jitter must be nonnegative");
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");

    const ConfidenceConfig cc = confidence();
    cc.validate();
    for (auto p : methods) {
        if (p == Policy::dmm && !cc.grid_contains_matched_alpha()) {
            throw ConfigError("dmm needs sigma^2/c in bound.alpha_grid");
        }
    }
    if (!sweeps.empty()) {
        for (const auto& cell : expand_sweeps(*this)) cell.validate();
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "missing key");
        if (value.empty()) throw ConfigError(where + "missing value for " + key);
        if (const auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
            throw ConfigError(where + key + " already set on line " + std::to_string(it->second));
        }
        try {
            if (key.rfind("sweep.", 0) == 0) {
                const Field& target = resolve_sweep_target(std::string_view(key).substr(6));
                for (const auto& [existing, _] : cfg.sweeps) {
                    if (existing == target.key) throw ConfigError(target.key + " swept twice");
                }
                auto values = split_list(value);
                ExperimentConfig probe;
                for (const auto& v : values) target.set(probe, v);
                cfg.sweeps.emplace_back(target.key, std::move(values));
            } else if (const Field* f = find_field(key)) {
                f->set(cfg, value);
            } else {
                throw ConfigError("unknown key " + key);
            }
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string serialize(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        if (auto v = f.get(cfg)) out += f.key + " = " + *v + "\n";
    }
    for (const auto& [key, values] : cfg.sweeps) out += "sweep." + key + " = " + join(values) + "\n";
    return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    ExperimentConfig keyed = cfg;
    keyed.output_dir.clear();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize(keyed)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::vector<ExperimentConfig> expand_sweeps(const ExperimentConfig& cfg) {
    ExperimentConfig base = cfg;
    base.sweeps.clear();
    std::vector<ExperimentConfig> cells{base};
    for (const auto& [key, values] : cfg.sweeps) {
        const Field* f = find_field(key);
        if (!f) throw ConfigError("sweep over unknown key " + key);
        std::vector<ExperimentConfig> next;
        next.reserve(cells.size() * values.size());
        for (const auto& cell : cells) {
            for (const auto& v : values) {
                ExperimentConfig c = cell;
                f->set(c, v);
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    return cells;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
}

}  // namespace kcs
