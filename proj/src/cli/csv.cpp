#include "kcs/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "kcs/config.hpp"
#include "kcs/errors.hpp"

namespace kcs {

std::string format_sig(double value, int digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash,
                     std::uint64_t master_seed, const std::vector<std::string>& columns,
                     std::string_view extra_meta)
    : path_(path), columns_(columns.size()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::out | std::ios::trunc);
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << "# config_hash=" << hash_hex(config_hash) << ",master_seed=" << master_seed;
    if (!extra_meta.empty()) out_ << ',' << extra_meta;
    out_ << '\n';
    bool first = true;
    for (const auto& c : columns) {
        if (!first) out_ << ',';
        out_ << c;
        first = false;
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) {
        throw InternalError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(columns_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::comment(std::string_view text) { out_ << "# " << text << '\n'; }

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw std::runtime_error("failed writing " + path_.string());
}

void write_regret_csv(const std::filesystem::path& path, const RegretLog& log,
                      std::uint64_t config_hash, std::uint64_t master_seed,
                      std::uint64_t episode_seed, bool include_timing) {
    const std::string meta = "method=" + std::string(to_string(log.policy)) +
                             ",episode_seed=" + std::to_string(episode_seed);
    CsvWriter w(path, config_hash, master_seed, kRegretColumns, meta);
    for (const auto& r : log.rounds) {
        w.row({std::to_string(r.t), std::to_string(r.action_index), format_sig(r.reward),
               format_sig(r.inst_regret), format_sig(r.cum_regret),
               format_sig(include_timing ? r.step_seconds : 0.0), format_sig(r.ucb_at_chosen)});
    }
    if (log.error) w.comment("error: " + *log.error);
    w.close();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace kcs
