#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/bandit.hpp"

namespace kcs {

/// Decimal with `digits` significant digits; nan and inf print as such.
[[nodiscard]] std::string format_sig(double value, int digits = 9);

/// One file, one writer. The first line is a comment row carrying the config
/// hash and master seed, followed by the column header.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash,
              std::uint64_t master_seed, const std::vector<std::string>& columns,
              std::string_view extra_meta = {});

    void row(const std::vector<std::string>& cells);
    void comment(std::string_view text);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

inline const std::vector<std::string> kRegretColumns = {
    "t", "action_index", "reward", "inst_regret", "cum_regret", "step_seconds", "ucb_at_chosen"};

/// Regret log in the fixed column order. A failed episode gets a trailing
/// `# error:` comment after its completed rounds.
void write_regret_csv(const std::filesystem::path& path, const RegretLog& log,
                      std::uint64_t config_hash, std::uint64_t master_seed,
                      std::uint64_t episode_seed, bool include_timing = true);

/// Rows of a CSV file with comment lines dropped; cells split on commas.
[[nodiscard]] std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace kcs
