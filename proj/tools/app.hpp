#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "run_config.hpp"

namespace qprobe::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitPartialFailure = 3,
  kExitInternal = 4,
};

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t ok_rows() const;
};

/// Names of the supported subcommands.
const std::vector<std::string>& subcommands();

/// Computes the output table of `subcommand`. Per-row numerical failures are
/// recorded in the row's status column instead of thrown.
Table run_subcommand(const std::string& subcommand, const RunConfig& config);

/// Keys that do not influence results and are left out of output metadata.
bool is_execution_key(const std::string& key);

std::string format_number(double v);

void write_csv(std::ostream& os, const std::string& subcommand, const ConfigMap& config,
               const Table& table);
void write_json(std::ostream& os, const std::string& subcommand, const ConfigMap& config,
                const Table& table);

/// Full command-line entry point. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qprobe::cli
