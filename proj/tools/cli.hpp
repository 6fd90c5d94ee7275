#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcopt/bench.hpp"
#include "dcopt/solvers.hpp"
#include "dcopt/topology.hpp"

namespace dcopt::cli {

inline constexpr const char* kOutDirEnv = "DCOPT_OUT_DIR";

// Bad invocation; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --help was given; what() is the help text. Exit code 0.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Layout { kEnergy, kTime, kRecords };

struct Command {
  std::string verb;  // gen-tree, build-model, export-qubo, solve, bench, render

  int depth = 2;
  bool depth_given = false;
  std::vector<int> depths;  // bench
  std::string tree_path;
  TreeParams tree;
  std::string variant = "full";  // build-model, export-qubo: full, assignment, routing

  std::vector<std::string> solvers{"exact"};
  std::string mode = "exhaustive";
  SolveBudget budget;
  std::string reference;
  std::uint64_t seed = 1;
  std::optional<int> reps;
  SolverSettings settings;
  bool report = false;

  std::string out;
  TableFormat format = TableFormat::kMarkdown;
  Layout layout = Layout::kEnergy;
  std::vector<std::string> inputs;  // render

  bool show_config = false;
  std::string effective_config;  // filled when show_config is set
};

// Throws UsageError or HelpRequested.
Command parse_args(int argc, const char* const* argv);

// Executes a parsed command. Returns the process exit code.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

// parse_args + run with the exit-code mapping: 0 ok, 1 runtime failure,
// 2 usage error.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// $DCOPT_OUT_DIR when set and non-empty, otherwise "dcopt-out".
std::string default_output_dir();

}  // namespace dcopt::cli
