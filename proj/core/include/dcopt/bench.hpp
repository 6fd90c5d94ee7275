#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcopt/solvers.hpp"
#include "dcopt/topology.hpp"

namespace dcopt {

struct ExperimentConfig {
  std::vector<int> depths;
  std::vector<std::string> solvers;  // solver specs, e.g. "exact", "split-sa"
  // Stopping rule for every run. Under time_limited with a reference solver,
  // the reference runs first without a limit and its wall time becomes the
  // limit of the other solvers at the same depth and repetition.
  SolveBudget budget;
  std::optional<std::string> reference;
  int repetitions = 1;
  std::uint64_t seed_base = 1;
  TreeParams tree;  // depth is overridden per row
  SolverSettings settings;
  std::string output_path;  // JSON-lines record file; empty disables persistence
  bool report_infeasible_energy = false;
};

struct BenchRecord {
  int depth = 0;
  std::string variant;  // "split" or "full"
  std::string solver;   // base solver name
  double energy = std::numeric_limits<double>::quiet_NaN();
  double time_s = 0.0;
  bool feasible = false;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string timestamp;  // ISO 8601, UTC
  std::string stopping;   // budget actually applied
  std::string note;       // solver error, if any

  bool operator==(const BenchRecord& other) const;
};

// Throws ConfigError for an invalid config before any solver runs.
void validate(const ExperimentConfig& cfg);

std::vector<BenchRecord> run_experiment(const ExperimentConfig& cfg);

enum class TableLayout { kEnergy, kTime };
enum class TableFormat { kMarkdown, kCsv };

// Rows are depths ascending, columns are (solver, split/full) pairs. Repeated
// runs are averaged and annotated "(n=k)"; empty cells read "NaN". Throws
// InvalidParameter listing duplicate (depth, variant, solver, rep) keys.
std::string render_table(const std::vector<BenchRecord>& records, TableLayout layout, TableFormat format);

// Flat CSV with columns depth,variant,solver,energy,time_s,feasible,rep,seed.
std::string records_to_csv(const std::vector<BenchRecord>& records);

std::string record_to_json_line(const BenchRecord& record);
BenchRecord record_from_json_line(const std::string& line);  // throws ParseError

void persist_records(const std::vector<BenchRecord>& records, const std::string& path);
void append_record(const BenchRecord& record, const std::string& path);

struct LoadedRecords {
  std::vector<BenchRecord> records;  // every line before the first bad one
  std::optional<std::string> error;
  int error_line = 0;  // 1-based

  // Records, or throws ParseError when a line failed.
  const std::vector<BenchRecord>& value() const;
};

LoadedRecords load_records(const std::string& path);

}  // namespace dcopt
