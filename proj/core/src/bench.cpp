#include "dcopt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "dcopt/error.hpp"

namespace dcopt {

namespace {

using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool same_number(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string format_mean(double value, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision) << value;
  return os.str();
}

}  // namespace

bool BenchRecord::operator==(const BenchRecord& o) const {
  return depth == o.depth && variant == o.variant && solver == o.solver && same_number(energy, o.energy) &&
         same_number(time_s, o.time_s) && feasible == o.feasible && rep == o.rep && seed == o.seed &&
         timestamp == o.timestamp && stopping == o.stopping && note == o.note;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  for (int d : cfg.depths) {
    if (d < 2 || d > kMaxTreeDepth) throw ConfigError("depth " + std::to_string(d) + " is out of range");
  }
  for (const std::string& s : cfg.solvers) SolverSpec::parse(s);
  if (cfg.reference) {
    SolverSpec::parse(*cfg.reference);
    if (std::find(cfg.solvers.begin(), cfg.solvers.end(), *cfg.reference) == cfg.solvers.end()) {
      throw ConfigError("reference solver '" + *cfg.reference + "' is not among the benchmarked solvers");
    }
  }
  TreeParams probe = cfg.tree;
  probe.depth = 2;
  try {
    probe.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("tree parameters: ") + e.what());
  }
}

std::vector<BenchRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<BenchRecord> records;
  const bool reference_timed = cfg.budget.mode == BudgetMode::kTimeLimited && cfg.reference.has_value();

  for (int depth : cfg.depths) {
    TreeParams params = cfg.tree;
    params.depth = depth;
    const Proxytree tree = build_proxytree(params);

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(rep);

      std::vector<std::string> order = cfg.solvers;
      if (reference_timed) {
        std::stable_partition(order.begin(), order.end(), [&](const std::string& s) { return s == *cfg.reference; });
      }
      std::optional<double> reference_time;

      for (const std::string& name : order) {
        const SolverSpec spec = SolverSpec::parse(name);
        SolveBudget budget = cfg.budget;
        const bool is_reference = reference_timed && name == *cfg.reference && !reference_time;
        if (is_reference) {
          budget = SolveBudget::exhaustive();
        } else if (reference_timed && reference_time) {
          budget = SolveBudget::time_limited(std::max(*reference_time, 1e-3));
        }

        BenchRecord rec;
        rec.depth = depth;
        rec.variant = spec.split ? "split" : "full";
        rec.solver = spec.base_name();
        rec.rep = rep;
        rec.seed = seed;
        rec.stopping = budget.to_string();
        try {
          const SolveReport report = run_solver(tree, spec, budget, cfg.settings, seed);
          rec.time_s = report.wall_seconds;
          rec.feasible = report.found && report.feasible;
          if (rec.feasible || (cfg.report_infeasible_energy && report.found)) rec.energy = report.energy;
        } catch (const Error& e) {
          rec.note = e.what();
        }
        rec.timestamp = utc_timestamp();
        if (is_reference) reference_time = rec.time_s;
        if (!cfg.output_path.empty()) append_record(rec, cfg.output_path);
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

// --- tables -------------------------------------------------------------------------

std::string render_table(const std::vector<BenchRecord>& records, TableLayout layout, TableFormat format) {
  using Key = std::tuple<int, std::string, std::string, int>;
  std::map<Key, int> seen;
  std::vector<std::string> duplicates;
  for (const BenchRecord& r : records) {
    if (++seen[{r.depth, r.variant, r.solver, r.rep}] == 2) {
      duplicates.push_back("depth=" + std::to_string(r.depth) + " variant=" + r.variant + " solver=" + r.solver +
                           " rep=" + std::to_string(r.rep));
    }
  }
  if (!duplicates.empty()) {
    std::string msg = "conflicting duplicate records:";
    for (const auto& d : duplicates) msg += " [" + d + "]";
    throw InvalidParameter(msg);
  }

  // Columns: solvers sorted by name, split before full as in the reference
  // tables, so the layout does not depend on record order.
  std::set<std::pair<std::string, int>> column_keys;
  std::set<int> depths;
  for (const BenchRecord& r : records) {
    column_keys.insert({r.solver, r.variant == "split" ? 0 : 1});
    depths.insert(r.depth);
  }
  std::vector<std::pair<std::string, std::string>> columns;
  for (const auto& [solver, v] : column_keys) columns.emplace_back(solver, v == 0 ? "split" : "full");

  auto header_of = [](const std::pair<std::string, std::string>& c) {
    return std::string(c.second == "split" ? "Split Model" : "Full Model") + " (" + c.first + ")";
  };
  auto cell = [&](int depth, const std::pair<std::string, std::string>& c) {
    std::vector<double> values;
    for (const BenchRecord& r : records) {
      if (r.depth != depth || r.solver != c.first || r.variant != c.second) continue;
      if (layout == TableLayout::kTime) {
        values.push_back(r.time_s);
      } else if (r.feasible && !std::isnan(r.energy)) {
        values.push_back(r.energy);
      }
    }
    if (values.empty()) return std::string("NaN");
    std::sort(values.begin(), values.end());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    std::string text = format_mean(mean, layout == TableLayout::kTime ? 6 : 10);
    if (values.size() > 1) text += " (n=" + std::to_string(values.size()) + ")";
    return text;
  };

  std::ostringstream os;
  const char* title = layout == TableLayout::kEnergy ? "ENERGY" : "TIME [s]";
  if (format == TableFormat::kMarkdown) {
    os << "| Tree Depth |";
    for (const auto& c : columns) os << ' ' << header_of(c) << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) os << "---|";
    os << '\n';
    for (int d : depths) {
      os << "| " << d << " |";
      for (const auto& c : columns) os << ' ' << cell(d, c) << " |";
      os << '\n';
    }
    return std::string(title) + "\n\n" + os.str();
  }
  os << "tree_depth";
  for (const auto& c : columns) os << ',' << header_of(c);
  os << '\n';
  for (int d : depths) {
    os << d;
    for (const auto& c : columns) os << ',' << cell(d, c);
    os << '\n';
  }
  return os.str();
}

std::string records_to_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  os << "depth,variant,solver,energy,time_s,feasible,rep,seed\n";
  for (const BenchRecord& r : records) {
    os << r.depth << ',' << r.variant << ',' << r.solver << ','
       << (std::isnan(r.energy) ? std::string("NaN") : format_mean(r.energy, 17)) << ','
       << format_mean(r.time_s, 9) << ',' << (r.feasible ? "true" : "false") << ',' << r.rep << ',' << r.seed << '\n';
  }
  return os.str();
}

// --- persistence --------------------------------------------------------------------

std::string record_to_json_line(const BenchRecord& r) {
  json j{{"depth", r.depth},
         {"variant", r.variant},
         {"solver", r.solver},
         {"energy", std::isnan(r.energy) ? json(nullptr) : json(r.energy)},
         {"time_s", r.time_s},
         {"feasible", r.feasible},
         {"rep", r.rep},
         {"seed", r.seed},
         {"timestamp", r.timestamp},
         {"stopping", r.stopping}};
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

BenchRecord record_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    BenchRecord r;
    r.depth = j.at("depth").get<int>();
    r.variant = j.at("variant").get<std::string>();
    if (r.variant != "split" && r.variant != "full") throw ParseError("/variant", "must be split or full");
    r.solver = j.at("solver").get<std::string>();
    r.energy = j.at("energy").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("energy").get<double>();
    r.time_s = j.at("time_s").get<double>();
    r.feasible = j.at("feasible").get<bool>();
    r.rep = j.at("rep").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.timestamp = j.value("timestamp", "");
    r.stopping = j.value("stopping", "");
    r.note = j.value("note", "");
    return r;
  } catch (const json::exception& e) {
    throw ParseError("", e.what());
  }
}

void persist_records(const std::vector<BenchRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  for (const BenchRecord& r : records) out << record_to_json_line(r) << '\n';
  if (!out) throw Error("write to " + path + " failed");
}

void append_record(const BenchRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to " + path);
  out << record_to_json_line(record) << '\n';
  out.flush();
  if (!out) throw Error("write to " + path + " failed");
}

const std::vector<BenchRecord>& LoadedRecords::value() const {
  if (error) throw ParseError("line " + std::to_string(error_line), *error);
  return records;
}

LoadedRecords load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  LoadedRecords out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(record_from_json_line(line));
    } catch (const ParseError& e) {
      out.error = e.what();
      out.error_line = number;
      break;
    }
  }
  return out;
}

}  // namespace dcopt
