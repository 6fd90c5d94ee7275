#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dcopt/error.hpp"
#include "dcopt/model.hpp"
#include "dcopt/qubo.hpp"

namespace dcopt::cli {

namespace {

namespace fs = std::filesystem;

const char* kVerbs[] = {"gen-tree", "build-model", "export-qubo", "solve", "bench", "render"};

CLI::Validator mode_validator() {
  return CLI::Validator(
      [](std::string& text) -> std::string {
        try {
          SolveBudget::parse(text);
          return {};
        } catch (const Error& e) {
          return e.what();
        }
      },
      "exhaustive|time:<s>|first-feasible", "mode");
}

CLI::Validator solver_validator() {
  return CLI::Validator(
      [](std::string& text) -> std::string {
        try {
          SolverSpec::parse(text);
          return {};
        } catch (const Error& e) {
          return e.what();
        }
      },
      "SOLVER", "solver");
}

struct Binding {
  std::string format = "markdown";
  std::string layout = "energy";
  std::string solver = "exact";
  double lagrange = 0.0;
  bool no_symmetry = false;
  bool no_bound = false;
  int reps_value = 1;
};

void add_tree_params(CLI::App* sub, TreeParams& p) {
  sub->add_option("--server-capacity", p.server_capacity, "Server CPU capacity");
  sub->add_option("--vm-util", p.vm_util, "CPU demand of every VM");
  sub->add_option("--link-capacity", p.link_cap_base, "Link capacity base, scaled by depth");
  sub->add_option("--idle-power", p.idle_base, "Idle power base, scaled by depth");
  sub->add_option("--dyn-power", p.dyn_base, "Dynamic power base, scaled by depth");
  sub->add_option("--data-rate", p.avg_data_rate, "Data rate of every flow");
}

void add_tree_source(CLI::App* sub, Command& cmd) {
  CLI::Option* depth = sub->add_option("--depth", cmd.depth, "Tree depth")->check(CLI::Range(2, kMaxTreeDepth));
  CLI::Option* tree = sub->add_option("--tree", cmd.tree_path, "Tree file written by gen-tree")->check(CLI::ExistingFile);
  depth->excludes(tree);
  add_tree_params(sub, cmd.tree);
}

void add_penalty(CLI::App* sub, Binding& b) {
  sub->add_option("--lagrange", b.lagrange, "Fixed penalty weight (default: automatic)")->check(CLI::PositiveNumber);
}

void add_solver_params(CLI::App* sub, SolverSettings& s, Binding& b) {
  sub->add_option("--sweeps", s.sa.sweeps, "Annealing sweeps per restart")->check(CLI::PositiveNumber);
  sub->add_option("--restarts", s.sa.restarts, "Annealing restarts")->check(CLI::PositiveNumber);
  sub->add_option("--beta-hot", s.sa.beta_hot, "First inverse temperature (0: automatic)");
  sub->add_option("--beta-cold", s.sa.beta_cold, "Last inverse temperature (0: automatic)");
  sub->add_flag("--anneal-slacks", s.sa.anneal_slacks, "Flip slack bits as ordinary variables");
  sub->add_option("--subproblem-size", s.decomp.subproblem_size, "Decomposition subproblem size")
      ->check(CLI::PositiveNumber);
  sub->add_option("--rounds", s.decomp.rounds, "Decomposition rounds")->check(CLI::PositiveNumber);
  sub->add_option("--exact-limit", s.decomp.exact_limit, "Largest subproblem solved exactly")->check(CLI::Range(0, 30));
  sub->add_option("--warm-start-sweeps", s.decomp.warm_start_sweeps, "Annealing sweeps seeding the decomposition")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--max-exact-depth", s.exact.max_depth, "Deepest tree the exact solver accepts")
      ->check(CLI::Range(2, kMaxTreeDepth));
  sub->add_flag("--no-symmetry", b.no_symmetry, "Disable symmetry pruning in the exact solver");
  sub->add_flag("--no-bound", b.no_bound, "Disable bound pruning in the exact solver");
  add_penalty(sub, b);
}

void add_table_format(CLI::App* sub, Binding& b) {
  sub->add_option("--format", b.format, "Table format")->check(CLI::IsMember({"markdown", "csv"}));
  sub->add_option("--layout", b.layout, "Table contents")->check(CLI::IsMember({"energy", "time", "records"}));
}

void add_variant(CLI::App* sub, Command& cmd) {
  sub->add_option("--variant", cmd.variant, "Model: full, assignment (placement only) or routing (greedy placement)")
      ->check(CLI::IsMember({"full", "assignment", "routing"}));
}

std::unique_ptr<CLI::App> build_app(Command& cmd, Binding& b) {
  auto app = std::make_unique<CLI::App>("Data-center energy model: trees, QUBO export, solvers and benchmarks", "dcopt");
  app->option_defaults()->always_capture_default();
  app->set_config("--config", "", "TOML or INI file merged under the command-line flags");
  app->add_flag("--show-config", cmd.show_config, "Print the effective configuration and exit");
  app->require_subcommand(1, 1);
  app->set_help_all_flag("--help-all", "Help for every verb");

  CLI::App* gen = app->add_subcommand("gen-tree", "Generate a tree and write it as JSON");
  gen->add_option("--depth", cmd.depth, "Tree depth")->check(CLI::Range(2, kMaxTreeDepth))->required();
  add_tree_params(gen, cmd.tree);
  gen->add_option("--out", cmd.out, "Output file (default: standard output)");

  CLI::App* model = app->add_subcommand("build-model", "Build a constrained model; print its size, optionally write LP");
  add_tree_source(model, cmd);
  add_variant(model, cmd);
  model->add_option("--out", cmd.out, "Write the model in LP format to this file");

  CLI::App* qubo = app->add_subcommand("export-qubo", "Convert a model to QUBO and write it in coordinate format");
  add_tree_source(qubo, cmd);
  add_variant(qubo, cmd);
  add_penalty(qubo, b);
  qubo->add_option("--out", cmd.out, "Output file (default: standard output)");

  CLI::App* solve = app->add_subcommand("solve", "Solve one instance and print a summary line");
  add_tree_source(solve, cmd);
  solve->add_option("--solver", b.solver, "exact, sa or decomposed, optionally prefixed with split-")
      ->check(solver_validator());
  solve->add_option("--mode", cmd.mode, "Stopping rule")->check(mode_validator());
  solve->add_option("--seed", cmd.seed, "Seed of stochastic solvers");
  add_solver_params(solve, cmd.settings, b);
  solve->add_flag("--report", cmd.report, "Also print the full report as JSON");
  solve->add_option("--out", cmd.out, "Write the full report as JSON to this file");

  CLI::App* bench = app->add_subcommand("bench", "Run a solver comparison and print the table");
  bench->add_option("--depth,--depths", cmd.depths, "Tree depths, comma separated")
      ->delimiter(',')
      ->check(CLI::Range(2, kMaxTreeDepth))
      ->required();
  add_tree_params(bench, cmd.tree);
  bench->add_option("--solver,--solvers", cmd.solvers, "Solvers, comma separated")
      ->delimiter(',')
      ->check(solver_validator());
  bench->add_option("--mode", cmd.mode, "Stopping rule")->check(mode_validator());
  bench->add_option("--reference", cmd.reference,
                    "With --mode time:<s>, run this solver unlimited first and give the others its wall time")
      ->check(solver_validator());
  bench->add_option("--seed", cmd.seed, "Seed base; repetition r uses seed + r");
  bench->add_option("--reps", b.reps_value, "Repetitions (default: 5 with a stochastic solver, else 1)")
      ->check(CLI::PositiveNumber);
  add_solver_params(bench, cmd.settings, b);
  bench->add_option("--out", cmd.out, "Records file (default: $DCOPT_OUT_DIR/bench-records.jsonl)");
  add_table_format(bench, b);

  CLI::App* render = app->add_subcommand("render", "Render a table from record files");
  render->add_option("records", cmd.inputs, "Record files written by bench")->required()->check(CLI::ExistingFile);
  add_table_format(render, b);

  for (CLI::App* sub : {gen, model, qubo, solve, bench, render}) sub->fallthrough();
  return app;
}

std::string synopsis() {
  std::string text = "usage: dcopt <verb> [flags]   (dcopt <verb> --help for details)\nverbs:";
  for (const char* v : kVerbs) text += std::string(" ") + v;
  return text;
}

Proxytree load_tree(const Command& cmd) {
  if (!cmd.tree_path.empty()) {
    std::ifstream in(cmd.tree_path);
    if (!in) throw Error("cannot read " + cmd.tree_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_tree(buf.str());
  }
  TreeParams p = cmd.tree;
  p.depth = cmd.depth;
  return build_proxytree(p);
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(target, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write to " + path + " failed");
}

CqmModel build_variant(const Proxytree& tree, const std::string& variant) {
  if (variant == "assignment") return build_assignment_cqm(tree);
  if (variant == "routing") return build_routing_cqm(tree, greedy_first_fit(tree));
  return build_full_cqm(tree);
}

std::string number(double v) {
  if (std::isnan(v)) return "NaN";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

nlohmann::json report_json(const Proxytree& tree, const SolveReport& r) {
  nlohmann::json active = nlohmann::json::array();
  for (const auto& [var, value] : r.sample.values()) {
    if (value) active.push_back(var.name());
  }
  nlohmann::json j{{"solver", r.solver},
                   {"energy", std::isnan(r.energy) ? nlohmann::json(nullptr) : nlohmann::json(r.energy)},
                   {"found", r.found},
                   {"feasible", r.feasible},
                   {"wall_seconds", r.wall_seconds},
                   {"iterations", r.iterations},
                   {"seed", r.seed},
                   {"proof_of_optimality", r.proof_of_optimality},
                   {"active", active}};
  if (!std::isnan(r.qubo_energy)) j["qubo_energy"] = r.qubo_energy;
  if (!r.trace.empty()) j["trace"] = r.trace;
  if (r.found) {
    try {
      nlohmann::json violations = nlohmann::json::array();
      for (const Violation& v : check_feasibility(build_full_cqm(tree), r.sample)) {
        violations.push_back({{"constraint", v.constraint_id}, {"lhs", v.lhs}, {"rhs", v.rhs}});
      }
      j["violations"] = violations;
    } catch (const MissingVariable&) {
      // sample does not cover the full model
    }
  }
  return j;
}

int run_gen_tree(const Command& cmd, std::ostream& out, std::ostream& err) {
  const std::string text = serialize_tree(load_tree(cmd)) + "\n";
  if (cmd.out.empty()) {
    out << text;
  } else {
    write_file(cmd.out, text);
    err << "wrote " << cmd.out << '\n';
  }
  return 0;
}

int run_build_model(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Proxytree tree = load_tree(cmd);
  const CqmModel model = build_variant(tree, cmd.variant);
  out << "variant " << cmd.variant << '\n'
      << "depth " << tree.depth() << '\n'
      << "variables " << model.num_variables() << '\n'
      << "constraints " << model.constraints().size() << '\n';
  for (int f = 0; f <= static_cast<int>(ConstraintFamily::kLinkActivation); ++f) {
    const auto family = static_cast<ConstraintFamily>(f);
    if (const std::size_t n = model.count_family(family)) out << "family " << family_name(family) << ' ' << n << '\n';
  }
  if (!cmd.out.empty()) {
    write_file(cmd.out, export_lp(model));
    err << "wrote " << cmd.out << '\n';
  }
  return 0;
}

int run_export_qubo(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Proxytree tree = load_tree(cmd);
  const QuboModel q = cqm_to_qubo(build_variant(tree, cmd.variant), cmd.settings.penalty);
  const std::string text = export_qubo(q);
  if (cmd.out.empty()) {
    out << text;
    return 0;
  }
  write_file(cmd.out, text);
  out << "variables " << q.num_variables() << '\n'
      << "source_variables " << q.num_source_variables() << '\n'
      << "slack_variables " << q.num_slack_variables() << '\n'
      << "lagrange " << number(q.lagrange()) << '\n';
  err << "wrote " << cmd.out << '\n';
  return 0;
}

int run_solve(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Proxytree tree = load_tree(cmd);
  const SolverSpec spec = SolverSpec::parse(cmd.solvers.front());
  const SolveReport r = run_solver(tree, spec, cmd.budget, cmd.settings, cmd.seed);
  out << "solver=" << r.solver << " depth=" << tree.depth() << " energy=" << number(r.energy)
      << " feasible=" << (r.feasible ? "true" : "false") << " time_s=" << number(r.wall_seconds) << '\n';
  if (cmd.report || !cmd.out.empty()) {
    const std::string json = report_json(tree, r).dump(2) + "\n";
    if (cmd.report) out << json;
    if (!cmd.out.empty()) {
      write_file(cmd.out, json);
      err << "wrote " << cmd.out << '\n';
    }
  }
  return 0;
}

std::string render(const std::vector<BenchRecord>& records, const Command& cmd) {
  switch (cmd.layout) {
    case Layout::kRecords: return records_to_csv(records);
    case Layout::kTime: return render_table(records, TableLayout::kTime, cmd.format);
    case Layout::kEnergy: break;
  }
  return render_table(records, TableLayout::kEnergy, cmd.format);
}

int run_bench(const Command& cmd, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  cfg.depths = cmd.depths;
  cfg.solvers = cmd.solvers;
  cfg.budget = cmd.budget;
  if (!cmd.reference.empty()) cfg.reference = cmd.reference;
  bool stochastic = false;
  for (const std::string& s : cmd.solvers) stochastic |= SolverSpec::parse(s).kind != SolverKind::kExact;
  cfg.repetitions = cmd.reps.value_or(stochastic ? 5 : 1);
  cfg.seed_base = cmd.seed;
  cfg.tree = cmd.tree;
  cfg.settings = cmd.settings;
  cfg.output_path = cmd.out.empty() ? (fs::path(default_output_dir()) / "bench-records.jsonl").string() : cmd.out;
  validate(cfg);

  write_file(cfg.output_path, "");  // fresh file; records are appended as they finish
  const std::vector<BenchRecord> records = run_experiment(cfg);
  out << render(records, cmd);
  err << "records: " << cfg.output_path << '\n';
  return 0;
}

int run_render(const Command& cmd, std::ostream& out, std::ostream& err) {
  std::vector<BenchRecord> records;
  for (const std::string& path : cmd.inputs) {
    const LoadedRecords loaded = load_records(path);
    if (loaded.error) {
      err << "warning: " << path << ": line " << loaded.error_line << ": " << *loaded.error << "; using the "
          << loaded.records.size() << " complete records before it\n";
    }
    records.insert(records.end(), loaded.records.begin(), loaded.records.end());
  }
  out << render(records, cmd);
  return 0;
}

}  // namespace

std::string default_output_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? std::string(env) : std::string("dcopt-out");
}

Command parse_args(int argc, const char* const* argv) {
  Command cmd;
  Binding b;
  auto app = build_app(cmd, b);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app->get_subcommands();
    throw HelpRequested(subs.empty() ? app->help() : subs.front()->help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app->help("", CLI::AppFormatMode::All));
  } catch (const CLI::RequiredError& e) {
    if (app->get_subcommands().empty()) throw UsageError(std::string(e.what()) + "\n" + synopsis());
    throw UsageError(e.what());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const CLI::App* sub = app->get_subcommands().front();
  const auto given = [sub](const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt && opt->count() > 0;
  };
  cmd.verb = sub->get_name();
  cmd.depth_given = given("--depth");
  cmd.budget = SolveBudget::parse(cmd.mode);
  cmd.format = b.format == "csv" ? TableFormat::kCsv : TableFormat::kMarkdown;
  cmd.layout = b.layout == "time" ? Layout::kTime : b.layout == "records" ? Layout::kRecords : Layout::kEnergy;
  if (cmd.verb == "solve") cmd.solvers = {b.solver};
  if (given("--reps")) cmd.reps = b.reps_value;
  if (given("--lagrange")) {
    cmd.settings.penalty.lagrange = b.lagrange;
    cmd.settings.penalty.auto_weight = false;
  }
  cmd.settings.exact.symmetry_pruning = !b.no_symmetry;
  cmd.settings.exact.bound_pruning = !b.no_bound;

  const bool needs_tree = cmd.verb == "build-model" || cmd.verb == "export-qubo" || cmd.verb == "solve";
  if (needs_tree && !cmd.depth_given && cmd.tree_path.empty()) throw UsageError("--depth or --tree is required");
  if (cmd.verb == "bench" && !cmd.reference.empty() && cmd.budget.mode != BudgetMode::kTimeLimited) {
    throw UsageError("--reference needs --mode time:<s>");
  }
  try {
    TreeParams probe = cmd.tree;
    probe.depth = cmd.depth;
    probe.validate();
    cmd.settings.sa.validate();
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }

  if (cmd.show_config) {
    // keep top-level entries and those of the active verb
    std::istringstream all(app->config_to_str(true, false));
    std::string line;
    for (const std::string prefix = cmd.verb + "."; std::getline(all, line);) {
      const auto eq = line.find('=');
      const auto dot = line.find('.');
      if (dot == std::string::npos || dot > eq || line.starts_with(prefix)) cmd.effective_config += line + "\n";
    }
  }
  return cmd;
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.show_config) {
    out << cmd.effective_config;
    return 0;
  }
  if (cmd.verb == "gen-tree") return run_gen_tree(cmd, out, err);
  if (cmd.verb == "build-model") return run_build_model(cmd, out, err);
  if (cmd.verb == "export-qubo") return run_export_qubo(cmd, out, err);
  if (cmd.verb == "solve") return run_solve(cmd, out, err);
  if (cmd.verb == "bench") return run_bench(cmd, out, err);
  if (cmd.verb == "render") return run_render(cmd, out, err);
  err << "error: unknown verb " << cmd.verb << '\n';
  return 2;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    return run(cmd, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dcopt::cli
