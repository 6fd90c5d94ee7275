#include <charconv>
#include <cmath>
#include <string>

#include "clock.hpp"
#include "dcopt/error.hpp"
#include "dcopt/solvers.hpp"
#include "numfmt.hpp"

namespace dcopt {

SolveBudget SolveBudget::time_limited(double seconds) {
  if (!(seconds > 0.0) || !std::isfinite(seconds)) throw InvalidParameter("time limit must be a positive number of seconds");
  return {BudgetMode::kTimeLimited, seconds};
}

SolveBudget SolveBudget::parse(std::string_view text) {
  if (text == "exhaustive") return exhaustive();
  if (text == "first-feasible") return first_feasible();
  if (text.starts_with("time:")) {
    const std::string_view number = text.substr(5);
    double seconds = 0.0;
    const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), seconds);
    if (ec == std::errc{} && ptr == number.data() + number.size()) return time_limited(seconds);
  }
  throw InvalidParameter("unknown stopping rule '" + std::string(text) +
                         "' (expected exhaustive, time:<seconds> or first-feasible)");
}

std::string SolveBudget::to_string() const {
  switch (mode) {
    case BudgetMode::kExhaustive: return "exhaustive";
    case BudgetMode::kFirstFeasible: return "first-feasible";
    case BudgetMode::kTimeLimited: return "time:" + detail::format_number(seconds);
  }
  return "?";
}

Placement greedy_first_fit(const Proxytree& tree) {
  std::vector<double> load(static_cast<std::size_t>(tree.num_servers()), 0.0);
  Placement placement(static_cast<std::size_t>(tree.num_vms()), -1);
  for (int j = 0; j < tree.num_vms(); ++j) {
    const double util = tree.vm_util()[static_cast<std::size_t>(j)];
    for (int s = 0; s < tree.num_servers(); ++s) {
      if (load[static_cast<std::size_t>(s)] + util <= tree.server_capacity() + 1e-9) {
        load[static_cast<std::size_t>(s)] += util;
        placement[static_cast<std::size_t>(j)] = s;
        break;
      }
    }
    if (placement[static_cast<std::size_t>(j)] < 0) {
      throw InvalidParameter("VM " + std::to_string(j) + " does not fit on any server");
    }
  }
  return placement;
}

namespace {

std::string kind_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kExact: return "exact";
    case SolverKind::kAnnealing: return "sa";
    case SolverKind::kDecomposed: return "decomposed";
  }
  return "?";
}

SolveReport run_on_qubo(const QuboModel& q, SolverKind kind, const SolveBudget& budget, const SolverSettings& settings) {
  return kind == SolverKind::kAnnealing ? solve_sa(q, settings.sa, budget)
                                        : solve_decomposed(q, settings.decomp, budget);
}

}  // namespace

SolveReport solve_split(const Proxytree& tree, SolverKind routing_solver, const SolveBudget& budget,
                        const SolverSettings& settings) {
  detail::Stopwatch watch;
  const Placement placement = greedy_first_fit(tree);

  SolveReport report;
  if (routing_solver == SolverKind::kExact) {
    report = solve_exact_routing(tree, placement, budget, settings.exact);
  } else {
    const CqmModel routing = build_routing_cqm(tree, placement);
    const QuboModel q = cqm_to_qubo(routing, settings.penalty);
    report = run_on_qubo(q, routing_solver, budget, settings);
    if (report.found) report.sample = embed_routing(tree, placement, report.sample);
  }
  report.solver = "split-" + kind_name(routing_solver);
  report.wall_seconds = watch.elapsed();
  return report;
}

SolverSpec SolverSpec::parse(std::string_view text) {
  SolverSpec spec;
  std::string_view base = text;
  if (base.starts_with("split-")) {
    spec.split = true;
    base.remove_prefix(6);
  }
  if (base == "exact") {
    spec.kind = SolverKind::kExact;
  } else if (base == "sa") {
    spec.kind = SolverKind::kAnnealing;
  } else if (base == "decomposed") {
    spec.kind = SolverKind::kDecomposed;
  } else {
    throw ConfigError("unknown solver '" + std::string(text) +
                      "' (expected exact, sa or decomposed, optionally prefixed with split-)");
  }
  return spec;
}

std::string SolverSpec::base_name() const { return kind_name(kind); }

std::string SolverSpec::name() const { return (split ? "split-" : "") + base_name(); }

SolveReport run_solver(const Proxytree& tree, const SolverSpec& spec, const SolveBudget& budget,
                       const SolverSettings& settings, std::uint64_t seed) {
  SolverSettings seeded = settings;
  seeded.sa.seed = seed;
  seeded.decomp.seed = seed;

  SolveReport report;
  if (spec.split) {
    report = solve_split(tree, spec.kind, budget, seeded);
  } else if (spec.kind == SolverKind::kExact) {
    report = solve_exact(tree, budget, seeded.exact);
  } else {
    detail::Stopwatch watch;
    const QuboModel q = cqm_to_qubo(build_full_cqm(tree), seeded.penalty);
    report = run_on_qubo(q, spec.kind, budget, seeded);
    report.wall_seconds = watch.elapsed();
  }
  report.solver = spec.name();
  report.seed = seed;
  return report;
}

}  // namespace dcopt
