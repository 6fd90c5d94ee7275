#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcopt/model.hpp"
#include "dcopt/qubo.hpp"
#include "dcopt/topology.hpp"

namespace dcopt {

enum class BudgetMode : std::uint8_t { kExhaustive, kTimeLimited, kFirstFeasible };

// Stopping rule. On expiry every solver returns its best sample so far.
struct SolveBudget {
  BudgetMode mode = BudgetMode::kExhaustive;
  double seconds = 0.0;  // time_limited only, > 0

  static SolveBudget exhaustive() { return {}; }
  static SolveBudget time_limited(double seconds);
  static SolveBudget first_feasible() { return {BudgetMode::kFirstFeasible, 0.0}; }

  // "exhaustive", "time:<seconds>" or "first-feasible".
  static SolveBudget parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const SolveBudget&) const = default;
};

struct SolveReport {
  std::string solver;
  Sample sample;  // over the full model, or the QUBO's source model
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool found = false;  // a sample was produced at all
  bool feasible = false;
  double wall_seconds = 0.0;
  long long iterations = 0;  // search nodes, sweeps or rounds
  std::uint64_t seed = 0;
  bool proof_of_optimality = false;
  double qubo_energy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> trace;  // per-round energies of iterative solvers
};

// --- paths ------------------------------------------------------------------

using Path = std::vector<NodeId>;

// Simple paths from src to dst that climb switch levels and then descend,
// shortest first. Equal endpoints yield a single empty path. Throws
// InvalidParameter for non-server endpoints.
std::vector<Path> enumerate_flow_paths(const Proxytree& tree, NodeId src_server, NodeId dst_server);

// --- exact branch-and-bound ------------------------------------------------------

struct ExactOptions {
  bool symmetry_pruning = true;
  bool bound_pruning = true;
  int max_depth = 4;
};

// Optimum of the full model by search over VM placements and joint flow
// paths. Throws InvalidParameter when depth exceeds options.max_depth.
SolveReport solve_exact(const Proxytree& tree, const SolveBudget& budget, const ExactOptions& options = {});

// Optimal routing for a fixed placement; the report's sample and energy refer
// to the full model.
SolveReport solve_exact_routing(const Proxytree& tree, const Placement& placement, const SolveBudget& budget,
                                const ExactOptions& options = {});

// --- annealing ------------------------------------------------------------------

struct SaParams {
  int sweeps = 1000;
  int restarts = 10;
  // Geometric inverse-temperature schedule. Zero picks both ends from the
  // coefficient magnitudes.
  double beta_hot = 0.0;
  double beta_cold = 0.0;
  std::uint64_t seed = 1;
  // For QUBOs built by cqm_to_qubo the chain flips source variables only and
  // keeps every slack block at its minimising value, so each move is scored
  // by the QUBO energy minimised over slacks. Set to flip slack bits as
  // ordinary variables instead.
  bool anneal_slacks = false;

  void validate() const;
};

SolveReport solve_sa(const QuboModel& q, const SaParams& params, const SolveBudget& budget = {});

// Default schedule ends: initial acceptance ~0.8 for the largest flip delta,
// final acceptance ~0.01 for the smallest coefficient.
std::pair<double, double> default_beta_range(const QuboModel& q);

// --- decomposition ------------------------------------------------------------------

struct DecompParams {
  int subproblem_size = 20;
  int rounds = 50;
  int exact_limit = 25;  // subproblems up to this size are enumerated
  std::uint64_t seed = 1;
  SaParams sub_sampler{200, 2, 0.0, 0.0, 1};
  // Same meaning as SaParams::anneal_slacks.
  bool anneal_slacks = false;
  // Rounds start from one annealing pass of this many sweeps over the whole
  // problem, the way a hybrid workflow seeds its decomposition branch from a
  // classical heuristic; 0 starts from a random state.
  int warm_start_sweeps = 1000;
};

// Energy-impact decomposition: each round ranks variables by |flip delta|,
// grows a subproblem breadth-first through the coupling graph from the top
// ranked variable not used recently, solves it with everything else clamped
// and keeps the result only when it lowers the energy. trace holds the
// starting energy and one entry per round (QUBO energies).
SolveReport solve_decomposed(const QuboModel& q, const DecompParams& params, const SolveBudget& budget = {});

// --- split two-phase method -------------------------------------------------------

// VMs in index order onto the lowest-index server with room. Throws
// InvalidParameter when a VM does not fit anywhere.
Placement greedy_first_fit(const Proxytree& tree);

enum class SolverKind : std::uint8_t { kExact, kAnnealing, kDecomposed };

struct SolverSettings {
  ExactOptions exact;
  SaParams sa;
  DecompParams decomp;
  PenaltyConfig penalty;
};

SolveReport solve_split(const Proxytree& tree, SolverKind routing_solver, const SolveBudget& budget,
                        const SolverSettings& settings = {});

// "exact", "sa", "decomposed", optionally prefixed with "split-".
struct SolverSpec {
  SolverKind kind = SolverKind::kExact;
  bool split = false;

  static SolverSpec parse(std::string_view text);  // throws ConfigError
  std::string name() const;
  std::string base_name() const;

  bool operator==(const SolverSpec&) const = default;
};

// Builds whatever model the spec needs and runs it. `seed` overrides the
// stochastic solvers' seeds.
SolveReport run_solver(const Proxytree& tree, const SolverSpec& spec, const SolveBudget& budget,
                       const SolverSettings& settings, std::uint64_t seed);

}  // namespace dcopt
