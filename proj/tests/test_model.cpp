#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "dcopt/error.hpp"
#include "dcopt/model.hpp"
#include "dcopt/solvers.hpp"
#include "oracles.hpp"

using namespace dcopt;

namespace {

Proxytree tree_of(int depth) {
  TreeParams p;
  p.depth = depth;
  return build_proxytree(p);
}

Sample zeros(const CqmModel& m) {
  Sample x;
  for (const VarRef& v : m.variables()) x.set(v, 0);
  return x;
}

}  // namespace

TEST(FullModel, DepthTwoVariableCount) {
  const CqmModel m = build_full_cqm(tree_of(2));
  EXPECT_EQ(m.num_variables(), 53);
  std::map<VarKind, int> kinds;
  for (const VarRef& v : m.variables()) ++kinds[v.kind];
  EXPECT_EQ(kinds[VarKind::kServerOn], 4);
  EXPECT_EQ(kinds[VarKind::kVmAssign], 16);
  EXPECT_EQ(kinds[VarKind::kSwitchOn], 3);
  EXPECT_EQ(kinds[VarKind::kFlowEdge], 24);
  EXPECT_EQ(kinds[VarKind::kLinkOn], 6);
}

TEST(FullModel, DepthTwoConstraintFamilies) {
  const CqmModel m = build_full_cqm(tree_of(2));
  EXPECT_EQ(m.count_family(ConstraintFamily::kServerCapacity), 4u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kAssignment), 4u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kSourceCap), 8u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kDestinationCap), 8u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kFlowBalance), 8u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kSwitchConservation), 6u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kLinkCapacity), 6u);
  EXPECT_EQ(m.count_family(ConstraintFamily::kLinkActivation), 12u);
}

TEST(FullModel, DepthThreeVariableCount) {
  // E = 2 root links + 8 between levels 1 and 2 + 8 server links = 18
  EXPECT_EQ(build_full_cqm(tree_of(3)).num_variables(), 8 + 64 + 7 + 2 * 18 * 4 + 18);
}

TEST(FullModel, LinearOnly) {
  // objective has one coefficient per variable; constraints are sums of terms
  const CqmModel m = build_full_cqm(tree_of(2));
  EXPECT_EQ(m.objective().size(), static_cast<std::size_t>(m.num_variables()));
  for (const auto& c : m.constraints()) {
    EXPECT_FALSE(c.terms.empty()) << c.id;
    for (std::size_t i = 1; i < c.terms.size(); ++i) EXPECT_LT(c.terms[i - 1].var, c.terms[i].var) << c.id;
  }
}

TEST(FullModel, ConstraintIdsUnique) {
  const CqmModel m = build_full_cqm(tree_of(3));
  std::set<std::string> ids;
  for (const auto& c : m.constraints()) EXPECT_TRUE(ids.insert(c.id).second) << c.id;
}

TEST(Objective, AllZeroIsZero) {
  const CqmModel m = build_full_cqm(tree_of(2));
  EXPECT_EQ(evaluate_objective(m, zeros(m)), 0.0);
}

TEST(Objective, OptimalSamples) {
  for (const auto& [depth, expected] : {std::pair{2, 130.0}, std::pair{3, 376.0}}) {
    const Proxytree t = tree_of(depth);
    const CqmModel m = build_full_cqm(t);
    const auto sol = oracle::canonical_solution(t);
    EXPECT_EQ(sol.energy, expected);
    const Sample x = oracle::to_sample(t, m, sol);
    EXPECT_EQ(evaluate_objective(m, x), expected) << "depth " << depth;
    EXPECT_TRUE(check_feasibility(m, x).empty());
  }
}

TEST(Objective, MissingVariableNamed) {
  const CqmModel m = build_full_cqm(tree_of(2));
  Sample x = zeros(m);
  Sample partial;
  for (const auto& [v, val] : x.values()) {
    if (v != VarRef::switch_on(4)) partial.set(v, val);
  }
  try {
    evaluate_objective(m, partial);
    FAIL() << "expected MissingVariable";
  } catch (const MissingVariable& e) {
    EXPECT_NE(std::string(e.what()).find("sw_4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(check_feasibility(m, partial), MissingVariable);
}

TEST(Feasibility, AllZeroBreaksOnlyAssignment) {
  const CqmModel m = build_full_cqm(tree_of(2));
  const auto v = check_feasibility(m, zeros(m));
  ASSERT_EQ(v.size(), 4u);
  for (const Violation& x : v) {
    EXPECT_EQ(x.sense, Sense::kEqual);
    EXPECT_EQ(x.lhs, 0.0);
    EXPECT_EQ(x.rhs, 1.0);
  }
}

TEST(Feasibility, OverloadedServer) {
  const Proxytree t = tree_of(2);
  const CqmModel m = build_full_cqm(t);
  // VMs 0 and 1 share server 0; flow 1 goes through leaf 6
  const oracle::Solution sol{{0, 0, 2, 3}, {{}, {2, 6, 3}}, 0.0};
  const auto v = check_feasibility(m, oracle::to_sample(t, m, sol));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].lhs, 6.0 + 6.0 - 10.0);  // sum u v - C s
  EXPECT_EQ(v[0].rhs, 0.0);
  EXPECT_EQ(v[0].sense, Sense::kLessEqual);
}

TEST(Feasibility, DeterministicOrder) {
  const CqmModel m = build_full_cqm(tree_of(2));
  std::mt19937_64 rng(5);
  Sample x;
  for (const VarRef& v : m.variables()) x.set(v, static_cast<int>(rng() & 1));
  EXPECT_EQ(check_feasibility(m, x), check_feasibility(m, x));
  EXPECT_EQ(check_feasibility(m, x), check_feasibility(m, m.to_dense(x)));
}

TEST(AssignmentModel, Shape) {
  const CqmModel m = build_assignment_cqm(tree_of(2));
  EXPECT_EQ(m.num_variables(), 20);
  EXPECT_EQ(m.constraints().size(), 8u);
}

TEST(AssignmentModel, OptimumByEnumeration) {
  // every VM picks a server, open servers are exactly the used ones
  for (const auto& [depth, expected] : {std::pair{2, 88.0}, std::pair{3, 264.0}}) {
    const Proxytree t = tree_of(depth);
    const CqmModel m = build_assignment_cqm(t);
    if (depth == 2) {
      double best = 1e18;
      for (int code = 0; code < 256; ++code) {
        Sample x = zeros(m);
        for (int j = 0; j < 4; ++j) {
          const int server = (code >> (2 * j)) & 3;
          x.set(VarRef::vm_assign(j, server), 1);
          x.set(VarRef::server_on(server), 1);
        }
        if (check_feasibility(m, x).empty()) best = std::min(best, evaluate_objective(m, x));
      }
      EXPECT_EQ(best, expected);
    }
    Sample x = zeros(m);
    for (int j = 0; j < t.num_vms(); ++j) {
      x.set(VarRef::vm_assign(j, j), 1);
      x.set(VarRef::server_on(j), 1);
    }
    EXPECT_EQ(evaluate_objective(m, x), expected);
  }
}

TEST(RoutingModel, IdentityPlacementOptimum) {
  const Proxytree t = tree_of(2);
  const Placement p{0, 1, 2, 3};
  const CqmModel r = build_routing_cqm(t, p);
  EXPECT_EQ(r.offset(), 88.0);
  for (const VarRef& v : r.variables()) {
    EXPECT_NE(v.kind, VarKind::kVmAssign);
    EXPECT_NE(v.kind, VarKind::kServerOn);
  }
  const SolveReport rep = solve_exact_routing(t, p, SolveBudget::exhaustive());
  EXPECT_EQ(rep.energy, 130.0);
}

TEST(RoutingModel, CrossPlacementNeedsRoot) {
  const Proxytree t = tree_of(2);
  const Placement p{0, 2, 1, 3};
  const SolveReport rep = solve_exact_routing(t, p, SolveBudget::exhaustive());
  EXPECT_GT(rep.energy - 88.0, 42.0);
  // oracle: the only simple path between cousins crosses the root
  oracle::Solution s{{0, 2, 1, 3}, {}, 0.0};
  for (const auto& f : t.flows()) {
    const auto paths = oracle::simple_paths(t, s.placement[static_cast<std::size_t>(f.src_vm)],
                                            s.placement[static_cast<std::size_t>(f.dst_vm)]);
    ASSERT_EQ(paths.size(), 1u);
    s.routes.push_back(paths[0]);
  }
  double e = 0;
  ASSERT_TRUE(oracle::evaluate(t, s, &e));
  EXPECT_EQ(rep.energy, e);
}

TEST(RoutingModel, RejectsBadPlacement) {
  const Proxytree t = tree_of(2);
  EXPECT_THROW(build_routing_cqm(t, {0, 0, 1, 2}), InfeasiblePlacement);
  EXPECT_THROW(build_routing_cqm(t, {0, 1, 2}), InfeasiblePlacement);
  EXPECT_THROW(build_routing_cqm(t, {0, 1, 2, 9}), InfeasiblePlacement);
}

TEST(RoutingModel, CoLocatedFlowHasNoRoute) {
  TreeParams p;
  p.server_capacity = 20;
  const Proxytree t = build_proxytree(p);
  const SolveReport rep = solve_exact_routing(t, {0, 0, 2, 2}, SolveBudget::exhaustive());
  ASSERT_TRUE(rep.feasible);
  for (const auto& [v, val] : rep.sample.values()) {
    if (v.kind == VarKind::kFlowEdge) EXPECT_EQ(val, 0) << v.name();
  }
  EXPECT_EQ(rep.energy, 68.0);
}

TEST(RoutingModel, SubstitutionConsistency) {
  // objective of the embedded sample equals routing objective plus constant
  const Proxytree t = tree_of(2);
  const Placement p{0, 1, 2, 3};
  const CqmModel full = build_full_cqm(t);
  const CqmModel routing = build_routing_cqm(t, p);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Sample r;
    for (const VarRef& v : routing.variables()) r.set(v, static_cast<int>(rng() & 1));
    const Sample embedded = embed_routing(t, p, r);
    // the routing objective carries the server cost as its offset
    EXPECT_DOUBLE_EQ(evaluate_objective(full, embedded), evaluate_objective(routing, r));
  }
}

TEST(Export, LpMentionsEveryConstraint) {
  const CqmModel m = build_full_cqm(tree_of(2));
  const std::string lp = export_lp(m);
  EXPECT_NE(lp.find("Minimize"), std::string::npos);
  EXPECT_NE(lp.find("Binary"), std::string::npos);
  for (const auto& c : m.constraints()) EXPECT_NE(lp.find(c.id), std::string::npos) << c.id;
}

TEST(VarRef, Names) {
  EXPECT_EQ(VarRef::server_on(3).name(), "s_3");
  EXPECT_EQ(VarRef::vm_assign(1, 2).name(), "v_1_2");
  EXPECT_EQ(VarRef::link_on(5, 0).name(), "on_0_5");
  EXPECT_EQ(VarRef::flow_edge(0, 4, 6).name(), "rho_0_4_6");
}
