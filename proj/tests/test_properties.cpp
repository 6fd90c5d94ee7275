#include <gtest/gtest.h>

#include <random>

#include "dcopt/solvers.hpp"
#include "oracles.hpp"

using namespace dcopt;

namespace {

Proxytree tree_of(int depth) {
  TreeParams p;
  p.depth = depth;
  return build_proxytree(p);
}

// Feasible full-model samples of a tree, collected from the brute-force walk.
std::vector<Sample> feasible_samples(const Proxytree& t, const CqmModel& m) {
  std::vector<Sample> out;
  oracle::brute_force(t, [&](const oracle::Solution& s) { out.push_back(oracle::to_sample(t, m, s)); });
  return out;
}

}  // namespace

TEST(TopologyProperty, CountsForDepthsTwoToEight) {
  for (int d = 2; d <= 8; ++d) {
    const Proxytree t = tree_of(d);
    EXPECT_EQ(t.num_nodes(), (1 << (d + 1)) - 1) << d;
    long long links = 1LL << d;
    for (int i = 0; i <= d - 2; ++i) links += 1LL << (2 * i + 1);
    EXPECT_EQ(t.num_links(), links) << d;
    EXPECT_EQ(expected_link_count(d), links) << d;
    EXPECT_EQ(t.num_flows(), t.num_vms() / 2);
  }
}

TEST(TopologyProperty, PowerFallsTowardServers) {
  for (int d = 2; d <= 8; ++d) {
    const Proxytree t = tree_of(d);
    for (int l = 0; l <= d; ++l) {
      EXPECT_EQ(t.level_idle_power()[static_cast<std::size_t>(l)], oracle::idle_power(t.params(), d, l));
      EXPECT_EQ(t.level_dyn_power()[static_cast<std::size_t>(l)], oracle::dyn_power(t.params(), d, l));
    }
    for (int l = 1; l <= d; ++l) {
      EXPECT_EQ(t.level_idle_power()[static_cast<std::size_t>(l - 1)] - t.level_idle_power()[static_cast<std::size_t>(l)], 5.0);
      EXPECT_EQ(t.level_dyn_power()[static_cast<std::size_t>(l - 1)] - t.level_dyn_power()[static_cast<std::size_t>(l)], 1.0);
    }
  }
}

TEST(TopologyProperty, ShapeOfNeighbourhoods) {
  for (int d = 2; d <= 8; ++d) {
    const Proxytree t = tree_of(d);
    for (NodeId n = 0; n < t.num_nodes(); ++n) {
      const auto adj = adjacent_nodes(t, n);
      for (NodeId m : adj) {
        const auto back = adjacent_nodes(t, m);
        EXPECT_NE(std::find(back.begin(), back.end(), n), back.end());
        EXPECT_EQ(std::abs(t.level(n) - t.level(m)), 1);  // adjacent levels only
      }
      if (t.is_server(n)) {
        ASSERT_EQ(adj.size(), 1u);
        EXPECT_EQ(t.level(adj[0]), d - 1);
      } else if (t.level(n) == d - 1) {
        const auto servers = std::count_if(adj.begin(), adj.end(), [&](NodeId m) { return t.is_server(m); });
        EXPECT_EQ(servers, 2);
      }
    }
    // complete bipartite between consecutive switch levels
    for (int l = 0; l + 2 <= d; ++l) {
      for (NodeId a : t.switches_at_level(l)) {
        for (NodeId b : t.switches_at_level(l + 1)) EXPECT_TRUE(t.link_between(a, b).has_value());
      }
    }
  }
}

TEST(TopologyProperty, SerializationIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  for (int d = 2; d <= 8; ++d) {
    TreeParams p;
    p.depth = d;
    p.server_capacity = 10 * u(rng);
    p.avg_data_rate = u(rng);
    const Proxytree t = build_proxytree(p);
    EXPECT_EQ(parse_tree(serialize_tree(t)), t) << d;
  }
}

TEST(ModelProperty, VariableCountFormula) {
  for (int d = 2; d <= 6; ++d) {
    const Proxytree t = tree_of(d);
    const long long m = t.num_servers(), n = t.num_vms(), k = t.num_switches(), e = t.num_links(), f = t.num_flows();
    EXPECT_EQ(build_full_cqm(t).num_variables(), m + n * m + k + 2 * e * f + e) << d;
  }
}

TEST(ModelProperty, ObjectiveAdditiveOnDisjointSupports) {
  const CqmModel m = build_full_cqm(tree_of(3));
  std::mt19937_64 rng(8);
  const auto n = static_cast<std::size_t>(m.num_variables());
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> a(n, 0), b(n, 0), sum(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rng() % 3;  // 0: neither, 1: a, 2: b
      a[i] = r == 1;
      b[i] = r == 2;
      sum[i] = a[i] | b[i];
    }
    EXPECT_DOUBLE_EQ(evaluate_objective(m, a) + evaluate_objective(m, b), evaluate_objective(m, sum));
  }
}

TEST(QuboProperty, SoundAndDominantOnRandomSamples) {
  const Proxytree t = tree_of(2);
  const CqmModel m = build_full_cqm(t);
  const QuboModel q = cqm_to_qubo(m);
  const auto feasible = feasible_samples(t, m);
  ASSERT_FALSE(feasible.empty());
  std::mt19937_64 rng(21);
  int feasible_seen = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::uint8_t> x;
    if (trial % 2) {
      x.resize(53);
      for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1);
    } else {
      x = m.to_dense(feasible[rng() % feasible.size()]);
      const int flips = static_cast<int>(rng() % 4);  // zero flips keeps it feasible
      for (int k = 0; k < flips; ++k) x[rng() % 53] ^= 1;
    }
    const double obj = evaluate_objective(m, x);
    const double e = q.energy(complete_slacks_dense(q, x));
    if (check_feasibility(m, x).empty()) {
      ++feasible_seen;
      EXPECT_EQ(e, obj);
    } else {
      EXPECT_GE(e, obj + q.lagrange());
    }
  }
  EXPECT_GT(feasible_seen, 300);
}

TEST(QuboProperty, InfeasibleNeighboursNeverPreferred) {
  const Proxytree t = tree_of(2);
  const CqmModel m = build_full_cqm(t);
  const QuboModel q = cqm_to_qubo(m);
  for (const Sample& s : feasible_samples(t, m)) {
    auto x = m.to_dense(s);
    const double base = q.energy(complete_slacks_dense(q, x));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = i; j < x.size(); ++j) {
        x[i] ^= 1;
        if (j != i) x[j] ^= 1;
        if (!is_feasible(m, x)) EXPECT_GT(q.energy(complete_slacks_dense(q, x)), base);
        x[i] ^= 1;
        if (j != i) x[j] ^= 1;
      }
    }
  }
}

TEST(QuboProperty, SmallModelsMatchEnumeration) {
  // The QUBO minimum of a small constrained model equals its constrained
  // optimum found by enumeration.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    CqmModel m("random");
    const int n = 6;
    for (int i = 0; i < n; ++i) m.add_objective(m.add_variable(VarRef::binary(i)), static_cast<double>(rng() % 9) - 2.0);
    std::vector<Term> cap;
    for (int i = 0; i < n; ++i) cap.push_back({i, static_cast<double>(1 + rng() % 4)});
    m.add_constraint("cap", ConstraintFamily::kServerCapacity, cap, Sense::kLessEqual, 6.0);
    m.add_constraint("pick", ConstraintFamily::kAssignment, {{0, 1.0}, {1, 1.0}, {2, 1.0}}, Sense::kEqual, 1.0);
    double best = 1e18;
    for (int code = 0; code < (1 << n); ++code) {
      std::vector<std::uint8_t> x(n);
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (code >> i) & 1;
      if (is_feasible(m, x)) best = std::min(best, evaluate_objective(m, x));
    }
    const QuboModel q = cqm_to_qubo(m);
    const std::vector<QuboEntry> entries(q.entries().begin(), q.entries().end());
    EXPECT_EQ(oracle::qubo_minimum(q.num_variables(), entries, q.offset()), best) << trial;
  }
}

TEST(SolverProperty, ExactMatchesBruteForceUnderRandomPairings) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<int> vms{0, 1, 2, 3};
    std::shuffle(vms.begin(), vms.end(), rng);
    TreeParams p;
    p.server_capacity = std::array<double, 3>{10, 12, 20}[rng() % 3];
    p.avg_data_rate = (rng() & 1) ? 2.0 : 4.0;
    const Proxytree t = build_proxytree(p).with_flows(
        {{0, vms[0], vms[1], p.avg_data_rate}, {1, vms[2], vms[3], p.avg_data_rate}});
    const SolveReport r = solve_exact(t, SolveBudget::exhaustive());
    EXPECT_EQ(r.energy, oracle::brute_force(t)) << trial;
    EXPECT_TRUE(check_feasibility(build_full_cqm(t), r.sample).empty());
    EXPECT_GE(solve_split(t, SolverKind::kExact, SolveBudget::exhaustive()).energy, r.energy);
  }
}

TEST(SolverProperty, FeasibleFlagMatchesCheck) {
  const Proxytree t = tree_of(2);
  const CqmModel full = build_full_cqm(t);
  const QuboModel q = cqm_to_qubo(full);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SaParams p;
    p.seed = seed;
    p.restarts = 1;
    p.sweeps = 30 * static_cast<int>(seed);  // short runs end infeasible now and then
    const SolveReport r = solve_sa(q, p);
    EXPECT_EQ(r.feasible, check_feasibility(full, r.sample).empty()) << seed;
  }
}
