#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dcopt/error.hpp"
#include "dcopt/model.hpp"
#include "dcopt/qubo.hpp"
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

TEST(SlackBits, Counts) {
  EXPECT_EQ(slack_bits_for(0), 0);
  EXPECT_EQ(slack_bits_for(1), 1);
  EXPECT_EQ(slack_bits_for(10), 4);
  EXPECT_EQ(slack_weights(10), (std::vector<std::int64_t>{1, 2, 4, 3}));
  EXPECT_EQ(slack_weights(7), (std::vector<std::int64_t>{1, 2, 4}));
  EXPECT_TRUE(slack_weights(0).empty());
  EXPECT_THROW(slack_bits_for(-1), InvalidParameter);
}

TEST(SlackBits, WeightsSumToRangeAndCoverIt) {
  for (std::int64_t r = 0; r <= 200; ++r) {
    const auto w = slack_weights(r);
    ASSERT_EQ(static_cast<int>(w.size()), slack_bits_for(r));
    std::int64_t sum = 0;
    for (auto x : w) sum += x;
    EXPECT_EQ(sum, r);
    // every value 0..r is reachable
    std::vector<bool> reach(static_cast<std::size_t>(r + 1), false);
    reach[0] = true;
    for (auto x : w) {
      for (std::int64_t v = r; v >= x; --v) {
        if (reach[static_cast<std::size_t>(v - x)]) reach[static_cast<std::size_t>(v)] = true;
      }
    }
    for (std::int64_t v = 0; v <= r; ++v) EXPECT_TRUE(reach[static_cast<std::size_t>(v)]) << r << " " << v;
  }
}

TEST(Conversion, DepthTwoSize) {
  const CqmModel m = build_full_cqm(tree_of(2));
  const QuboModel q = cqm_to_qubo(m);
  EXPECT_EQ(q.num_source_variables(), 53);
  EXPECT_EQ(q.num_slack_variables(), 56);
  EXPECT_EQ(q.num_variables(), 109);
  EXPECT_EQ(q.num_slack_variables(), oracle::expected_slack_bits(m));
}

TEST(Conversion, SlackCountMatchesRangeCalculator) {
  for (int depth : {2, 3}) {
    const CqmModel m = build_full_cqm(tree_of(depth));
    EXPECT_EQ(cqm_to_qubo(m).num_slack_variables(), oracle::expected_slack_bits(m)) << depth;
  }
  const CqmModel a = build_assignment_cqm(tree_of(2));
  EXPECT_EQ(cqm_to_qubo(a).num_slack_variables(), oracle::expected_slack_bits(a));
}

TEST(Conversion, AutoLagrange) {
  const CqmModel m = build_full_cqm(tree_of(2));
  double positive = 0;
  for (double c : m.objective()) positive += std::max(c, 0.0);
  EXPECT_EQ(auto_lagrange(m), 1.0 + positive);
  EXPECT_EQ(cqm_to_qubo(m).lagrange(), 387.0);
  PenaltyConfig fixed;
  fixed.auto_weight = false;
  fixed.lagrange = 50.0;
  EXPECT_EQ(cqm_to_qubo(m, fixed).lagrange(), 50.0);
  fixed.lagrange = 0.0;
  EXPECT_THROW(cqm_to_qubo(m, fixed), InvalidParameter);
}

TEST(Conversion, UpperTriangularNoZeros) {
  const QuboModel q = cqm_to_qubo(build_full_cqm(tree_of(2)));
  std::set<std::pair<int, int>> seen;
  for (const QuboEntry& e : q.entries()) {
    EXPECT_LE(e.i, e.j);
    EXPECT_NE(e.coeff, 0.0);
    EXPECT_TRUE(seen.insert({e.i, e.j}).second);
  }
}

TEST(Conversion, ZeroConstraintModel) {
  CqmModel m("plain");
  m.add_objective(m.add_variable(VarRef::binary(0)), 3.0);
  m.add_objective(m.add_variable(VarRef::binary(1)), -2.0);
  const QuboModel q = cqm_to_qubo(m);
  EXPECT_EQ(q.num_variables(), 2);
  EXPECT_EQ(q.offset(), 0.0);
  ASSERT_EQ(q.entries().size(), 2u);
  EXPECT_EQ(q.entries()[0], (QuboEntry{0, 0, 3.0}));
  EXPECT_EQ(q.entries()[1], (QuboEntry{1, 1, -2.0}));
}

TEST(Conversion, RejectsFractionalCoefficients) {
  CqmModel m("frac");
  const int a = m.add_variable(VarRef::binary(0));
  const int b = m.add_variable(VarRef::binary(1));
  m.add_constraint("c", ConstraintFamily::kServerCapacity, {{a, 0.5}, {b, 1.0}}, Sense::kLessEqual, 1.0);
  EXPECT_THROW(cqm_to_qubo(m), UnsupportedModel);
}

TEST(Conversion, RejectsUnsatisfiableConstraint) {
  CqmModel m("bad");
  const int a = m.add_variable(VarRef::binary(0));
  m.add_constraint("c", ConstraintFamily::kServerCapacity, {{a, 1.0}}, Sense::kLessEqual, -1.0);
  EXPECT_THROW(cqm_to_qubo(m), InvalidParameter);
}

TEST(Energy, AllZeroIsOffset) {
  const QuboModel q = cqm_to_qubo(build_full_cqm(tree_of(2)));
  const std::vector<std::uint8_t> x(static_cast<std::size_t>(q.num_variables()), 0);
  EXPECT_EQ(q.energy(x), q.offset());
  // four unit assignment residuals
  EXPECT_EQ(q.energy(x), q.lagrange() * 4);
}

TEST(Energy, SingleVariable) {
  const std::vector<QuboEntry> e{{0, 0, 5.0}};
  const QuboModel q = QuboModel::from_entries(1, e);
  EXPECT_EQ(q.energy(std::vector<std::uint8_t>{1}), 5.0);
  EXPECT_EQ(q.energy(std::vector<std::uint8_t>{0}), 0.0);
}

TEST(Energy, FromEntriesFoldsLowerTriangle) {
  const std::vector<QuboEntry> e{{1, 0, 2.0}, {0, 1, 3.0}, {1, 1, 0.0}};
  const QuboModel q = QuboModel::from_entries(2, e, 1.5);
  ASSERT_EQ(q.entries().size(), 1u);
  EXPECT_EQ(q.entries()[0], (QuboEntry{0, 1, 5.0}));
  EXPECT_EQ(q.energy(std::vector<std::uint8_t>{1, 1}), 6.5);
}

TEST(Energy, SampleOverloadNeedsEveryVariable) {
  const CqmModel m = build_full_cqm(tree_of(2));
  const QuboModel q = cqm_to_qubo(m);
  EXPECT_THROW(qubo_energy(q, zeros(m)), MissingVariable);  // slacks missing
  EXPECT_EQ(qubo_energy(q, complete_slacks(m, q, zeros(m))), 4 * q.lagrange());
}

TEST(Slacks, FeasibleOptimumCostsObjective) {
  for (int depth : {2, 3}) {
    const Proxytree t = tree_of(depth);
    const CqmModel m = build_full_cqm(t);
    const QuboModel q = cqm_to_qubo(m);
    const Sample x = oracle::to_sample(t, m, oracle::canonical_solution(t));
    const Sample full = complete_slacks(m, q, x);
    EXPECT_EQ(qubo_energy(q, full), depth == 2 ? 130.0 : 376.0);
    EXPECT_EQ(decode_source(q, m.to_dense(x)), x);
  }
}

TEST(Slacks, OverloadPenaltyIsFour) {
  // lhs 12 against capacity 10: residual 2 whatever the slack
  const Proxytree t = tree_of(2);
  const CqmModel m = build_full_cqm(t);
  const QuboModel q = cqm_to_qubo(m);
  const oracle::Solution sol{{0, 0, 2, 3}, {{}, {2, 6, 3}}, 0.0};
  const Sample x = oracle::to_sample(t, m, sol);
  EXPECT_EQ(qubo_energy(q, complete_slacks(m, q, x)), evaluate_objective(m, x) + q.lagrange() * 4);
}

TEST(Slacks, AllZeroLeavesLinkRowsUnpenalised) {
  const CqmModel m = build_full_cqm(tree_of(2));
  const QuboModel q = cqm_to_qubo(m);
  const Sample full = complete_slacks(m, q, zeros(m));
  for (const SlackBlock& b : q.slack_registry()) {
    if (b.constraint_id.rfind("link_cap", 0) != 0) continue;
    for (std::size_t k = 0; k < b.weights.size(); ++k) {
      EXPECT_EQ(full.get(q.variables()[static_cast<std::size_t>(b.first_var) + k]), 0) << b.constraint_id;
    }
  }
}

TEST(Slacks, DenseAndSampleAgree) {
  const CqmModel m = build_full_cqm(tree_of(2));
  const QuboModel q = cqm_to_qubo(m);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> x(53);
    for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1);
    const auto dense = complete_slacks_dense(q, x);
    EXPECT_EQ(q.energy(dense), qubo_energy(q, complete_slacks(m, q, m.from_dense(x))));
  }
}

TEST(Export, CoordinateFormat) {
  const QuboModel q = cqm_to_qubo(build_full_cqm(tree_of(2)));
  const std::string text = export_qubo(q);
  std::istringstream in(text);
  std::string line;
  int entries = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == 'p') {
      std::istringstream p(line);
      std::string tag, kind;
      int target, n, diag, couplers;
      p >> tag >> kind >> target >> n >> diag >> couplers;
      EXPECT_EQ(kind, "qubo");
      EXPECT_EQ(n, 109);
      EXPECT_EQ(diag + couplers, static_cast<int>(q.entries().size()));
      header = true;
      continue;
    }
    ++entries;
  }
  EXPECT_TRUE(header);
  EXPECT_EQ(entries, static_cast<int>(q.entries().size()));
}
