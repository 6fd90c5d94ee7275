#pragma once

// Reference computations used only by the tests. None of these call the
// solvers or the QUBO conversion; they rebuild the answer from the tree
// structure and the parameter closed forms.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "dcopt/model.hpp"
#include "dcopt/qubo.hpp"
#include "dcopt/topology.hpp"

namespace oracle {

using dcopt::NodeId;
using dcopt::Proxytree;
using dcopt::Sample;

// Closed forms for level power and link capacity.
double idle_power(const dcopt::TreeParams& p, int depth, int level);
double dyn_power(const dcopt::TreeParams& p, int depth, int level);
double link_capacity(const dcopt::TreeParams& p, int depth, int layer);

// Every simple path between two servers, found by plain DFS over the
// adjacency (no up-then-down restriction).
std::vector<std::vector<NodeId>> simple_paths(const Proxytree& tree, NodeId from, NodeId to);

struct Solution {
  std::vector<int> placement;                  // vm -> server
  std::vector<std::vector<NodeId>> routes;     // per flow, empty when co-located
  double energy = 0.0;
};

// Energy of a placement plus routes; false when a server or link capacity
// is broken.
bool evaluate(const Proxytree& tree, const Solution& s, double* energy);

// Walks all capacity-feasible placements times all joint simple-path routings.
// Calls `visit` for every feasible combination; returns the best energy.
template <typename Visit>
double brute_force(const Proxytree& tree, Visit&& visit);
double brute_force(const Proxytree& tree);

// Full-model sample for a solution: ones on used servers, assignments, route
// edges, the switches and links they touch; zeros elsewhere.
Sample to_sample(const Proxytree& tree, const dcopt::CqmModel& full, const Solution& s);

// VM j on server j, each flow routed through its shared leaf switch.
Solution canonical_solution(const Proxytree& tree);

// Slack bit counts from each inequality's range; link activation rows take a
// product penalty and need none.
int expected_slack_bits(const dcopt::CqmModel& model);

// Minimum of a QUBO by Gray-code enumeration over all 2^n assignments.
double qubo_minimum(int n, const std::vector<dcopt::QuboEntry>& entries, double offset);

std::vector<dcopt::QuboEntry> random_qubo(int n, double density, std::mt19937_64& rng);

// ---------------------------------------------------------------------------

template <typename Visit>
double brute_force(const Proxytree& tree, Visit&& visit) {
  const int m = tree.num_servers();
  const int n = tree.num_vms();
  double best = std::numeric_limits<double>::infinity();
  Solution s;
  s.placement.assign(static_cast<std::size_t>(n), 0);
  s.routes.assign(static_cast<std::size_t>(tree.num_flows()), {});

  auto route = [&](auto&& self, int f) -> void {
    if (f == tree.num_flows()) {
      double e = 0.0;
      if (evaluate(tree, s, &e)) {
        s.energy = e;
        visit(static_cast<const Solution&>(s));
        best = std::min(best, e);
      }
      return;
    }
    const auto& flow = tree.flows()[static_cast<std::size_t>(f)];
    const int a = s.placement[static_cast<std::size_t>(flow.src_vm)];
    const int b = s.placement[static_cast<std::size_t>(flow.dst_vm)];
    if (a == b) {
      s.routes[static_cast<std::size_t>(f)].clear();
      self(self, f + 1);
      return;
    }
    for (auto& p : simple_paths(tree, a, b)) {
      s.routes[static_cast<std::size_t>(f)] = std::move(p);
      self(self, f + 1);
    }
  };

  std::vector<double> load(static_cast<std::size_t>(m), 0.0);
  auto place = [&](auto&& self, int j) -> void {
    if (j == n) {
      route(route, 0);
      return;
    }
    const double u = tree.vm_util()[static_cast<std::size_t>(j)];
    for (int i = 0; i < m; ++i) {
      if (load[static_cast<std::size_t>(i)] + u > tree.server_capacity() + 1e-9) continue;
      load[static_cast<std::size_t>(i)] += u;
      s.placement[static_cast<std::size_t>(j)] = i;
      self(self, j + 1);
      load[static_cast<std::size_t>(i)] -= u;
    }
  };
  place(place, 0);
  return best;
}

}  // namespace oracle
