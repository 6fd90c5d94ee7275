#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "clock.hpp"
#include "dcopt/error.hpp"
#include "dcopt/solvers.hpp"

namespace dcopt {

namespace {

constexpr double kEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct PathInfo {
  Path nodes;
  std::vector<NodeId> switches;
  std::vector<int> links;
  double dyn_cost = 0.0;
};

// Branch-and-bound over VM placements, then over one up-then-down path per
// flow. Up-then-down paths dominate every other routing the model admits:
// any other support for a flow contains such a path plus extra switches and
// links, and all objective coefficients are non-negative.
//
// Symmetry: consecutive switch levels are completely connected, so switches
// of one level that carry no traffic are interchangeable, as are leaf
// switches whose servers are all empty and the two servers of a leaf while
// both are empty. Only the lowest-indexed representative is branched on.
class ExactSearch {
 public:
  ExactSearch(const Proxytree& tree, const SolveBudget& budget, const ExactOptions& opts)
      : tree_(tree), budget_(budget), opts_(opts), deadline_(budget) {
    depth_ = tree.depth();
    m_ = tree.num_servers();
    n_ = tree.num_vms();
    server_idle_ = tree.level_idle_power()[static_cast<std::size_t>(depth_)];
    server_dyn_ = tree.level_dyn_power()[static_cast<std::size_t>(depth_)];
    leaf_idle_ = tree.level_idle_power()[static_cast<std::size_t>(depth_ - 1)];
    leaf_dyn_ = tree.level_dyn_power()[static_cast<std::size_t>(depth_ - 1)];
    mid_idle_ = tree.level_idle_power()[static_cast<std::size_t>(depth_ - 2)];
    mid_dyn_ = tree.level_dyn_power()[static_cast<std::size_t>(depth_ - 2)];

    u_min_ = *std::min_element(tree.vm_util().begin(), tree.vm_util().end());
    slots_ = std::max(1, static_cast<int>(std::floor(tree.server_capacity() / u_min_ + kEps)));

    vm_flows_.assign(static_cast<std::size_t>(n_), {});
    for (const Flow& f : tree.flows()) {
      vm_flows_[static_cast<std::size_t>(f.src_vm)].push_back(f.id);
      vm_flows_[static_cast<std::size_t>(f.dst_vm)].push_back(f.id);
    }

    placement_.assign(static_cast<std::size_t>(n_), -1);
    load_.assign(static_cast<std::size_t>(m_), 0.0);
    vm_count_.assign(static_cast<std::size_t>(m_), 0);
    switch_use_.assign(static_cast<std::size_t>(tree.num_nodes()), 0);
    link_load_.assign(static_cast<std::size_t>(tree.num_links()), 0.0);
  }

  void solve_all() {
    place(0);
    complete_ = !stop_;
  }

  void solve_routing(const Placement& placement) {
    validate_placement(tree_, placement);
    for (int j = 0; j < n_; ++j) assign(j, placement[static_cast<std::size_t>(j)]);
    route_placement();
    complete_ = !stop_;
  }

  SolveReport report(std::string name) const {
    SolveReport r;
    r.solver = std::move(name);
    r.iterations = nodes_;
    r.wall_seconds = deadline_.elapsed();
    if (!(best_ < kInf)) return r;

    const CqmModel full = build_full_cqm(tree_);
    std::vector<std::uint8_t> x(static_cast<std::size_t>(full.num_variables()), 0);
    auto set = [&](const VarRef& v) { x[static_cast<std::size_t>(full.index_of(v))] = 1; };
    for (int j = 0; j < n_; ++j) {
      const int server = best_placement_[static_cast<std::size_t>(j)];
      set(VarRef::vm_assign(j, server));
      set(VarRef::server_on(server));
    }
    for (const Flow& f : tree_.flows()) {
      const Path& path = best_routes_[static_cast<std::size_t>(f.id)];
      for (std::size_t h = 0; h + 1 < path.size(); ++h) {
        set(VarRef::flow_edge(f.id, path[h], path[h + 1]));
        set(VarRef::link_on(path[h], path[h + 1]));
        if (tree_.is_switch(path[h])) set(VarRef::switch_on(path[h]));
      }
    }
    r.sample = full.from_dense(x);
    r.energy = evaluate_objective(full, x);
    r.found = true;
    r.feasible = is_feasible(full, x);
    r.proof_of_optimality = complete_ && budget_.mode == BudgetMode::kExhaustive;
    return r;
  }

 private:
  bool should_stop() {
    if (stop_) return true;
    if ((++nodes_ & 0xff) == 0 && deadline_.expired()) stop_ = true;
    return stop_;
  }

  bool improves(double bound) const { return !opts_.bound_pruning || bound < best_ - kEps; }

  // --- placement ---------------------------------------------------------------

  void assign(int vm, int server) {
    const auto s = static_cast<std::size_t>(server);
    if (vm_count_[s] == 0) placement_cost_ += server_idle_;
    placement_cost_ += server_dyn_ * tree_.vm_util()[static_cast<std::size_t>(vm)];
    ++vm_count_[s];
    load_[s] += tree_.vm_util()[static_cast<std::size_t>(vm)];
    placement_[static_cast<std::size_t>(vm)] = server;
  }

  void unassign(int vm) {
    const auto s = static_cast<std::size_t>(placement_[static_cast<std::size_t>(vm)]);
    --vm_count_[s];
    load_[s] -= tree_.vm_util()[static_cast<std::size_t>(vm)];
    placement_cost_ -= server_dyn_ * tree_.vm_util()[static_cast<std::size_t>(vm)];
    if (vm_count_[s] == 0) placement_cost_ -= server_idle_;
    placement_[static_cast<std::size_t>(vm)] = -1;
  }

  bool fits(int vm, int server) const {
    return load_[static_cast<std::size_t>(server)] + tree_.vm_util()[static_cast<std::size_t>(vm)] <=
           tree_.server_capacity() + kEps;
  }

  int free_slots(int server) const {
    return static_cast<int>(std::floor((tree_.server_capacity() - load_[static_cast<std::size_t>(server)]) / u_min_ + kEps));
  }

  int leaf_index(int server) const { return server / 2; }

  std::vector<int> placement_candidates(int vm) const {
    std::vector<int> out;
    if (!opts_.symmetry_pruning) {
      for (int s = 0; s < m_; ++s) {
        if (fits(vm, s)) out.push_back(s);
      }
    } else {
      bool took_empty_leaf = false;
      for (int leaf = 0; leaf < m_ / 2; ++leaf) {
        const int a = 2 * leaf;
        const int b = a + 1;
        const bool a_open = vm_count_[static_cast<std::size_t>(a)] > 0;
        const bool b_open = vm_count_[static_cast<std::size_t>(b)] > 0;
        if (!a_open && !b_open) {
          if (!took_empty_leaf) out.push_back(a);
          took_empty_leaf = true;
          continue;
        }
        for (int s : {a, b}) {
          if (fits(vm, s)) out.push_back(s);
        }
      }
    }

    // Servers hosting a flow partner first, then the partner's leaf.
    auto affinity = [&](int server) {
      int best = 2;
      for (int f : vm_flows_[static_cast<std::size_t>(vm)]) {
        const Flow& flow = tree_.flows()[static_cast<std::size_t>(f)];
        const int partner = flow.src_vm == vm ? flow.dst_vm : flow.src_vm;
        const int at = placement_[static_cast<std::size_t>(partner)];
        if (at < 0) continue;
        if (at == server) best = std::min(best, 0);
        if (leaf_index(at) == leaf_index(server)) best = std::min(best, 1);
      }
      return best;
    };
    std::stable_sort(out.begin(), out.end(), [&](int x, int y) { return affinity(x) < affinity(y); });
    return out;
  }

  // Lower bound on any completion of the current partial placement.
  double placement_bound(int next_vm) const {
    double bound = placement_cost_;

    int remaining = 0;
    int remaining_in_flows = 0;
    for (int j = next_vm; j < n_; ++j) {
      bound += server_dyn_ * tree_.vm_util()[static_cast<std::size_t>(j)];
      ++remaining;
      if (!vm_flows_[static_cast<std::size_t>(j)].empty()) ++remaining_in_flows;
    }
    int open_slots = 0;
    for (int s = 0; s < m_; ++s) {
      if (vm_count_[static_cast<std::size_t>(s)] > 0) open_slots += free_slots(s);
    }
    const int extra_servers = std::max(0, (remaining - open_slots + slots_ - 1) / slots_);
    bound += extra_servers * server_idle_;

    std::vector<bool> leaf_needed(static_cast<std::size_t>(m_ / 2), false);
    bool crosses = false;
    for (const Flow& f : tree_.flows()) {
      const int a = placement_[static_cast<std::size_t>(f.src_vm)];
      const int b = placement_[static_cast<std::size_t>(f.dst_vm)];
      if (a >= 0 && b >= 0) {
        if (a == b) continue;
        leaf_needed[static_cast<std::size_t>(leaf_index(a))] = true;
        leaf_needed[static_cast<std::size_t>(leaf_index(b))] = true;
        if (leaf_index(a) == leaf_index(b)) {
          bound += 2.0 * leaf_dyn_;
        } else {
          bound += 4.0 * leaf_dyn_ + 2.0 * mid_dyn_;
          crosses = true;
        }
      } else if (a >= 0 || b >= 0) {
        const int at = a >= 0 ? a : b;
        const int partner = a >= 0 ? f.dst_vm : f.src_vm;
        if (!fits(partner, at)) {
          leaf_needed[static_cast<std::size_t>(leaf_index(at))] = true;
          bound += 2.0 * leaf_dyn_;
        }
      } else if (slots_ < 2) {
        bound += 2.0 * leaf_dyn_;
      }
    }
    if (crosses) bound += mid_idle_;

    int leaves = static_cast<int>(std::count(leaf_needed.begin(), leaf_needed.end(), true));
    if (slots_ < 2) {
      // Every VM in a flow forces its leaf on.
      int touched = 0;
      int room = 0;
      for (int leaf = 0; leaf < m_ / 2; ++leaf) {
        bool active = false;
        for (int s : {2 * leaf, 2 * leaf + 1}) {
          for (int j = 0; j < next_vm && !active; ++j) {
            active = placement_[static_cast<std::size_t>(j)] == s && !vm_flows_[static_cast<std::size_t>(j)].empty();
          }
        }
        if (!active) continue;
        ++touched;
        for (int s : {2 * leaf, 2 * leaf + 1}) room += vm_count_[static_cast<std::size_t>(s)] > 0 ? free_slots(s) : slots_;
      }
      const int per_leaf = 2 * slots_;
      const int more = std::max(0, (remaining_in_flows - room + per_leaf - 1) / per_leaf);
      leaves = std::max(leaves, touched + more);
    }
    bound += leaves * leaf_idle_;
    return bound;
  }

  void place(int vm) {
    if (should_stop()) return;
    if (vm == n_) {
      route_placement();
      return;
    }
    if (opts_.bound_pruning && best_ < kInf && !improves(placement_bound(vm))) return;
    for (int server : placement_candidates(vm)) {
      assign(vm, server);
      place(vm + 1);
      unassign(vm);
      if (stop_) return;
    }
  }

  // --- routing -----------------------------------------------------------------

  const std::vector<PathInfo>& paths_between(int a, int b) {
    auto [it, inserted] = path_cache_.try_emplace({a, b});
    if (inserted) {
      for (Path& nodes : enumerate_flow_paths(tree_, a, b)) {
        PathInfo info;
        for (std::size_t h = 0; h < nodes.size(); ++h) {
          if (tree_.is_switch(nodes[h])) {
            info.switches.push_back(nodes[h]);
            info.dyn_cost += 2.0 * tree_.dyn_power(nodes[h]);
          }
          if (h + 1 < nodes.size()) info.links.push_back(*tree_.link_between(nodes[h], nodes[h + 1]));
        }
        info.nodes = std::move(nodes);
        it->second.push_back(std::move(info));
      }
    }
    return it->second;
  }

  void route_placement() {
    route_flows_.clear();
    route_paths_.clear();
    std::vector<int> cross;
    for (const Flow& f : tree_.flows()) {
      const int a = placement_[static_cast<std::size_t>(f.src_vm)];
      const int b = placement_[static_cast<std::size_t>(f.dst_vm)];
      if (a == b) continue;
      (leaf_index(a) == leaf_index(b) ? route_flows_ : cross).push_back(f.id);
    }
    route_flows_.insert(route_flows_.end(), cross.begin(), cross.end());

    const std::size_t count = route_flows_.size();
    suffix_dyn_.assign(count + 1, 0.0);
    suffix_cross_.assign(count + 1, false);
    suffix_leaves_.assign(count + 1, {});
    for (std::size_t i = count; i-- > 0;) {
      const Flow& f = tree_.flows()[static_cast<std::size_t>(route_flows_[i])];
      const int a = placement_[static_cast<std::size_t>(f.src_vm)];
      const int b = placement_[static_cast<std::size_t>(f.dst_vm)];
      const auto& paths = paths_between(a, b);
      route_paths_.insert(route_paths_.begin(), &paths);
      double min_dyn = kInf;
      for (const PathInfo& p : paths) min_dyn = std::min(min_dyn, p.dyn_cost);
      suffix_dyn_[i] = suffix_dyn_[i + 1] + min_dyn;
      suffix_cross_[i] = suffix_cross_[i + 1] || leaf_index(a) != leaf_index(b);
      suffix_leaves_[i] = suffix_leaves_[i + 1];
      for (int s : {a, b}) {
        const NodeId leaf = tree_.leaf_of(s);
        if (std::find(suffix_leaves_[i].begin(), suffix_leaves_[i].end(), leaf) == suffix_leaves_[i].end()) {
          suffix_leaves_[i].push_back(leaf);
        }
      }
    }
    chosen_.assign(count, nullptr);
    routing_cost_ = placement_cost_;
    route(0);
  }

  double routing_bound(std::size_t i) const {
    double bound = routing_cost_ + suffix_dyn_[i];
    for (NodeId leaf : suffix_leaves_[i]) {
      if (switch_use_[static_cast<std::size_t>(leaf)] == 0) bound += leaf_idle_;
    }
    if (suffix_cross_[i]) {
      bool mid_on = false;
      for (NodeId k : tree_.switches_at_level(depth_ - 2)) mid_on = mid_on || switch_use_[static_cast<std::size_t>(k)] > 0;
      if (!mid_on) bound += mid_idle_;
    }
    return bound;
  }

  bool fits_links(const PathInfo& p, double rate) const {
    for (int l : p.links) {
      if (link_load_[static_cast<std::size_t>(l)] + rate > tree_.links()[static_cast<std::size_t>(l)].capacity + kEps) {
        return false;
      }
    }
    return true;
  }

  // New (unused) switches of each non-leaf level must be the lowest-indexed
  // unused ones of that level.
  bool canonical(const PathInfo& p) const {
    if (!opts_.symmetry_pruning) return true;
    for (int level = 0; level <= depth_ - 2; ++level) {
      std::vector<NodeId> fresh;
      for (NodeId k : p.switches) {
        if (tree_.level(k) == level && switch_use_[static_cast<std::size_t>(k)] == 0) fresh.push_back(k);
      }
      if (fresh.empty()) continue;
      std::sort(fresh.begin(), fresh.end());
      std::size_t matched = 0;
      for (NodeId k : tree_.switches_at_level(level)) {
        if (matched == fresh.size()) break;
        if (switch_use_[static_cast<std::size_t>(k)] != 0) continue;
        if (k != fresh[matched]) return false;
        ++matched;
      }
    }
    return true;
  }

  void apply(const PathInfo& p, double rate, int sign) {
    for (NodeId k : p.switches) {
      auto& use = switch_use_[static_cast<std::size_t>(k)];
      if (sign > 0 && use++ == 0) routing_cost_ += tree_.idle_power(k);
      if (sign < 0 && --use == 0) routing_cost_ -= tree_.idle_power(k);
    }
    for (int l : p.links) link_load_[static_cast<std::size_t>(l)] += sign * rate;
    routing_cost_ += sign * p.dyn_cost;
  }

  void route(std::size_t i) {
    if (should_stop()) return;
    if (best_ < kInf && !improves(routing_bound(i))) return;
    if (i == route_flows_.size()) {
      record();
      return;
    }
    const Flow& f = tree_.flows()[static_cast<std::size_t>(route_flows_[i])];
    for (const PathInfo& p : *route_paths_[i]) {
      if (!fits_links(p, f.data_rate) || !canonical(p)) continue;
      apply(p, f.data_rate, +1);
      chosen_[i] = &p;
      route(i + 1);
      apply(p, f.data_rate, -1);
      if (stop_) return;
    }
  }

  void record() {
    if (routing_cost_ >= best_ - kEps) return;
    best_ = routing_cost_;
    best_placement_ = placement_;
    best_routes_.assign(static_cast<std::size_t>(tree_.num_flows()), Path{});
    for (std::size_t i = 0; i < route_flows_.size(); ++i) {
      best_routes_[static_cast<std::size_t>(route_flows_[i])] = chosen_[i]->nodes;
    }
    if (budget_.mode == BudgetMode::kFirstFeasible) stop_ = true;
  }

  const Proxytree& tree_;
  SolveBudget budget_;
  ExactOptions opts_;
  detail::Deadline deadline_;
  bool stop_ = false;
  bool complete_ = false;
  long long nodes_ = 0;

  int depth_ = 0;
  int m_ = 0;
  int n_ = 0;
  double server_idle_ = 0, server_dyn_ = 0, leaf_idle_ = 0, leaf_dyn_ = 0, mid_idle_ = 0, mid_dyn_ = 0;
  double u_min_ = 1.0;
  int slots_ = 1;
  std::vector<std::vector<int>> vm_flows_;

  Placement placement_;
  std::vector<double> load_;
  std::vector<int> vm_count_;
  double placement_cost_ = 0.0;

  std::vector<int> switch_use_;
  std::vector<double> link_load_;
  std::vector<int> route_flows_;
  std::vector<const std::vector<PathInfo>*> route_paths_;
  std::vector<const PathInfo*> chosen_;
  std::vector<double> suffix_dyn_;
  std::vector<bool> suffix_cross_;
  std::vector<std::vector<NodeId>> suffix_leaves_;
  double routing_cost_ = 0.0;
  std::map<std::pair<int, int>, std::vector<PathInfo>> path_cache_;

  double best_ = kInf;
  Placement best_placement_;
  std::vector<Path> best_routes_;
};

}  // namespace

SolveReport solve_exact(const Proxytree& tree, const SolveBudget& budget, const ExactOptions& options) {
  if (tree.depth() > options.max_depth) {
    throw InvalidParameter("exact solver is capped at depth " + std::to_string(options.max_depth) + ", tree has depth " +
                           std::to_string(tree.depth()));
  }
  ExactSearch search(tree, budget, options);
  search.solve_all();
  return search.report("exact");
}

SolveReport solve_exact_routing(const Proxytree& tree, const Placement& placement, const SolveBudget& budget,
                                const ExactOptions& options) {
  ExactSearch search(tree, budget, options);
  search.solve_routing(placement);
  return search.report("exact-routing");
}

}  // namespace dcopt
