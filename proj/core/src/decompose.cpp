#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <type_traits>

#include "chains.hpp"
#include "clock.hpp"
#include "dcopt/error.hpp"
#include "dcopt/solvers.hpp"

namespace dcopt {

namespace {

constexpr double kEps = 1e-9;

// Best reachable change of chain energy over the 2^k assignments of `vars`,
// by Gray-code enumeration. Leaves the chain as it found it; returns the
// bitmask of variables to flip and the gain (<= 0).
template <typename Chain>
std::pair<std::uint32_t, double> enumerate_subproblem(Chain& chain, const std::vector<int>& vars) {
  const int k = static_cast<int>(vars.size());
  double value = 0.0;
  double best_value = 0.0;
  std::uint32_t state = 0;
  std::uint32_t best_state = 0;
  const std::uint64_t total = std::uint64_t{1} << k;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int bit = std::countr_zero(g);
    const auto v = static_cast<std::size_t>(vars[static_cast<std::size_t>(bit)]);
    const double d = chain.delta(v);
    chain.flip(v, d);
    value += d;
    state ^= std::uint32_t{1} << bit;
    if (value < best_value - kEps) {
      best_value = value;
      best_state = state;
    }
  }
  for (int bit = 0; bit < k; ++bit) {
    if (state >> bit & 1U) {
      const auto v = static_cast<std::size_t>(vars[static_cast<std::size_t>(bit)]);
      chain.flip(v, chain.delta(v));
    }
  }
  return {best_state, best_value};
}

// Exact subproblem search on the slack-free chain: depth-first over `vars`
// with a bound from the objective's negative part plus, per constraint, the
// least penalty over the lhs interval still reachable. Only assignments that
// beat the current one count. Leaves the chain untouched.
class SubproblemSearch {
 public:
  SubproblemSearch(const detail::SourceChain& chain, const std::vector<int>& vars) : chain_(chain), vars_(vars) {
    const std::size_t k = vars.size();
    local_terms_.resize(k);
    std::vector<int> local(chain.num_constraints(), -1);
    for (std::size_t s = 0; s < k; ++s) {
      const auto v = static_cast<std::size_t>(vars[s]);
      for (const Term& t : chain.terms(v)) {
        auto& idx = local[static_cast<std::size_t>(t.var)];
        if (idx < 0) {
          idx = static_cast<int>(constraint_.size());
          constraint_.push_back(static_cast<std::size_t>(t.var));
          lo_.push_back(chain.lhs(static_cast<std::size_t>(t.var)));
        }
        local_terms_[s].push_back({idx, t.coeff});
      }
    }
    hi_ = lo_;
    // Strip the subproblem's own contribution, then widen by its range.
    for (std::size_t s = 0; s < k; ++s) {
      const bool on = chain.state()[static_cast<std::size_t>(vars[s])] != 0;
      for (const Term& t : local_terms_[s]) {
        const auto c = static_cast<std::size_t>(t.var);
        if (on) {
          lo_[c] -= t.coeff;
          hi_[c] -= t.coeff;
        }
        lo_[c] += std::min(t.coeff, 0.0);
        hi_[c] += std::max(t.coeff, 0.0);
      }
      free_objective_ += std::min(chain.objective(static_cast<std::size_t>(vars[s])), 0.0);
    }
    for (std::size_t c = 0; c < constraint_.size(); ++c) bound_penalty_ += chain.min_penalty(constraint_[c], lo_[c], hi_[c]);

    double current = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      if (chain.state()[static_cast<std::size_t>(vars[s])]) current += chain.objective(static_cast<std::size_t>(vars[s]));
    }
    for (std::size_t c = 0; c < constraint_.size(); ++c) current += chain.penalty(constraint_[c], chain.lhs(constraint_[c]));
    current_ = current;
    best_ = current - kEps;
    assignment_.assign(k, 0);
  }

  // Returns the flip mask and the gain, or a zero gain when nothing beats
  // the current assignment.
  std::pair<std::vector<std::uint8_t>, double> run() {
    dfs(0, 0.0);
    std::vector<std::uint8_t> flips(vars_.size(), 0);
    if (!found_) return {flips, 0.0};
    for (std::size_t s = 0; s < vars_.size(); ++s) {
      flips[s] = static_cast<std::uint8_t>(best_assignment_[s] != chain_.state()[static_cast<std::size_t>(vars_[s])]);
    }
    return {flips, best_ - current_};
  }

 private:
  // Fixes variable s to y; returns the change of the bound.
  double assign(std::size_t s, int y) {
    const double obj = chain_.objective(static_cast<std::size_t>(vars_[s]));
    double change = (y ? obj : 0.0) - std::min(obj, 0.0);
    for (const Term& t : local_terms_[s]) {
      const auto c = static_cast<std::size_t>(t.var);
      const double before = chain_.min_penalty(constraint_[c], lo_[c], hi_[c]);
      lo_[c] += (y ? t.coeff : 0.0) - std::min(t.coeff, 0.0);
      hi_[c] += (y ? t.coeff : 0.0) - std::max(t.coeff, 0.0);
      change += chain_.min_penalty(constraint_[c], lo_[c], hi_[c]) - before;
    }
    return change;
  }

  void unassign(std::size_t s, int y) {
    for (const Term& t : local_terms_[s]) {
      const auto c = static_cast<std::size_t>(t.var);
      lo_[c] -= (y ? t.coeff : 0.0) - std::min(t.coeff, 0.0);
      hi_[c] -= (y ? t.coeff : 0.0) - std::max(t.coeff, 0.0);
    }
  }

  void dfs(std::size_t s, double bound_shift) {
    const double bound = free_objective_ + bound_penalty_ + bound_shift;
    if (bound >= best_) return;
    if (s == vars_.size()) {
      best_ = bound;  // every variable fixed: the bound is the value
      best_assignment_ = assignment_;
      found_ = true;
      return;
    }
    // Try the value with the smaller bound first.
    double change[2];
    for (int y = 0; y < 2; ++y) {
      change[y] = assign(s, y);
      unassign(s, y);
    }
    const int first = change[1] < change[0] ? 1 : 0;
    for (int y : {first, 1 - first}) {
      assignment_[s] = static_cast<std::uint8_t>(y);
      const double c = assign(s, y);
      dfs(s + 1, bound_shift + c);
      unassign(s, y);
    }
  }

  const detail::SourceChain& chain_;
  const std::vector<int>& vars_;
  std::vector<std::vector<Term>> local_terms_;  // per subproblem var: (local constraint, coeff)
  std::vector<std::size_t> constraint_;          // local -> chain constraint
  std::vector<double> lo_;
  std::vector<double> hi_;
  double free_objective_ = 0.0;
  double bound_penalty_ = 0.0;
  double current_ = 0.0;
  double best_ = 0.0;
  bool found_ = false;
  std::vector<std::uint8_t> assignment_;
  std::vector<std::uint8_t> best_assignment_;
};

// Metropolis over `vars` only, starting from the current state each restart.
// Leaves the chain as it found it; returns which variables to flip and the
// gain of the best state seen.
template <typename Chain>
std::pair<std::vector<std::uint8_t>, double> anneal_subproblem(Chain& chain, const std::vector<int>& vars,
                                                               const SaParams& sp, std::pair<double, double> betas,
                                                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t k = vars.size();
  std::vector<std::uint8_t> flipped(k, 0);
  std::vector<std::uint8_t> best(k, 0);
  double best_value = 0.0;
  for (int restart = 0; restart < sp.restarts; ++restart) {
    double value = 0.0;
    for (int sweep = 0; sweep < sp.sweeps; ++sweep) {
      const double t = sp.sweeps == 1 ? 1.0 : static_cast<double>(sweep) / (sp.sweeps - 1);
      const double beta = betas.first * std::pow(betas.second / betas.first, t);
      for (std::size_t s = 0; s < k; ++s) {
        const auto v = static_cast<std::size_t>(vars[s]);
        const double d = chain.delta(v);
        if (d > 0.0 && uniform(rng) >= std::exp(-beta * d)) continue;
        chain.flip(v, d);
        flipped[s] ^= 1;
        value += d;
      }
      if (value < best_value - kEps) {
        best_value = value;
        best = flipped;
      }
    }
    for (std::size_t s = 0; s < k; ++s) {
      if (!flipped[s]) continue;
      const auto v = static_cast<std::size_t>(vars[s]);
      chain.flip(v, chain.delta(v));
      flipped[s] = 0;
    }
  }
  return {best, best_value};
}

template <typename Chain>
void run_rounds(Chain& chain, const QuboModel& q, const DecompParams& params, const SolveBudget& budget,
                const detail::Deadline& deadline, std::mt19937_64& rng, SolveReport& r) {
  const std::size_t n = chain.size();
  {
    std::vector<std::uint8_t> start(n);
    for (auto& bit : start) bit = static_cast<std::uint8_t>(rng() & 1);
    chain.set_state(std::move(start));
    if (params.warm_start_sweeps > 0) {
      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      SaParams warm;
      warm.sweeps = params.warm_start_sweeps;
      warm.restarts = 1;
      const auto [flips, gain] = anneal_subproblem(chain, all, warm, default_beta_range(q), rng);
      if (gain < 0.0) {
        std::vector<std::uint8_t> x = chain.state();
        for (std::size_t s = 0; s < n; ++s) x[s] ^= flips[s];
        chain.set_state(std::move(x));
      }
    }
  }
  r.trace.push_back(chain.energy());
  if (n == 0) return;

  SaParams sp = params.sub_sampler;
  std::pair<double, double> betas{sp.beta_hot, sp.beta_cold};
  if (betas.first == 0.0 && betas.second == 0.0) betas = default_beta_range(q);

  const std::size_t k = std::min(static_cast<std::size_t>(params.subproblem_size), n);
  std::vector<bool> recently_used(n, false);
  std::size_t used_count = 0;
  std::vector<int> order(n);
  std::vector<int> rank(n);
  std::vector<bool> taken(n, false);
  std::vector<int> selected;
  std::vector<int> queue;
  std::vector<int> next;

  for (int round = 0; round < params.rounds; ++round) {
    // Decomposer: rank by energy impact, then grow breadth-first from the
    // best ranked variable outside the rolling history.
    if (n - used_count < k) {
      std::fill(recently_used.begin(), recently_used.end(), false);
      used_count = 0;
    }
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> impact(n);
    for (std::size_t v = 0; v < n; ++v) impact[v] = std::abs(chain.delta(v));
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return impact[static_cast<std::size_t>(a)] > impact[static_cast<std::size_t>(b)];
    });
    for (std::size_t i = 0; i < n; ++i) rank[static_cast<std::size_t>(order[i])] = static_cast<int>(i);

    selected.clear();
    auto take = [&](int v) {
      taken[static_cast<std::size_t>(v)] = true;
      selected.push_back(v);
      queue.push_back(v);
    };
    for (std::size_t root = 0; root < n && selected.size() < k; ++root) {
      const int v0 = order[root];
      if (recently_used[static_cast<std::size_t>(v0)] || taken[static_cast<std::size_t>(v0)]) continue;
      queue.clear();
      take(v0);
      for (std::size_t head = 0; head < queue.size() && selected.size() < k; ++head) {
        next.clear();
        chain.for_each_neighbor(static_cast<std::size_t>(queue[head]), [&](std::size_t u) {
          if (!taken[u]) next.push_back(static_cast<int>(u));
        });
        std::sort(next.begin(), next.end(), [&](int a, int b) { return rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)]; });
        next.erase(std::unique(next.begin(), next.end()), next.end());
        for (int v : next) {
          if (selected.size() == k) break;
          if (!taken[static_cast<std::size_t>(v)]) take(v);
        }
      }
    }
    for (int v : selected) {
      taken[static_cast<std::size_t>(v)] = false;
      if (!recently_used[static_cast<std::size_t>(v)]) {
        recently_used[static_cast<std::size_t>(v)] = true;
        ++used_count;
      }
    }
    std::sort(selected.begin(), selected.end());

    // SubSampler on the clamped subproblem.
    std::vector<std::uint8_t> proposal(selected.size(), 0);
    double gain = 0.0;
    if (static_cast<int>(selected.size()) <= params.exact_limit) {
      if constexpr (std::is_same_v<Chain, detail::SourceChain>) {
        std::tie(proposal, gain) = SubproblemSearch(chain, selected).run();
      } else {
        const auto [mask, g] = enumerate_subproblem(chain, selected);
        for (std::size_t s = 0; s < selected.size(); ++s) proposal[s] = static_cast<std::uint8_t>(mask >> s & 1U);
        gain = g;
      }
    } else {
      std::tie(proposal, gain) = anneal_subproblem(chain, selected, sp, betas, rng);
    }

    // Composer: overwrite only on a strict improvement.
    if (gain < -kEps) {
      std::vector<std::uint8_t> x = chain.state();
      for (std::size_t s = 0; s < selected.size(); ++s) x[static_cast<std::size_t>(selected[s])] ^= proposal[s];
      chain.set_state(std::move(x));
    } else {
      chain.set_state(chain.state());  // drop rounding drift from the search
    }

    r.trace.push_back(chain.energy());
    ++r.iterations;
    if (budget.mode == BudgetMode::kFirstFeasible && chain.feasible()) break;
    if (deadline.expired()) break;
  }
}

}  // namespace

SolveReport solve_decomposed(const QuboModel& q, const DecompParams& params, const SolveBudget& budget) {
  const int n = q.num_variables();
  if (params.subproblem_size < 1 || params.subproblem_size > std::max(n, 1)) {
    throw InvalidParameter("subproblem size must lie in [1, variable count]");
  }
  if (params.rounds < 1) throw InvalidParameter("rounds must be positive");
  if (params.warm_start_sweeps < 0) throw InvalidParameter("warm_start_sweeps must not be negative");
  if (params.exact_limit < 0 || params.exact_limit > 30) throw InvalidParameter("exact_limit must lie in [0, 30]");
  params.sub_sampler.validate();
  detail::Deadline deadline(budget);
  std::mt19937_64 rng(params.seed);

  SolveReport r;
  r.solver = "decomposed";
  r.seed = params.seed;

  std::vector<std::uint8_t> x;
  if (q.source() && !params.anneal_slacks) {
    detail::SourceChain chain(q);
    run_rounds(chain, q, params, budget, deadline, rng, r);
    x = chain.full_state();
  } else {
    detail::QuboChain chain(q);
    run_rounds(chain, q, params, budget, deadline, rng, r);
    x = chain.full_state();
  }

  r.found = true;
  r.qubo_energy = q.energy(x);
  if (q.source()) {
    const auto src = std::span<const std::uint8_t>(x).first(static_cast<std::size_t>(q.num_source_variables()));
    r.sample = q.source()->from_dense(src);
    r.energy = evaluate_objective(*q.source(), src);
    r.feasible = is_feasible(*q.source(), src);
  } else {
    r.sample = decode_source(q, x);
    r.energy = r.qubo_energy;
    r.feasible = true;
  }
  r.wall_seconds = deadline.elapsed();
  return r;
}

}  // namespace dcopt
