#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>

#include "chains.hpp"
#include "clock.hpp"
#include "dcopt/error.hpp"
#include "dcopt/solvers.hpp"

namespace dcopt {

void SaParams::validate() const {
  if (sweeps <= 0) throw InvalidParameter("sweeps must be positive");
  if (restarts <= 0) throw InvalidParameter("restarts must be positive");
  const bool auto_range = beta_hot == 0.0 && beta_cold == 0.0;
  if (!auto_range && !(beta_hot > 0.0 && beta_hot < beta_cold)) {
    throw InvalidParameter("beta schedule needs 0 < beta_hot < beta_cold");
  }
}

std::pair<double, double> default_beta_range(const QuboModel& q) {
  double max_delta = 0.0;
  double min_coeff = std::numeric_limits<double>::infinity();
  for (int v = 0; v < q.num_variables(); ++v) {
    double reach = std::abs(q.linear()[static_cast<std::size_t>(v)]);
    for (const Neighbor& nb : q.neighbors(v)) reach += std::abs(nb.coeff);
    max_delta = std::max(max_delta, reach);
  }
  for (const QuboEntry& e : q.entries()) min_coeff = std::min(min_coeff, std::abs(e.coeff));
  if (max_delta == 0.0 || !std::isfinite(min_coeff)) return {0.1, 1.0};
  const double hot = std::log(1.0 / 0.8) / max_delta;
  const double cold = std::log(100.0) / min_coeff;
  return {hot, std::max(cold, hot * 10.0)};
}

namespace {

template <typename Chain>
std::vector<std::uint8_t> anneal(Chain& chain, const SaParams& params, const std::vector<double>& betas,
                                 const SolveBudget& budget, const detail::Deadline& deadline, long long& sweeps_done) {
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::uint8_t> best;
  double best_energy = std::numeric_limits<double>::infinity();
  const std::size_t n = chain.size();

  std::vector<std::uint8_t> start(n);
  for (int restart = 0; restart < params.restarts; ++restart) {
    for (auto& bit : start) bit = static_cast<std::uint8_t>(rng() & 1);
    chain.set_state(start);
    for (int sweep = 0; sweep < params.sweeps; ++sweep) {
      const double beta = betas[static_cast<std::size_t>(sweep)];
      for (std::size_t v = 0; v < n; ++v) {
        const double delta = chain.delta(v);
        if (delta > 0.0 && uniform(rng) >= std::exp(-beta * delta)) continue;
        chain.flip(v, delta);
      }
      ++sweeps_done;
      if (chain.energy() < best_energy) {
        best_energy = chain.energy();
        best = chain.state();
      }
      if (budget.mode == BudgetMode::kFirstFeasible && chain.feasible()) return chain.state();
      if (deadline.expired()) return best;
    }
  }
  return best;
}

}  // namespace

SolveReport solve_sa(const QuboModel& q, const SaParams& params, const SolveBudget& budget) {
  params.validate();
  detail::Deadline deadline(budget);

  double beta_hot = params.beta_hot;
  double beta_cold = params.beta_cold;
  if (beta_hot == 0.0 && beta_cold == 0.0) std::tie(beta_hot, beta_cold) = default_beta_range(q);
  std::vector<double> betas(static_cast<std::size_t>(params.sweeps));
  for (int s = 0; s < params.sweeps; ++s) {
    const double t = params.sweeps == 1 ? 1.0 : static_cast<double>(s) / (params.sweeps - 1);
    betas[static_cast<std::size_t>(s)] = beta_hot * std::pow(beta_cold / beta_hot, t);
  }

  long long sweeps_done = 0;
  std::vector<std::uint8_t> best_x;
  if (q.source() && !params.anneal_slacks) {
    detail::SourceChain chain(q);
    chain.set_state(anneal(chain, params, betas, budget, deadline, sweeps_done));
    best_x = chain.full_state();
  } else {
    detail::QuboChain chain(q);
    best_x = anneal(chain, params, betas, budget, deadline, sweeps_done);
  }

  SolveReport r;
  r.solver = "sa";
  r.seed = params.seed;
  r.iterations = sweeps_done;
  r.found = sweeps_done > 0;
  if (r.found) {
    r.qubo_energy = q.energy(best_x);
    if (q.source()) {
      const auto src = std::span<const std::uint8_t>(best_x).first(static_cast<std::size_t>(q.num_source_variables()));
      r.sample = q.source()->from_dense(src);
      r.energy = evaluate_objective(*q.source(), src);
      r.feasible = is_feasible(*q.source(), src);
    } else {
      r.sample = decode_source(q, best_x);
      r.energy = r.qubo_energy;
      r.feasible = true;
    }
  }
  r.wall_seconds = deadline.elapsed();
  return r;
}

}  // namespace dcopt
