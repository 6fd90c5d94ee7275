#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dcopt/qubo.hpp"

namespace dcopt::detail {

// Local-search views of a QUBO. Both expose delta(v)/flip(v) over a dense
// state, the current energy, and the variables coupled to v.

// Every QUBO variable, slack bits included.
class QuboChain {
 public:
  explicit QuboChain(const QuboModel& q) : q_(q), x_(static_cast<std::size_t>(q.num_variables())), field_(x_.size()) {}

  std::size_t size() const { return x_.size(); }
  const std::vector<std::uint8_t>& state() const { return x_; }
  double energy() const { return energy_; }

  void set_state(std::vector<std::uint8_t> x) {
    x_ = std::move(x);
    for (std::size_t v = 0; v < x_.size(); ++v) {
      double h = q_.linear()[v];
      for (const Neighbor& nb : q_.neighbors(static_cast<int>(v))) {
        if (x_[static_cast<std::size_t>(nb.var)]) h += nb.coeff;
      }
      field_[v] = h;
    }
    energy_ = q_.energy(x_);
  }

  double delta(std::size_t v) const { return x_[v] ? -field_[v] : field_[v]; }

  void flip(std::size_t v, double delta) {
    x_[v] ^= 1;
    energy_ += delta;
    const double sign = x_[v] ? 1.0 : -1.0;
    for (const Neighbor& nb : q_.neighbors(static_cast<int>(v))) field_[static_cast<std::size_t>(nb.var)] += sign * nb.coeff;
  }

  template <typename F>
  void for_each_neighbor(std::size_t v, F&& f) const {
    for (const Neighbor& nb : q_.neighbors(static_cast<int>(v))) f(static_cast<std::size_t>(nb.var));
  }

  bool feasible() const {
    if (!q_.source()) return true;
    return is_feasible(*q_.source(), std::span<const std::uint8_t>(x_).first(static_cast<std::size_t>(q_.num_source_variables())));
  }

  std::vector<std::uint8_t> full_state() const { return x_; }

 private:
  const QuboModel& q_;
  std::vector<std::uint8_t> x_;
  std::vector<double> field_;
  double energy_ = 0.0;
};

// Source variables only, with each slack block held at its minimising value:
// a <=-constraint costs lagrange * max(0, lhs - rhs)^2, an equality
// lagrange * (lhs - rhs)^2. This equals the QUBO energy at
// complete_slacks_dense of the state. Needs q.source().
class SourceChain {
 public:
  explicit SourceChain(const QuboModel& q)
      : q_(q), model_(*q.source()), lagrange_(q.lagrange()),
        x_(static_cast<std::size_t>(model_.num_variables())), occurs_(x_.size()),
        lhs_(model_.constraints().size()) {
    const auto constraints = model_.constraints();
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      for (const Term& t : constraints[c].terms) occurs_[static_cast<std::size_t>(t.var)].push_back({static_cast<int>(c), t.coeff});
    }
  }

  std::size_t size() const { return x_.size(); }
  const std::vector<std::uint8_t>& state() const { return x_; }
  double energy() const { return energy_; }

  void set_state(std::vector<std::uint8_t> x) {
    x_ = std::move(x);
    std::fill(lhs_.begin(), lhs_.end(), 0.0);
    for (std::size_t v = 0; v < x_.size(); ++v) {
      if (!x_[v]) continue;
      for (const Term& t : occurs_[v]) lhs_[static_cast<std::size_t>(t.var)] += t.coeff;
    }
    energy_ = evaluate_objective(model_, x_);
    violated_ = 0;
    for (std::size_t c = 0; c < lhs_.size(); ++c) {
      const double p = penalty(c, lhs_[c]);
      energy_ += p;
      violated_ += p > 0.0;
    }
  }

  double delta(std::size_t v) const {
    const double sign = x_[v] ? -1.0 : 1.0;
    double d = sign * model_.objective()[v];
    for (const Term& t : occurs_[v]) {
      const auto c = static_cast<std::size_t>(t.var);
      d += penalty(c, lhs_[c] + sign * t.coeff) - penalty(c, lhs_[c]);
    }
    return d;
  }

  void flip(std::size_t v, double delta) {
    const double sign = x_[v] ? -1.0 : 1.0;
    x_[v] ^= 1;
    energy_ += delta;
    for (const Term& t : occurs_[v]) {
      const auto c = static_cast<std::size_t>(t.var);
      const bool was = penalty(c, lhs_[c]) > 0.0;
      lhs_[c] += sign * t.coeff;
      violated_ += static_cast<int>(penalty(c, lhs_[c]) > 0.0) - static_cast<int>(was);
    }
  }

  template <typename F>
  void for_each_neighbor(std::size_t v, F&& f) const {
    const int limit = q_.num_source_variables();
    for (const Neighbor& nb : q_.neighbors(static_cast<int>(v))) {
      if (nb.var < limit) f(static_cast<std::size_t>(nb.var));
    }
  }

  bool feasible() const { return violated_ == 0; }

  std::vector<std::uint8_t> full_state() const { return complete_slacks_dense(q_, x_); }

  // Pieces for subproblem search.
  double objective(std::size_t v) const { return model_.objective()[v]; }
  const std::vector<Term>& terms(std::size_t v) const { return occurs_[v]; }  // (constraint, coeff)
  double lhs(std::size_t c) const { return lhs_[c]; }
  std::size_t num_constraints() const { return lhs_.size(); }

  double penalty(std::size_t c, double lhs) const {
    const LinearConstraint& con = model_.constraints()[c];
    double r = lhs - con.rhs;
    if (con.sense == Sense::kLessEqual) r = std::max(r, 0.0);
    // coefficients are integral, so smaller residuals are rounding noise
    return std::abs(r) < 0.5 ? 0.0 : lagrange_ * r * r;
  }

  // Smallest penalty over lhs values in [lo, hi]; penalties are convex.
  double min_penalty(std::size_t c, double lo, double hi) const {
    const double rhs = model_.constraints()[c].rhs;
    if (lo > rhs) return penalty(c, lo);
    if (hi < rhs && model_.constraints()[c].sense == Sense::kEqual) return penalty(c, hi);
    return 0.0;
  }

 private:
  const QuboModel& q_;
  const CqmModel& model_;
  double lagrange_;
  std::vector<std::uint8_t> x_;
  std::vector<std::vector<Term>> occurs_;  // var -> (constraint, coeff)
  std::vector<double> lhs_;
  double energy_ = 0.0;
  int violated_ = 0;
};

}  // namespace dcopt::detail
