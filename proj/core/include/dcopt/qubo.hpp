#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcopt/model.hpp"

namespace dcopt {

enum class SlackPolicy : std::uint8_t { kBinaryExpansion };

struct PenaltyConfig {
  double lagrange = 1.0;  // used when auto_weight is false
  SlackPolicy slack_policy = SlackPolicy::kBinaryExpansion;
  // lagrange = 1 + sum of positive objective coefficients of the source model
  bool auto_weight = true;
};

struct QuboEntry {
  int i = 0;
  int j = 0;  // i <= j; i == j is a linear term
  double coeff = 0.0;

  bool operator==(const QuboEntry&) const = default;
};

// Slack bits owned by one inequality; bit b is variable first_var + b.
struct SlackBlock {
  int constraint = 0;
  std::string constraint_id;
  int first_var = 0;
  std::vector<std::int64_t> weights;
};

struct Neighbor {
  int var = 0;
  double coeff = 0.0;
};

// Unconstrained binary quadratic model with an upper-triangular coefficient
// list. Variables are the source model's variables followed by slack bits.
class QuboModel {
 public:
  QuboModel() = default;

  // Free-standing QUBO over x_0..x_{n-1}. Entries with i > j are folded onto
  // (j, i); duplicates are summed and zeros dropped.
  static QuboModel from_entries(int num_variables, std::span<const QuboEntry> entries, double offset = 0.0);

  int num_variables() const noexcept { return static_cast<int>(variables_.size()); }
  int num_source_variables() const noexcept { return num_source_; }
  int num_slack_variables() const noexcept { return num_variables() - num_source_; }
  std::span<const VarRef> variables() const noexcept { return variables_; }
  std::string variable_name(int var) const;
  int index_of(const VarRef& var) const;

  std::span<const QuboEntry> entries() const noexcept { return entries_; }
  double offset() const noexcept { return offset_; }
  double lagrange() const noexcept { return lagrange_; }
  std::span<const SlackBlock> slack_registry() const noexcept { return slack_registry_; }
  const SlackBlock* slack_for(const std::string& constraint_id) const;

  // Constrained model this QUBO was derived from, or null.
  const CqmModel* source() const noexcept { return source_.get(); }

  // Diagonal and symmetric adjacency for local-search solvers.
  std::span<const double> linear() const noexcept { return linear_; }
  std::span<const Neighbor> neighbors(int var) const noexcept {
    return {adjacency_.data() + adjacency_start_[static_cast<std::size_t>(var)],
            adjacency_.data() + adjacency_start_[static_cast<std::size_t>(var) + 1]};
  }

  double energy(std::span<const std::uint8_t> x) const;

 private:
  friend QuboModel cqm_to_qubo(const CqmModel& model, const PenaltyConfig& cfg);

  void finalize(std::vector<QuboEntry> raw);

  std::vector<VarRef> variables_;
  std::vector<std::string> slack_names_;
  int num_source_ = 0;
  std::vector<QuboEntry> entries_;
  double offset_ = 0.0;
  double lagrange_ = 0.0;
  std::vector<SlackBlock> slack_registry_;
  std::shared_ptr<const CqmModel> source_;

  std::vector<double> linear_;
  std::vector<std::size_t> adjacency_start_;
  std::vector<Neighbor> adjacency_;
  std::vector<std::pair<std::string, int>> slack_lookup_;
};

// Number of bits for a slack range and their weights 1, 2, 4, ..., with the
// last weight truncated so the weights sum to `range`.
int slack_bits_for(std::int64_t range);
std::vector<std::int64_t> slack_weights(std::int64_t range);

// Penalty weight chosen by auto_weight.
double auto_lagrange(const CqmModel& model);

// Throws UnsupportedModel for non-integral constraint coefficients and
// InvalidParameter for constraints that no assignment can satisfy.
QuboModel cqm_to_qubo(const CqmModel& model, const PenaltyConfig& cfg = {});

double qubo_energy(const QuboModel& q, const Sample& x);
double qubo_energy(const QuboModel& q, std::span<const std::uint8_t> x);

// Extends a source-model sample with the slack values that minimise each
// squared residual.
Sample complete_slacks(const CqmModel& model, const QuboModel& q, const Sample& x);
std::vector<std::uint8_t> complete_slacks_dense(const QuboModel& q, std::span<const std::uint8_t> source);

// Source-variable prefix of a QUBO assignment as a sample over the source
// model.
Sample decode_source(const QuboModel& q, std::span<const std::uint8_t> x);

// qbsolv-style coordinate text: comment header with the offset and variable
// names, a "p qubo 0 n diag couplers" line, then "i j coeff" lines.
std::string export_qubo(const QuboModel& q);

}  // namespace dcopt
