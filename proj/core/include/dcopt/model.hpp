#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcopt/topology.hpp"

namespace dcopt {

enum class VarKind : std::uint8_t {
  kServerOn,   // s_i: (server)
  kVmAssign,   // v_ji: (vm, server)
  kSwitchOn,   // sw_k: (switch)
  kFlowEdge,   // rho(f, (n1, n2)): (flow, from, to), directed
  kLinkOn,     // on(n1, n2): (n1, n2) with n1 < n2
  kSlack,      // (constraint index, bit)
  kBinary,     // free-standing QUBO variable: (index)
};

// Identifies one binary variable. Unused index slots stay zero so that the
// defaulted ordering is total and stable.
struct VarRef {
  VarKind kind = VarKind::kBinary;
  int a = 0;
  int b = 0;
  int c = 0;

  static VarRef server_on(int server) { return {VarKind::kServerOn, server, 0, 0}; }
  static VarRef vm_assign(int vm, int server) { return {VarKind::kVmAssign, vm, server, 0}; }
  static VarRef switch_on(NodeId sw) { return {VarKind::kSwitchOn, sw, 0, 0}; }
  static VarRef flow_edge(int flow, NodeId from, NodeId to) { return {VarKind::kFlowEdge, flow, from, to}; }
  static VarRef link_on(NodeId n1, NodeId n2) {
    return n1 < n2 ? VarRef{VarKind::kLinkOn, n1, n2, 0} : VarRef{VarKind::kLinkOn, n2, n1, 0};
  }
  static VarRef slack(int constraint, int bit) { return {VarKind::kSlack, constraint, bit, 0}; }
  static VarRef binary(int index) { return {VarKind::kBinary, index, 0, 0}; }

  // Deterministic name: s_3, v_1_2, sw_5, rho_0_4_6, on_0_5, slack_7_2, x_4.
  std::string name() const;

  auto operator<=>(const VarRef&) const = default;
};

struct VarRefHash {
  std::size_t operator()(const VarRef& v) const noexcept;
};

// Node status variable on(n): server_on for servers, switch_on for switches.
VarRef node_on(const Proxytree& tree, NodeId node);

enum class Sense : std::uint8_t { kLessEqual, kEqual };

enum class ConstraintFamily : std::uint8_t {
  kServerCapacity,
  kAssignment,
  kSourceCap,
  kDestinationCap,
  kFlowBalance,
  kSwitchConservation,
  kLinkCapacity,
  kLinkActivation,
};

const char* family_name(ConstraintFamily family);

struct Term {
  int var = 0;  // index into CqmModel::variables()
  double coeff = 0.0;

  bool operator==(const Term&) const = default;
};

struct LinearConstraint {
  std::string id;
  ConstraintFamily family = ConstraintFamily::kAssignment;
  std::vector<Term> terms;  // ascending by var, no duplicates, no zeros
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// A 0/1 value for each named variable.
class Sample {
 public:
  Sample() = default;

  void set(const VarRef& var, int value) { values_[var] = static_cast<std::uint8_t>(value != 0); }
  // Throws MissingVariable naming the variable.
  int get(const VarRef& var) const;
  std::optional<int> find(const VarRef& var) const;
  bool contains(const VarRef& var) const { return values_.contains(var); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::map<VarRef, std::uint8_t>& values() const noexcept { return values_; }

  bool operator==(const Sample&) const = default;

 private:
  std::map<VarRef, std::uint8_t> values_;
};

// Binary model with a linear objective and linear constraints. Immutable
// after construction by one of the builders below.
class CqmModel {
 public:
  CqmModel() = default;
  explicit CqmModel(std::string provenance) : provenance_(std::move(provenance)) {}

  int add_variable(const VarRef& var);
  int index_of(const VarRef& var) const;  // throws MissingVariable
  std::optional<int> find(const VarRef& var) const;

  void add_objective(int var, double coeff);
  void add_offset(double value) { offset_ += value; }
  // Merges duplicate variables and drops zero coefficients. Throws
  // InvalidParameter for an empty or non-finite constraint.
  void add_constraint(std::string id, ConstraintFamily family, std::vector<Term> terms, Sense sense, double rhs);

  int num_variables() const noexcept { return static_cast<int>(variables_.size()); }
  std::span<const VarRef> variables() const noexcept { return variables_; }
  std::span<const double> objective() const noexcept { return objective_; }
  double offset() const noexcept { return offset_; }
  std::span<const LinearConstraint> constraints() const noexcept { return constraints_; }
  const std::string& provenance() const noexcept { return provenance_; }

  std::size_t count_family(ConstraintFamily family) const;

  // Dense view aligned with variables(); throws MissingVariable.
  std::vector<std::uint8_t> to_dense(const Sample& sample) const;
  Sample from_dense(std::span<const std::uint8_t> values) const;

 private:
  std::vector<VarRef> variables_;
  std::unordered_map<VarRef, int, VarRefHash> index_;
  std::vector<double> objective_;
  double offset_ = 0.0;
  std::vector<LinearConstraint> constraints_;
  std::string provenance_;
};

struct Violation {
  std::string constraint_id;
  double lhs = 0.0;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;

  bool operator==(const Violation&) const = default;
};

// VM index -> server id.
using Placement = std::vector<int>;

CqmModel build_full_cqm(const Proxytree& tree);
CqmModel build_assignment_cqm(const Proxytree& tree);
// Throws InfeasiblePlacement when the placement is incomplete or overloads a
// server.
CqmModel build_routing_cqm(const Proxytree& tree, const Placement& placement);

void validate_placement(const Proxytree& tree, const Placement& placement);

double evaluate_objective(const CqmModel& model, const Sample& sample);
double evaluate_objective(const CqmModel& model, std::span<const std::uint8_t> dense);

std::vector<Violation> check_feasibility(const CqmModel& model, const Sample& sample);
std::vector<Violation> check_feasibility(const CqmModel& model, std::span<const std::uint8_t> dense);
bool is_feasible(const CqmModel& model, std::span<const std::uint8_t> dense);

// Full-model sample for a placement plus a routing-model sample: s_i is on
// exactly for used servers.
Sample embed_routing(const Proxytree& tree, const Placement& placement, const Sample& routing);

// CPLEX LP text: objective, constraints with sense and rhs, binaries.
std::string export_lp(const CqmModel& model);

}  // namespace dcopt
