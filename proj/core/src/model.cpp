#include "dcopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dcopt/error.hpp"
#include "numfmt.hpp"

namespace dcopt {

namespace {

constexpr double kFeasibilityTol = 1e-9;

std::string join_ids(std::initializer_list<int> ids) {
  std::string out;
  for (int id : ids) {
    out += '_';
    out += std::to_string(id);
  }
  return out;
}

}  // namespace

std::string VarRef::name() const {
  switch (kind) {
    case VarKind::kServerOn: return "s" + join_ids({a});
    case VarKind::kVmAssign: return "v" + join_ids({a, b});
    case VarKind::kSwitchOn: return "sw" + join_ids({a});
    case VarKind::kFlowEdge: return "rho" + join_ids({a, b, c});
    case VarKind::kLinkOn: return "on" + join_ids({a, b});
    case VarKind::kSlack: return "slack" + join_ids({a, b});
    case VarKind::kBinary: return "x" + join_ids({a});
  }
  return "?";
}

std::size_t VarRefHash::operator()(const VarRef& v) const noexcept {
  std::size_t h = static_cast<std::size_t>(v.kind);
  for (int part : {v.a, v.b, v.c}) h = h * 1000003u ^ static_cast<std::size_t>(static_cast<unsigned>(part));
  return h;
}

VarRef node_on(const Proxytree& tree, NodeId node) {
  return tree.is_server(node) ? VarRef::server_on(node) : VarRef::switch_on(node);
}

const char* family_name(ConstraintFamily family) {
  switch (family) {
    case ConstraintFamily::kServerCapacity: return "server_capacity";
    case ConstraintFamily::kAssignment: return "assignment";
    case ConstraintFamily::kSourceCap: return "source_cap";
    case ConstraintFamily::kDestinationCap: return "destination_cap";
    case ConstraintFamily::kFlowBalance: return "flow_balance";
    case ConstraintFamily::kSwitchConservation: return "switch_conservation";
    case ConstraintFamily::kLinkCapacity: return "link_capacity";
    case ConstraintFamily::kLinkActivation: return "link_activation";
  }
  return "?";
}

// --- Sample -----------------------------------------------------------------

int Sample::get(const VarRef& var) const {
  const auto it = values_.find(var);
  if (it == values_.end()) throw MissingVariable("sample has no value for " + var.name());
  return it->second;
}

std::optional<int> Sample::find(const VarRef& var) const {
  const auto it = values_.find(var);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

// --- CqmModel -----------------------------------------------------------------

int CqmModel::add_variable(const VarRef& var) {
  const auto [it, inserted] = index_.emplace(var, num_variables());
  if (!inserted) throw InvalidParameter("duplicate variable " + var.name());
  variables_.push_back(var);
  objective_.push_back(0.0);
  return it->second;
}

int CqmModel::index_of(const VarRef& var) const {
  const auto it = index_.find(var);
  if (it == index_.end()) throw MissingVariable("model has no variable " + var.name());
  return it->second;
}

std::optional<int> CqmModel::find(const VarRef& var) const {
  const auto it = index_.find(var);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void CqmModel::add_objective(int var, double coeff) {
  objective_.at(static_cast<std::size_t>(var)) += coeff;
}

void CqmModel::add_constraint(std::string id, ConstraintFamily family, std::vector<Term> terms, Sense sense,
                              double rhs) {
  std::sort(terms.begin(), terms.end(), [](const Term& x, const Term& y) { return x.var < y.var; });
  std::vector<Term> merged;
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) throw InvalidParameter("constraint " + id + " names unknown variable");
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
  if (merged.empty()) throw InvalidParameter("constraint " + id + " has no terms");
  if (!std::isfinite(rhs) ||
      std::any_of(merged.begin(), merged.end(), [](const Term& t) { return !std::isfinite(t.coeff); })) {
    throw InvalidParameter("constraint " + id + " has a non-finite coefficient");
  }
  constraints_.push_back({std::move(id), family, std::move(merged), sense, rhs});
}

std::size_t CqmModel::count_family(ConstraintFamily family) const {
  return static_cast<std::size_t>(std::count_if(constraints_.begin(), constraints_.end(),
                                                 [family](const LinearConstraint& c) { return c.family == family; }));
}

std::vector<std::uint8_t> CqmModel::to_dense(const Sample& sample) const {
  std::vector<std::uint8_t> dense(variables_.size());
  for (std::size_t i = 0; i < variables_.size(); ++i) dense[i] = static_cast<std::uint8_t>(sample.get(variables_[i]));
  return dense;
}

Sample CqmModel::from_dense(std::span<const std::uint8_t> values) const {
  if (values.size() != variables_.size()) throw InvalidParameter("dense sample size does not match model");
  Sample sample;
  for (std::size_t i = 0; i < variables_.size(); ++i) sample.set(variables_[i], values[i]);
  return sample;
}

// --- builders -------------------------------------------------------------------

namespace {

// Either a model variable or a fixed 0/1 value.
struct Operand {
  std::optional<int> var;
  double constant = 0.0;
};

// Accumulates a linear expression, folding constants into the right-hand side.
class Expr {
 public:
  Expr& add(const Operand& op, double coeff) {
    if (op.var) {
      terms_.push_back({*op.var, coeff});
    } else {
      constant_ += coeff * op.constant;
    }
    return *this;
  }
  Expr& add(int var, double coeff) {
    terms_.push_back({var, coeff});
    return *this;
  }
  void emit(CqmModel& model, std::string id, ConstraintFamily family, Sense sense, double rhs) {
    model.add_constraint(std::move(id), family, std::move(terms_), sense, rhs - constant_);
  }

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

std::string cid(const char* family, std::initializer_list<int> ids) { return family + join_ids(ids); }

// Switch, routing and link variables plus every network constraint family.
// `vm_on(j, i)` and `server_status(i)` resolve to variables in the full model
// and to constants in the routing model.
template <typename VmOn, typename ServerStatus>
void add_network_part(CqmModel& model, const Proxytree& tree, VmOn vm_on, ServerStatus server_status) {
  const int m = tree.num_servers();

  for (NodeId k = m; k < tree.num_nodes(); ++k) {
    const int var = model.add_variable(VarRef::switch_on(k));
    model.add_objective(var, tree.idle_power(k));
  }

  const auto flows = tree.flows();
  const auto links = tree.links();
  for (const Flow& f : flows) {
    for (const Link& l : links) {
      for (const auto& [from, to] : {std::pair{l.endpoint_lo, l.endpoint_hi}, std::pair{l.endpoint_hi, l.endpoint_lo}}) {
        const int var = model.add_variable(VarRef::flow_edge(f.id, from, to));
        double coeff = 0.0;
        if (tree.is_switch(from)) coeff += tree.dyn_power(from);
        if (tree.is_switch(to)) coeff += tree.dyn_power(to);
        model.add_objective(var, coeff);
      }
    }
  }
  for (const Link& l : links) model.add_variable(VarRef::link_on(l.endpoint_lo, l.endpoint_hi));

  auto rho = [&](int f, NodeId from, NodeId to) { return model.index_of(VarRef::flow_edge(f, from, to)); };
  auto status = [&](NodeId n) -> Operand {
    if (tree.is_server(n)) return server_status(n);
    return {model.index_of(VarRef::switch_on(n)), 0.0};
  };

  for (const Flow& f : flows) {
    for (int i = 0; i < m; ++i) {
      Expr out;
      for (NodeId k : tree.neighbors(i)) out.add(rho(f.id, i, k), 1.0);
      out.add(vm_on(f.src_vm, i), -1.0);
      out.emit(model, cid("src_cap", {f.id, i}), ConstraintFamily::kSourceCap, Sense::kLessEqual, 0.0);
    }
  }
  for (const Flow& f : flows) {
    for (int i = 0; i < m; ++i) {
      Expr in;
      for (NodeId k : tree.neighbors(i)) in.add(rho(f.id, k, i), 1.0);
      in.add(vm_on(f.dst_vm, i), -1.0);
      in.emit(model, cid("dst_cap", {f.id, i}), ConstraintFamily::kDestinationCap, Sense::kLessEqual, 0.0);
    }
  }
  for (const Flow& f : flows) {
    for (int i = 0; i < m; ++i) {
      Expr balance;
      balance.add(vm_on(f.src_vm, i), 1.0).add(vm_on(f.dst_vm, i), -1.0);
      for (NodeId k : tree.neighbors(i)) balance.add(rho(f.id, i, k), -1.0).add(rho(f.id, k, i), 1.0);
      balance.emit(model, cid("balance", {f.id, i}), ConstraintFamily::kFlowBalance, Sense::kEqual, 0.0);
    }
  }
  for (const Flow& f : flows) {
    for (NodeId k = m; k < tree.num_nodes(); ++k) {
      Expr conserve;
      for (NodeId n : tree.neighbors(k)) conserve.add(rho(f.id, n, k), 1.0).add(rho(f.id, k, n), -1.0);
      conserve.emit(model, cid("conserve", {f.id, k}), ConstraintFamily::kSwitchConservation, Sense::kEqual, 0.0);
    }
  }
  for (const Link& l : links) {
    const NodeId n1 = std::min(l.endpoint_lo, l.endpoint_hi);
    const NodeId n2 = std::max(l.endpoint_lo, l.endpoint_hi);
    Expr load;
    for (const Flow& f : flows) load.add(rho(f.id, n1, n2), f.data_rate).add(rho(f.id, n2, n1), f.data_rate);
    load.add(model.index_of(VarRef::link_on(n1, n2)), -l.capacity);
    load.emit(model, cid("link_cap", {n1, n2}), ConstraintFamily::kLinkCapacity, Sense::kLessEqual, 0.0);
  }
  for (const Link& l : links) {
    const NodeId n1 = std::min(l.endpoint_lo, l.endpoint_hi);
    const NodeId n2 = std::max(l.endpoint_lo, l.endpoint_hi);
    const int on = model.index_of(VarRef::link_on(n1, n2));
    for (NodeId end : {n1, n2}) {
      Expr act;
      act.add(on, 1.0).add(status(end), -1.0);
      act.emit(model, cid("link_on", {n1, n2, end}), ConstraintFamily::kLinkActivation, Sense::kLessEqual, 0.0);
    }
  }
}

void add_server_part(CqmModel& model, const Proxytree& tree) {
  const int m = tree.num_servers();
  const int n = tree.num_vms();
  const double idle = tree.level_idle_power()[static_cast<std::size_t>(tree.depth())];
  const double dyn = tree.level_dyn_power()[static_cast<std::size_t>(tree.depth())];
  for (int i = 0; i < m; ++i) model.add_objective(model.add_variable(VarRef::server_on(i)), idle);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      model.add_objective(model.add_variable(VarRef::vm_assign(j, i)), dyn * tree.vm_util()[static_cast<std::size_t>(j)]);
    }
  }
  for (int i = 0; i < m; ++i) {
    Expr cap;
    for (int j = 0; j < n; ++j) cap.add(model.index_of(VarRef::vm_assign(j, i)), tree.vm_util()[static_cast<std::size_t>(j)]);
    cap.add(model.index_of(VarRef::server_on(i)), -tree.server_capacity());
    cap.emit(model, cid("capacity", {i}), ConstraintFamily::kServerCapacity, Sense::kLessEqual, 0.0);
  }
  for (int j = 0; j < n; ++j) {
    Expr assign;
    for (int i = 0; i < m; ++i) assign.add(model.index_of(VarRef::vm_assign(j, i)), 1.0);
    assign.emit(model, cid("assign", {j}), ConstraintFamily::kAssignment, Sense::kEqual, 1.0);
  }
}

std::string provenance(const char* variant, const Proxytree& tree) {
  return std::string(variant) + " depth=" + std::to_string(tree.depth());
}

}  // namespace

CqmModel build_full_cqm(const Proxytree& tree) {
  CqmModel model(provenance("full", tree));
  add_server_part(model, tree);
  add_network_part(
      model, tree,
      [&](int vm, int server) -> Operand { return {model.index_of(VarRef::vm_assign(vm, server)), 0.0}; },
      [&](int server) -> Operand { return {model.index_of(VarRef::server_on(server)), 0.0}; });
  return model;
}

CqmModel build_assignment_cqm(const Proxytree& tree) {
  CqmModel model(provenance("assignment", tree));
  add_server_part(model, tree);
  return model;
}

void validate_placement(const Proxytree& tree, const Placement& placement) {
  if (placement.size() != static_cast<std::size_t>(tree.num_vms())) {
    throw InfeasiblePlacement("placement must assign all " + std::to_string(tree.num_vms()) + " VMs");
  }
  std::vector<double> load(static_cast<std::size_t>(tree.num_servers()), 0.0);
  for (std::size_t j = 0; j < placement.size(); ++j) {
    if (!tree.is_server(placement[j])) {
      throw InfeasiblePlacement("VM " + std::to_string(j) + " placed on non-server " + std::to_string(placement[j]));
    }
    load[static_cast<std::size_t>(placement[j])] += tree.vm_util()[j];
  }
  for (std::size_t i = 0; i < load.size(); ++i) {
    if (load[i] > tree.server_capacity() + kFeasibilityTol) {
      throw InfeasiblePlacement("server " + std::to_string(i) + " load " + detail::format_number(load[i]) +
                                " exceeds capacity " + detail::format_number(tree.server_capacity()));
    }
  }
}

CqmModel build_routing_cqm(const Proxytree& tree, const Placement& placement) {
  validate_placement(tree, placement);
  CqmModel model(provenance("routing", tree));

  const double idle = tree.level_idle_power()[static_cast<std::size_t>(tree.depth())];
  const double dyn = tree.level_dyn_power()[static_cast<std::size_t>(tree.depth())];
  std::vector<bool> used(static_cast<std::size_t>(tree.num_servers()), false);
  for (std::size_t j = 0; j < placement.size(); ++j) {
    used[static_cast<std::size_t>(placement[j])] = true;
    model.add_offset(dyn * tree.vm_util()[j]);
  }
  for (bool u : used) {
    if (u) model.add_offset(idle);
  }

  add_network_part(
      model, tree,
      [&](int vm, int server) -> Operand {
        return {std::nullopt, placement[static_cast<std::size_t>(vm)] == server ? 1.0 : 0.0};
      },
      [&](int server) -> Operand { return {std::nullopt, used[static_cast<std::size_t>(server)] ? 1.0 : 0.0}; });
  return model;
}

// --- evaluation ---------------------------------------------------------------

double evaluate_objective(const CqmModel& model, std::span<const std::uint8_t> dense) {
  if (dense.size() != static_cast<std::size_t>(model.num_variables())) {
    throw InvalidParameter("dense sample size does not match model");
  }
  double energy = model.offset();
  const auto obj = model.objective();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i]) energy += obj[i];
  }
  return energy;
}

double evaluate_objective(const CqmModel& model, const Sample& sample) {
  return evaluate_objective(model, model.to_dense(sample));
}

namespace {

template <typename OnViolation>
void scan_constraints(const CqmModel& model, std::span<const std::uint8_t> dense, OnViolation&& on_violation) {
  if (dense.size() != static_cast<std::size_t>(model.num_variables())) {
    throw InvalidParameter("dense sample size does not match model");
  }
  for (const LinearConstraint& c : model.constraints()) {
    double lhs = 0.0;
    for (const Term& t : c.terms) {
      if (dense[static_cast<std::size_t>(t.var)]) lhs += t.coeff;
    }
    const bool ok = c.sense == Sense::kEqual ? std::abs(lhs - c.rhs) <= kFeasibilityTol : lhs <= c.rhs + kFeasibilityTol;
    if (!ok && !on_violation(c, lhs)) return;
  }
}

}  // namespace

std::vector<Violation> check_feasibility(const CqmModel& model, std::span<const std::uint8_t> dense) {
  std::vector<Violation> out;
  scan_constraints(model, dense, [&](const LinearConstraint& c, double lhs) {
    out.push_back({c.id, lhs, c.sense, c.rhs});
    return true;
  });
  return out;
}

std::vector<Violation> check_feasibility(const CqmModel& model, const Sample& sample) {
  return check_feasibility(model, model.to_dense(sample));
}

bool is_feasible(const CqmModel& model, std::span<const std::uint8_t> dense) {
  bool feasible = true;
  scan_constraints(model, dense, [&](const LinearConstraint&, double) {
    feasible = false;
    return false;
  });
  return feasible;
}

Sample embed_routing(const Proxytree& tree, const Placement& placement, const Sample& routing) {
  validate_placement(tree, placement);
  Sample full = routing;
  for (int i = 0; i < tree.num_servers(); ++i) full.set(VarRef::server_on(i), 0);
  for (int j = 0; j < tree.num_vms(); ++j) {
    for (int i = 0; i < tree.num_servers(); ++i) {
      full.set(VarRef::vm_assign(j, i), placement[static_cast<std::size_t>(j)] == i ? 1 : 0);
    }
    full.set(VarRef::server_on(placement[static_cast<std::size_t>(j)]), 1);
  }
  return full;
}

// --- export -------------------------------------------------------------------

namespace {

void write_terms(std::ostream& os, const std::vector<std::pair<double, std::string>>& terms) {
  int on_line = 0;
  for (const auto& [coeff, name] : terms) {
    if (on_line == 8) {
      os << "\n   ";
      on_line = 0;
    }
    os << (coeff < 0 ? " - " : " + ") << detail::format_number(std::abs(coeff)) << ' ' << name;
    ++on_line;
  }
}

}  // namespace

std::string export_lp(const CqmModel& model) {
  std::ostringstream os;
  os << "\\ dcopt model: " << model.provenance() << '\n';
  os << "\\ variables: " << model.num_variables() << ", constraints: " << model.constraints().size() << '\n';
  os << "\\ objective offset: " << detail::format_number(model.offset()) << '\n';
  os << "Minimize\n obj:";
  std::vector<std::pair<double, std::string>> terms;
  const auto vars = model.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (model.objective()[i] != 0.0) terms.emplace_back(model.objective()[i], vars[i].name());
  }
  if (terms.empty()) terms.emplace_back(0.0, vars.empty() ? "x_0" : vars.front().name());
  write_terms(os, terms);
  os << "\nSubject To\n";
  for (const LinearConstraint& c : model.constraints()) {
    terms.clear();
    for (const Term& t : c.terms) terms.emplace_back(t.coeff, vars[static_cast<std::size_t>(t.var)].name());
    os << ' ' << c.id << ':';
    write_terms(os, terms);
    os << (c.sense == Sense::kEqual ? " = " : " <= ") << detail::format_number(c.rhs) << '\n';
  }
  os << "Binary\n";
  for (std::size_t i = 0; i < vars.size(); ++i) os << ' ' << vars[i].name() << ((i + 1) % 10 == 0 ? "\n" : "");
  os << "\nEnd\n";
  return os.str();
}

}  // namespace dcopt
