#include "dcopt/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dcopt/error.hpp"
#include "numfmt.hpp"

namespace dcopt {

namespace {

constexpr double kIntegralTol = 1e-9;

bool is_integral(double v) { return std::abs(v - std::round(v)) <= kIntegralTol; }

bool is_activation_pair(const LinearConstraint& c) {
  return c.family == ConstraintFamily::kLinkActivation && c.sense == Sense::kLessEqual && c.rhs == 0.0 &&
         c.terms.size() == 2 && c.terms[0].coeff + c.terms[1].coeff == 0.0 && std::abs(c.terms[0].coeff) == 1.0;
}

// Sum of squared-residual expansions keyed by (i, j), i <= j.
class Accumulator {
 public:
  void add(int i, int j, double c) {
    if (c == 0.0) return;
    if (i > j) std::swap(i, j);
    coeffs_[{i, j}] += c;
  }
  void add_offset(double c) { offset_ += c; }

  // lagrange * (sum(coeff * var) - rhs)^2 over binary variables
  void add_squared(std::span<const std::pair<int, double>> terms, double rhs, double lagrange) {
    for (std::size_t a = 0; a < terms.size(); ++a) {
      const auto [va, ca] = terms[a];
      add(va, va, lagrange * (ca * ca - 2.0 * rhs * ca));
      for (std::size_t b = a + 1; b < terms.size(); ++b) add(va, terms[b].first, 2.0 * lagrange * ca * terms[b].second);
    }
    offset_ += lagrange * rhs * rhs;
  }

  std::vector<QuboEntry> entries() const {
    std::vector<QuboEntry> out;
    out.reserve(coeffs_.size());
    for (const auto& [key, c] : coeffs_) out.push_back({key.first, key.second, c});
    return out;
  }
  double offset() const { return offset_; }

 private:
  std::map<std::pair<int, int>, double> coeffs_;
  double offset_ = 0.0;
};

std::int64_t encode_slack_value(std::int64_t value, std::span<const std::int64_t> weights, std::span<std::uint8_t> bits) {
  std::fill(bits.begin(), bits.end(), std::uint8_t{0});
  if (weights.empty()) return 0;
  const std::size_t last = weights.size() - 1;
  const std::int64_t low_max = (std::int64_t{1} << last) - 1;
  std::int64_t rest = value;
  if (rest > low_max) {
    bits[last] = 1;
    rest -= weights[last];
  }
  for (std::size_t b = 0; b < last; ++b) bits[b] = static_cast<std::uint8_t>((rest >> b) & 1);
  return value;
}

}  // namespace

int slack_bits_for(std::int64_t range) {
  if (range < 0) throw InvalidParameter("slack range must be non-negative");
  int bits = 0;
  while (((std::int64_t{1} << bits) - 1) < range) ++bits;
  return bits;
}

std::vector<std::int64_t> slack_weights(std::int64_t range) {
  const int bits = slack_bits_for(range);
  std::vector<std::int64_t> weights;
  for (int b = 0; b + 1 < bits; ++b) weights.push_back(std::int64_t{1} << b);
  if (bits > 0) weights.push_back(range - ((std::int64_t{1} << (bits - 1)) - 1));
  return weights;
}

double auto_lagrange(const CqmModel& model) {
  double sum = 1.0;
  for (double c : model.objective()) {
    if (c > 0.0) sum += c;
  }
  return sum;
}

// --- QuboModel ----------------------------------------------------------------

void QuboModel::finalize(std::vector<QuboEntry> raw) {
  for (QuboEntry& e : raw) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= num_variables()) throw InvalidParameter("QUBO entry refers to an unknown variable");
    if (!std::isfinite(e.coeff)) throw InvalidParameter("QUBO entry is not finite");
  }
  std::sort(raw.begin(), raw.end(), [](const QuboEntry& a, const QuboEntry& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  entries_.clear();
  for (const QuboEntry& e : raw) {
    if (!entries_.empty() && entries_.back().i == e.i && entries_.back().j == e.j) {
      entries_.back().coeff += e.coeff;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const QuboEntry& e) { return e.coeff == 0.0; });

  const auto n = static_cast<std::size_t>(num_variables());
  linear_.assign(n, 0.0);
  std::vector<std::size_t> degree(n, 0);
  for (const QuboEntry& e : entries_) {
    if (e.i == e.j) {
      linear_[static_cast<std::size_t>(e.i)] = e.coeff;
    } else {
      ++degree[static_cast<std::size_t>(e.i)];
      ++degree[static_cast<std::size_t>(e.j)];
    }
  }
  adjacency_start_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) adjacency_start_[v + 1] = adjacency_start_[v] + degree[v];
  adjacency_.assign(adjacency_start_[n], {});
  std::vector<std::size_t> fill(adjacency_start_.begin(), adjacency_start_.end() - 1);
  for (const QuboEntry& e : entries_) {
    if (e.i == e.j) continue;
    adjacency_[fill[static_cast<std::size_t>(e.i)]++] = {e.j, e.coeff};
    adjacency_[fill[static_cast<std::size_t>(e.j)]++] = {e.i, e.coeff};
  }
}

QuboModel QuboModel::from_entries(int num_variables, std::span<const QuboEntry> entries, double offset) {
  if (num_variables < 0) throw InvalidParameter("variable count must be non-negative");
  QuboModel q;
  for (int v = 0; v < num_variables; ++v) q.variables_.push_back(VarRef::binary(v));
  q.num_source_ = num_variables;
  q.offset_ = offset;
  q.finalize({entries.begin(), entries.end()});
  return q;
}

std::string QuboModel::variable_name(int var) const {
  const auto& ref = variables_.at(static_cast<std::size_t>(var));
  if (ref.kind == VarKind::kSlack) {
    return "slack_" + slack_registry_.at(static_cast<std::size_t>(ref.a)).constraint_id + "_b" + std::to_string(ref.b);
  }
  return ref.name();
}

int QuboModel::index_of(const VarRef& var) const {
  if (var.kind == VarKind::kSlack) {
    if (var.a >= 0 && static_cast<std::size_t>(var.a) < slack_registry_.size()) {
      const SlackBlock& block = slack_registry_[static_cast<std::size_t>(var.a)];
      if (var.b >= 0 && static_cast<std::size_t>(var.b) < block.weights.size()) return block.first_var + var.b;
    }
    throw MissingVariable("QUBO has no variable " + var.name());
  }
  if (source_) return source_->index_of(var);
  if (var.kind == VarKind::kBinary && var.a >= 0 && var.a < num_variables()) return var.a;
  throw MissingVariable("QUBO has no variable " + var.name());
}

const SlackBlock* QuboModel::slack_for(const std::string& constraint_id) const {
  for (const SlackBlock& block : slack_registry_) {
    if (block.constraint_id == constraint_id) return &block;
  }
  return nullptr;
}

double QuboModel::energy(std::span<const std::uint8_t> x) const {
  if (x.size() != variables_.size()) throw InvalidParameter("QUBO sample size does not match model");
  double e = offset_;
  for (const QuboEntry& q : entries_) {
    if (x[static_cast<std::size_t>(q.i)] && x[static_cast<std::size_t>(q.j)]) e += q.coeff;
  }
  return e;
}

// --- conversion -----------------------------------------------------------------

QuboModel cqm_to_qubo(const CqmModel& model, const PenaltyConfig& cfg) {
  const double lagrange = cfg.auto_weight ? auto_lagrange(model) : cfg.lagrange;
  if (!(lagrange > 0.0) || !std::isfinite(lagrange)) throw InvalidParameter("penalty weight must be positive");

  QuboModel q;
  q.source_ = std::make_shared<const CqmModel>(model);
  q.lagrange_ = lagrange;
  q.variables_.assign(model.variables().begin(), model.variables().end());
  q.num_source_ = model.num_variables();

  Accumulator acc;
  acc.add_offset(model.offset());
  for (int v = 0; v < model.num_variables(); ++v) acc.add(v, v, model.objective()[static_cast<std::size_t>(v)]);

  const auto constraints = model.constraints();
  std::vector<std::pair<int, double>> terms;
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const LinearConstraint& c = constraints[ci];
    if (!is_integral(c.rhs) || std::any_of(c.terms.begin(), c.terms.end(), [](const Term& t) { return !is_integral(t.coeff); })) {
      throw UnsupportedModel("constraint " + c.id + " has non-integral coefficients");
    }

    if (is_activation_pair(c)) {
      // x_a <= x_b  ->  lagrange * x_a * (1 - x_b)
      const int a = c.terms[0].coeff > 0 ? c.terms[0].var : c.terms[1].var;
      const int b = c.terms[0].coeff > 0 ? c.terms[1].var : c.terms[0].var;
      acc.add(a, a, lagrange);
      acc.add(a, b, -lagrange);
      continue;
    }

    terms.clear();
    for (const Term& t : c.terms) terms.emplace_back(t.var, std::round(t.coeff));
    const double rhs = std::round(c.rhs);

    if (c.sense == Sense::kLessEqual) {
      double min_lhs = 0.0;
      for (const Term& t : c.terms) min_lhs += std::min(0.0, std::round(t.coeff));
      const auto range = static_cast<std::int64_t>(std::llround(rhs - min_lhs));
      if (range < 0) throw InvalidParameter("constraint " + c.id + " cannot be satisfied by any assignment");
      if (range > 0) {
        SlackBlock block;
        block.constraint = static_cast<int>(ci);
        block.constraint_id = c.id;
        block.first_var = q.num_variables();
        block.weights = slack_weights(range);
        const int slack_index = static_cast<int>(q.slack_registry_.size());
        for (std::size_t b = 0; b < block.weights.size(); ++b) {
          terms.emplace_back(q.num_variables(), static_cast<double>(block.weights[b]));
          q.variables_.push_back(VarRef::slack(slack_index, static_cast<int>(b)));
        }
        q.slack_registry_.push_back(std::move(block));
      }
    }
    acc.add_squared(terms, rhs, lagrange);
  }

  q.offset_ = acc.offset();
  q.finalize(acc.entries());
  return q;
}

double qubo_energy(const QuboModel& q, std::span<const std::uint8_t> x) { return q.energy(x); }

double qubo_energy(const QuboModel& q, const Sample& x) {
  std::vector<std::uint8_t> dense(static_cast<std::size_t>(q.num_variables()));
  for (int v = 0; v < q.num_variables(); ++v) dense[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(x.get(q.variables()[static_cast<std::size_t>(v)]));
  return q.energy(dense);
}

std::vector<std::uint8_t> complete_slacks_dense(const QuboModel& q, std::span<const std::uint8_t> source) {
  if (source.size() < static_cast<std::size_t>(q.num_source_variables())) {
    throw InvalidParameter("source sample is shorter than the source variable count");
  }
  std::vector<std::uint8_t> x(source.begin(), source.begin() + q.num_source_variables());
  x.resize(static_cast<std::size_t>(q.num_variables()), 0);
  const CqmModel* model = q.source();
  if (!model) return x;
  const auto constraints = model->constraints();
  for (const SlackBlock& block : q.slack_registry()) {
    const LinearConstraint& c = constraints[static_cast<std::size_t>(block.constraint)];
    double lhs = 0.0;
    for (const Term& t : c.terms) {
      if (x[static_cast<std::size_t>(t.var)]) lhs += std::round(t.coeff);
    }
    std::int64_t range = 0;
    for (auto w : block.weights) range += w;
    const auto wanted = std::clamp<std::int64_t>(std::llround(std::round(c.rhs) - lhs), 0, range);
    encode_slack_value(wanted, block.weights,
                       std::span<std::uint8_t>(x).subspan(static_cast<std::size_t>(block.first_var), block.weights.size()));
  }
  return x;
}

Sample complete_slacks(const CqmModel& model, const QuboModel& q, const Sample& x) {
  if (q.source() == nullptr || q.num_source_variables() != model.num_variables()) {
    throw InvalidParameter("QUBO was not derived from this model");
  }
  const auto dense = complete_slacks_dense(q, model.to_dense(x));
  Sample out;
  for (int v = 0; v < q.num_variables(); ++v) out.set(q.variables()[static_cast<std::size_t>(v)], dense[static_cast<std::size_t>(v)]);
  return out;
}

Sample decode_source(const QuboModel& q, std::span<const std::uint8_t> x) {
  Sample out;
  for (int v = 0; v < q.num_source_variables(); ++v) out.set(q.variables()[static_cast<std::size_t>(v)], x[static_cast<std::size_t>(v)]);
  return out;
}

std::string export_qubo(const QuboModel& q) {
  std::size_t diagonal = 0;
  for (const QuboEntry& e : q.entries()) diagonal += e.i == e.j ? 1 : 0;
  std::ostringstream os;
  os << "c dcopt QUBO" << (q.source() ? " from " + q.source()->provenance() : std::string()) << '\n';
  os << "c variables " << q.num_variables() << " source " << q.num_source_variables() << " slack "
     << q.num_slack_variables() << '\n';
  os << "c offset " << detail::format_number(q.offset()) << '\n';
  os << "c lagrange " << detail::format_number(q.lagrange()) << '\n';
  for (int v = 0; v < q.num_variables(); ++v) os << "c var " << v << ' ' << q.variable_name(v) << '\n';
  os << "p qubo 0 " << q.num_variables() << ' ' << diagonal << ' ' << q.entries().size() - diagonal << '\n';
  for (const QuboEntry& e : q.entries()) {
    if (e.i == e.j) os << e.i << ' ' << e.j << ' ' << detail::format_number(e.coeff) << '\n';
  }
  for (const QuboEntry& e : q.entries()) {
    if (e.i != e.j) os << e.i << ' ' << e.j << ' ' << detail::format_number(e.coeff) << '\n';
  }
  return os.str();
}

}  // namespace dcopt
