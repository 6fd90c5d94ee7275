#include "dcopt/topology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "dcopt/error.hpp"

namespace dcopt {

namespace {

using nlohmann::json;

constexpr const char* kTreeFormat = "dcopt-tree";
constexpr int kTreeVersion = 1;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidParameter(std::string(name) + " must be a positive finite value");
  }
}

void validate_flows(const std::vector<Flow>& flows, int num_vms) {
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const Flow& flow = flows[f];
    const std::string where = "flow " + std::to_string(f);
    if (flow.id != static_cast<int>(f)) throw InvalidParameter(where + ": ids must be 0..F-1 in order");
    if (flow.src_vm < 0 || flow.src_vm >= num_vms || flow.dst_vm < 0 || flow.dst_vm >= num_vms) {
      throw InvalidParameter(where + ": VM index out of range");
    }
    if (flow.src_vm == flow.dst_vm) throw InvalidParameter(where + ": source and destination VM coincide");
    require_positive(flow.data_rate, "flow data rate");
  }
}

}  // namespace

void TreeParams::validate() const {
  if (depth < 2) throw InvalidParameter("depth must be at least 2, got " + std::to_string(depth));
  if (depth > kMaxTreeDepth) {
    throw InvalidParameter("depth must be at most " + std::to_string(kMaxTreeDepth));
  }
  require_positive(server_capacity, "server_capacity");
  require_positive(vm_util, "vm_util");
  require_positive(link_cap_base, "link_cap_base");
  require_positive(idle_base, "idle_base");
  require_positive(dyn_base, "dyn_base");
  require_positive(avg_data_rate, "avg_data_rate");
  if (idle_step < 0.0 || dyn_step < 0.0 || link_step < 0.0) {
    throw InvalidParameter("level steps must be non-negative");
  }
  if (vm_util > server_capacity) throw InvalidParameter("vm_util exceeds server_capacity");
}

long long expected_link_count(int depth) {
  long long links = 1LL << depth;
  for (int i = 0; i <= depth - 2; ++i) links += 1LL << (2 * i + 1);
  return links;
}

const Node& Proxytree::node(NodeId id) const {
  if (id < 0 || id >= num_nodes()) throw InvalidParameter("unknown node id " + std::to_string(id));
  return nodes_[static_cast<std::size_t>(id)];
}

std::vector<NodeId> Proxytree::switches_at_level(int level) const {
  std::vector<NodeId> ids;
  if (level < 0 || level >= depth_) return ids;
  ids.reserve(std::size_t{1} << level);
  for (int i = 0; i < (1 << level); ++i) ids.push_back(switch_id(level, i));
  return ids;
}

NodeId Proxytree::leaf_of(NodeId server) const {
  if (!is_server(server)) throw InvalidParameter("node " + std::to_string(server) + " is not a server");
  return switch_id(depth_ - 1, server / 2);
}

std::span<const NodeId> Proxytree::neighbors(NodeId id) const {
  node(id);
  return adjacency_[static_cast<std::size_t>(id)];
}

std::optional<int> Proxytree::link_between(NodeId a, NodeId b) const {
  if (a < 0 || a >= num_nodes() || b < 0 || b >= num_nodes()) return std::nullopt;
  const auto& adj = adjacency_[static_cast<std::size_t>(a)];
  const auto it = std::lower_bound(adj.begin(), adj.end(), b);
  if (it == adj.end() || *it != b) return std::nullopt;
  return adjacent_links_[static_cast<std::size_t>(a)][static_cast<std::size_t>(it - adj.begin())];
}

void Proxytree::build_structure(int depth) {
  depth_ = depth;
  num_servers_ = 1 << depth;
  const int num_switches = num_servers_ - 1;

  nodes_.clear();
  nodes_.reserve(static_cast<std::size_t>(num_servers_ + num_switches));
  for (int s = 0; s < num_servers_; ++s) nodes_.push_back({s, depth, NodeKind::kServer});
  for (int level = 0; level < depth; ++level) {
    for (int i = 0; i < (1 << level); ++i) nodes_.push_back({switch_id(level, i), level, NodeKind::kSwitch});
  }

  links_.clear();
  links_.reserve(static_cast<std::size_t>(expected_link_count(depth)));
  for (int layer = 0; layer + 1 < depth; ++layer) {
    for (int a = 0; a < (1 << layer); ++a) {
      for (int b = 0; b < (1 << (layer + 1)); ++b) {
        links_.push_back({switch_id(layer, a), switch_id(layer + 1, b), layer, 0.0});
      }
    }
  }
  for (int leaf = 0; leaf < (1 << (depth - 1)); ++leaf) {
    for (int s = 2 * leaf; s < 2 * leaf + 2; ++s) {
      links_.push_back({switch_id(depth - 1, leaf), s, depth - 1, 0.0});
    }
  }

  std::vector<std::vector<std::pair<NodeId, int>>> adj(nodes_.size());
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const Link& link = links_[l];
    adj[static_cast<std::size_t>(link.endpoint_lo)].emplace_back(link.endpoint_hi, static_cast<int>(l));
    adj[static_cast<std::size_t>(link.endpoint_hi)].emplace_back(link.endpoint_lo, static_cast<int>(l));
  }
  adjacency_.assign(nodes_.size(), {});
  adjacent_links_.assign(nodes_.size(), {});
  for (std::size_t n = 0; n < adj.size(); ++n) {
    std::sort(adj[n].begin(), adj[n].end());
    for (const auto& [other, link] : adj[n]) {
      adjacency_[n].push_back(other);
      adjacent_links_[n].push_back(link);
    }
  }
}

void Proxytree::validate_values() const {
  require_positive(server_capacity_, "server capacity");
  for (double p : level_idle_power_) require_positive(p, "level idle power");
  for (double p : level_dyn_power_) require_positive(p, "level dynamic power");
  for (double c : level_link_capacity_) require_positive(c, "link capacity");
  for (double u : vm_util_) {
    require_positive(u, "VM utilization");
    if (u > server_capacity_) throw InvalidParameter("VM utilization exceeds server capacity");
  }
  validate_flows(flows_, num_vms());
}

Proxytree Proxytree::with_flows(std::vector<Flow> flows) const {
  validate_flows(flows, num_vms());
  Proxytree copy = *this;
  copy.flows_ = std::move(flows);
  return copy;
}

bool Proxytree::operator==(const Proxytree& other) const {
  return params_ == other.params_ && depth_ == other.depth_ && server_capacity_ == other.server_capacity_ &&
         nodes_ == other.nodes_ && links_ == other.links_ && flows_ == other.flows_ &&
         vm_util_ == other.vm_util_ && level_idle_power_ == other.level_idle_power_ &&
         level_dyn_power_ == other.level_dyn_power_ && level_link_capacity_ == other.level_link_capacity_;
}

Proxytree build_proxytree(const TreeParams& params) {
  params.validate();
  Proxytree tree;
  tree.params_ = params;
  tree.build_structure(params.depth);
  tree.server_capacity_ = params.server_capacity;

  const int depth = params.depth;
  for (int level = 0; level <= depth; ++level) {
    tree.level_idle_power_.push_back(params.idle_base * depth - params.idle_step * level);
    tree.level_dyn_power_.push_back(params.dyn_base * depth - params.dyn_step * level);
  }
  for (int layer = 0; layer < depth; ++layer) {
    tree.level_link_capacity_.push_back(params.link_cap_base * depth - params.link_step * layer);
  }
  for (Link& link : tree.links_) link.capacity = tree.level_link_capacity_[static_cast<std::size_t>(link.layer)];

  tree.vm_util_.assign(static_cast<std::size_t>(tree.num_servers_), params.vm_util);
  for (int f = 0; f < tree.num_servers_ / 2; ++f) {
    tree.flows_.push_back({f, 2 * f, 2 * f + 1, params.avg_data_rate});
  }
  tree.validate_values();
  return tree;
}

std::vector<NodeId> adjacent_nodes(const Proxytree& tree, NodeId node) {
  const auto span = tree.neighbors(node);
  return {span.begin(), span.end()};
}

// --- serialization --------------------------------------------------------

namespace {

const char* kind_name(NodeKind kind) { return kind == NodeKind::kServer ? "server" : "switch"; }

json params_to_json(const TreeParams& p) {
  return json{{"depth", p.depth},
              {"server_capacity", p.server_capacity},
              {"vm_util", p.vm_util},
              {"link_cap_base", p.link_cap_base},
              {"idle_base", p.idle_base},
              {"dyn_base", p.dyn_base},
              {"avg_data_rate", p.avg_data_rate},
              {"idle_step", p.idle_step},
              {"dyn_step", p.dyn_step},
              {"link_step", p.link_step}};
}

// Typed field access that reports the JSON pointer of the offending value.
class Reader {
 public:
  Reader(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {}

  Reader at(const std::string& key) const {
    if (!value_.is_object()) fail("expected an object");
    const auto it = value_.find(key);
    if (it == value_.end()) throw ParseError(pointer_ + "/" + key, "missing field");
    return Reader(*it, pointer_ + "/" + key);
  }
  bool has(const std::string& key) const { return value_.is_object() && value_.contains(key); }

  Reader at(std::size_t index) const { return Reader(value_.at(index), pointer_ + "/" + std::to_string(index)); }

  std::size_t array_size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  int as_int() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<int>();
  }
  double as_number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }
  std::string as_string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  std::vector<double> as_numbers() const {
    std::vector<double> out(array_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).as_number();
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pointer_.empty() ? "/" : pointer_, what); }

 private:
  const json& value_;
  std::string pointer_;
};

TreeParams params_from_json(const Reader& r) {
  TreeParams p;
  p.depth = r.at("depth").as_int();
  p.server_capacity = r.at("server_capacity").as_number();
  p.vm_util = r.at("vm_util").as_number();
  p.link_cap_base = r.at("link_cap_base").as_number();
  p.idle_base = r.at("idle_base").as_number();
  p.dyn_base = r.at("dyn_base").as_number();
  p.avg_data_rate = r.at("avg_data_rate").as_number();
  p.idle_step = r.at("idle_step").as_number();
  p.dyn_step = r.at("dyn_step").as_number();
  p.link_step = r.at("link_step").as_number();
  return p;
}

}  // namespace

std::string serialize_tree(const Proxytree& tree) {
  json doc;
  doc["format"] = kTreeFormat;
  doc["version"] = kTreeVersion;
  doc["depth"] = tree.depth();
  doc["params"] = params_to_json(tree.params());
  doc["num_servers"] = tree.num_servers();
  doc["num_vms"] = tree.num_vms();
  doc["num_switches"] = tree.num_switches();
  doc["server_capacity"] = tree.server_capacity();
  doc["level_idle_power"] = std::vector<double>(tree.level_idle_power().begin(), tree.level_idle_power().end());
  doc["level_dyn_power"] = std::vector<double>(tree.level_dyn_power().begin(), tree.level_dyn_power().end());
  doc["level_link_capacity"] =
      std::vector<double>(tree.level_link_capacity().begin(), tree.level_link_capacity().end());
  doc["vm_util"] = std::vector<double>(tree.vm_util().begin(), tree.vm_util().end());

  json nodes = json::array();
  for (const Node& n : tree.nodes()) nodes.push_back({{"id", n.id}, {"level", n.level}, {"kind", kind_name(n.kind)}});
  doc["nodes"] = std::move(nodes);

  json links = json::array();
  for (const Link& l : tree.links()) {
    links.push_back({{"lo", l.endpoint_lo}, {"hi", l.endpoint_hi}, {"layer", l.layer}, {"capacity", l.capacity}});
  }
  doc["links"] = std::move(links);

  json flows = json::array();
  for (const Flow& f : tree.flows()) {
    flows.push_back({{"id", f.id}, {"src", f.src_vm}, {"dst", f.dst_vm}, {"rate", f.data_rate}});
  }
  doc["flows"] = std::move(flows);
  return doc.dump(2) + "\n";
}

Proxytree parse_tree(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed tree document");
  }
  const Reader root(doc, "");
  if (!doc.is_object()) root.fail("tree document must be a JSON object");
  if (root.at("format").as_string() != kTreeFormat) root.at("format").fail("unexpected format tag");
  if (root.at("version").as_int() != kTreeVersion) root.at("version").fail("unsupported version");

  const int depth = root.at("depth").as_int();
  if (depth < 2 || depth > kMaxTreeDepth) root.at("depth").fail("depth out of range");

  Proxytree tree;
  tree.params_ = params_from_json(root.at("params"));
  if (tree.params_.depth != depth) root.at("params").at("depth").fail("disagrees with top-level depth");
  tree.build_structure(depth);

  if (root.at("num_servers").as_int() != tree.num_servers_) root.at("num_servers").fail("must equal 2^depth");
  if (root.at("num_vms").as_int() != tree.num_servers_) root.at("num_vms").fail("must equal the server count");
  if (root.at("num_switches").as_int() != tree.num_servers_ - 1) {
    root.at("num_switches").fail("must equal 2^depth - 1");
  }

  tree.server_capacity_ = root.at("server_capacity").as_number();
  tree.level_idle_power_ = root.at("level_idle_power").as_numbers();
  tree.level_dyn_power_ = root.at("level_dyn_power").as_numbers();
  tree.level_link_capacity_ = root.at("level_link_capacity").as_numbers();
  tree.vm_util_ = root.at("vm_util").as_numbers();
  const auto levels = static_cast<std::size_t>(depth + 1);
  if (tree.level_idle_power_.size() != levels) root.at("level_idle_power").fail("needs depth+1 entries");
  if (tree.level_dyn_power_.size() != levels) root.at("level_dyn_power").fail("needs depth+1 entries");
  if (tree.level_link_capacity_.size() != levels - 1) root.at("level_link_capacity").fail("needs depth entries");
  if (tree.vm_util_.size() != static_cast<std::size_t>(tree.num_servers_)) root.at("vm_util").fail("needs M entries");

  const Reader nodes = root.at("nodes");
  if (nodes.array_size() != tree.nodes_.size()) nodes.fail("node count does not match depth");
  for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
    const Reader n = nodes.at(i);
    const Node& expected = tree.nodes_[i];
    const std::string kind = n.at("kind").as_string();
    if (n.at("id").as_int() != expected.id || n.at("level").as_int() != expected.level ||
        kind != kind_name(expected.kind)) {
      n.fail("node does not match the canonical layout for this depth");
    }
  }

  const Reader links = root.at("links");
  if (links.array_size() != tree.links_.size()) links.fail("link count does not match depth");
  for (std::size_t i = 0; i < tree.links_.size(); ++i) {
    const Reader l = links.at(i);
    Link& expected = tree.links_[i];
    if (l.at("lo").as_int() != expected.endpoint_lo || l.at("hi").as_int() != expected.endpoint_hi ||
        l.at("layer").as_int() != expected.layer) {
      l.fail("link does not match the canonical layout for this depth");
    }
    expected.capacity = l.at("capacity").as_number();
    if (expected.capacity != tree.level_link_capacity_[static_cast<std::size_t>(expected.layer)]) {
      l.at("capacity").fail("disagrees with level_link_capacity");
    }
  }

  const Reader flows = root.at("flows");
  for (std::size_t i = 0; i < flows.array_size(); ++i) {
    const Reader f = flows.at(i);
    tree.flows_.push_back(
        {f.at("id").as_int(), f.at("src").as_int(), f.at("dst").as_int(), f.at("rate").as_number()});
  }

  try {
    tree.validate_values();
  } catch (const InvalidParameter& e) {
    throw ParseError("/", e.what());
  }
  return tree;
}

}  // namespace dcopt
