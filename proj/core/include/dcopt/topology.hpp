#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcopt {

using NodeId = int;

enum class NodeKind { kSwitch, kServer };

// Generator inputs. Base values are scaled by the depth at the root layer and
// lowered by the matching step at every level closer to the servers.
struct TreeParams {
  int depth = 2;
  double server_capacity = 10.0;  // C_s, CPU units
  double vm_util = 6.0;           // per-VM CPU demand
  double link_cap_base = 5.0;     // C_l
  double idle_base = 10.0;        // P^idle
  double dyn_base = 2.0;          // P^dyn
  double avg_data_rate = 4.0;     // d_avg, rate of every generated flow
  double idle_step = 5.0;
  double dyn_step = 1.0;
  double link_step = 2.0;

  // Throws InvalidParameter when a field is outside its domain.
  void validate() const;

  bool operator==(const TreeParams&) const = default;
};

inline constexpr int kMaxTreeDepth = 16;

struct Node {
  NodeId id = 0;
  int level = 0;  // switches: 0..depth-1 from the root, servers: depth
  NodeKind kind = NodeKind::kSwitch;

  bool operator==(const Node&) const = default;
};

struct Link {
  NodeId endpoint_lo = 0;  // shallower endpoint
  NodeId endpoint_hi = 0;  // deeper endpoint
  int layer = 0;           // level of endpoint_lo
  double capacity = 0.0;

  bool operator==(const Link&) const = default;
};

struct Flow {
  int id = 0;
  int src_vm = 0;
  int dst_vm = 0;
  double data_rate = 0.0;

  bool operator==(const Flow&) const = default;
};

// The layered switch/server tree. Immutable once built.
//
// Servers carry ids 0..M-1 in left-to-right order; switches follow with ids
// M..M+K-1 in breadth-first order from the root. Consecutive switch levels
// are completely connected and every leaf switch owns two servers.
class Proxytree {
 public:
  int depth() const noexcept { return depth_; }
  int num_servers() const noexcept { return num_servers_; }
  int num_vms() const noexcept { return static_cast<int>(vm_util_.size()); }
  int num_switches() const noexcept { return num_servers_ - 1; }
  int num_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
  int num_flows() const noexcept { return static_cast<int>(flows_.size()); }
  int num_links() const noexcept { return static_cast<int>(links_.size()); }

  const TreeParams& params() const noexcept { return params_; }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::span<const Link> links() const noexcept { return links_; }
  std::span<const Flow> flows() const noexcept { return flows_; }
  std::span<const double> vm_util() const noexcept { return vm_util_; }
  std::span<const double> level_idle_power() const noexcept { return level_idle_power_; }
  std::span<const double> level_dyn_power() const noexcept { return level_dyn_power_; }
  std::span<const double> level_link_capacity() const noexcept { return level_link_capacity_; }
  double server_capacity() const noexcept { return server_capacity_; }

  const Node& node(NodeId id) const;
  bool is_server(NodeId id) const noexcept { return id >= 0 && id < num_servers_; }
  bool is_switch(NodeId id) const noexcept { return id >= num_servers_ && id < num_nodes(); }
  int level(NodeId id) const { return node(id).level; }
  double idle_power(NodeId id) const { return level_idle_power_[static_cast<std::size_t>(level(id))]; }
  double dyn_power(NodeId id) const { return level_dyn_power_[static_cast<std::size_t>(level(id))]; }

  NodeId switch_id(int level, int index) const noexcept { return num_servers_ + (1 << level) - 1 + index; }
  std::vector<NodeId> switches_at_level(int level) const;
  NodeId leaf_of(NodeId server) const;

  std::span<const NodeId> neighbors(NodeId id) const;
  // Index into links() of the link joining a and b, if any.
  std::optional<int> link_between(NodeId a, NodeId b) const;

  // Same structure and parameters with a different flow set. Flows must name
  // distinct VMs in range and have positive rates.
  Proxytree with_flows(std::vector<Flow> flows) const;

  bool operator==(const Proxytree& other) const;

 private:
  friend Proxytree build_proxytree(const TreeParams& params);
  friend Proxytree parse_tree(std::string_view text);

  Proxytree() = default;
  void build_structure(int depth);
  void validate_values() const;

  TreeParams params_;
  int depth_ = 0;
  int num_servers_ = 0;
  double server_capacity_ = 0.0;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Flow> flows_;
  std::vector<double> vm_util_;
  std::vector<double> level_idle_power_;     // levels 0..depth
  std::vector<double> level_dyn_power_;      // levels 0..depth
  std::vector<double> level_link_capacity_;  // layers 0..depth-1
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::vector<int>> adjacent_links_;
};

Proxytree build_proxytree(const TreeParams& params);

// Neighbors across links, ascending by id. Throws InvalidParameter for an
// unknown node.
std::vector<NodeId> adjacent_nodes(const Proxytree& tree, NodeId node);

// JSON document with fields format, version, depth, params, counts, level
// tables, vm_util, nodes, links and flows.
std::string serialize_tree(const Proxytree& tree);
Proxytree parse_tree(std::string_view text);

// Closed forms used by tests and the CLI.
long long expected_link_count(int depth);

}  // namespace dcopt
