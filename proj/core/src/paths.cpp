#include <algorithm>
#include <string>

#include "dcopt/error.hpp"
#include "dcopt/solvers.hpp"

namespace dcopt {

namespace {

struct PathSearch {
  const Proxytree& tree;
  NodeId dst;
  std::vector<bool> on_path;
  Path current;
  std::vector<Path> found;

  void step(NodeId at, bool ascending) {
    const int level = tree.level(at);
    for (NodeId next : tree.neighbors(at)) {
      if (on_path[static_cast<std::size_t>(next)]) continue;
      const int next_level = tree.level(next);
      if (tree.is_server(next)) {
        if (next != dst) continue;
        current.push_back(next);
        found.push_back(current);
        current.pop_back();
        continue;
      }
      const bool up = next_level < level;
      if (up && !ascending) continue;
      on_path[static_cast<std::size_t>(next)] = true;
      current.push_back(next);
      step(next, up);
      current.pop_back();
      on_path[static_cast<std::size_t>(next)] = false;
    }
  }
};

}  // namespace

std::vector<Path> enumerate_flow_paths(const Proxytree& tree, NodeId src_server, NodeId dst_server) {
  if (!tree.is_server(src_server) || !tree.is_server(dst_server)) {
    throw InvalidParameter("flow path endpoints must be servers, got " + std::to_string(src_server) + " and " +
                           std::to_string(dst_server));
  }
  if (src_server == dst_server) return {Path{}};

  PathSearch search{tree, dst_server, std::vector<bool>(static_cast<std::size_t>(tree.num_nodes()), false), {}, {}};
  const NodeId leaf = tree.leaf_of(src_server);
  search.on_path[static_cast<std::size_t>(src_server)] = true;
  search.on_path[static_cast<std::size_t>(leaf)] = true;
  search.current = {src_server, leaf};
  search.step(leaf, true);

  std::stable_sort(search.found.begin(), search.found.end(), [](const Path& a, const Path& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return std::move(search.found);
}

}  // namespace dcopt
