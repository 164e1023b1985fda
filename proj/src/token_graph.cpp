#include "safe/token_graph.hpp"

#include <map>

#include "safe/error.hpp"

namespace safe::graph {

TokenGraph build_token_graph(const std::vector<std::int64_t>& ids, int window) {
  if (window < 2)
    throw ConfigError("build_token_graph: window must be >= 2, got " +
                      std::to_string(window));
  TokenGraph g;
  std::map<std::int64_t, Index> node_of;
  for (std::int64_t id : ids)
    if (!node_of.count(id)) {
      node_of[id] = static_cast<Index>(g.node_ids.size());
      g.node_ids.push_back(id);
    }
  const Index n = static_cast<Index>(g.node_ids.size());
  g.adjacency = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) g.adjacency(i, i) = 1.0;
  const std::int64_t len = static_cast<std::int64_t>(ids.size());
  for (std::int64_t i = 0; i < len; ++i)
    for (std::int64_t j = i + 1; j < std::min(len, i + window); ++j) {
      const Index u = node_of[ids[static_cast<std::size_t>(i)]];
      const Index v = node_of[ids[static_cast<std::size_t>(j)]];
      g.adjacency(u, v) = 1.0;
      g.adjacency(v, u) = 1.0;
    }
  return g;
}

void dump_edges(const TokenGraph& g, std::ostream& out) {
  const Index n = g.node_count();
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      if (g.adjacency(i, j) != 0.0) {
        const std::int64_t u = g.node_ids[static_cast<std::size_t>(i)];
        const std::int64_t v = g.node_ids[static_cast<std::size_t>(j)];
        out << std::min(u, v) << ' ' << std::max(u, v) << '\n';
      }
}

}  // namespace safe::graph
