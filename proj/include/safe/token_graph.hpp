#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "safe/tensor.hpp"

namespace safe::graph {

/// Graph over the unique vocabulary ids of a sequence: one node per distinct
/// id in first-occurrence order, an undirected edge between ids that
/// co-occur within a sliding window, self-loops on every node.
struct TokenGraph {
  std::vector<std::int64_t> node_ids;  // first-occurrence order
  Mat adjacency;                       // n×n symmetric 0/1 with unit diagonal

  std::int64_t node_count() const { return static_cast<std::int64_t>(node_ids.size()); }
  // Embedding-lookup initialization for node features.
  const std::vector<std::int64_t>& feature_init() const { return node_ids; }
};

/// Pad/special ids are excluded by the caller. window must be >= 2; an empty
/// id list yields an empty graph.
TokenGraph build_token_graph(const std::vector<std::int64_t>& ids, int window);

/// Debug dump: one "u v" line per undirected edge (vocabulary ids, u <= v),
/// self-loops included.
void dump_edges(const TokenGraph& g, std::ostream& out);

}  // namespace safe::graph
