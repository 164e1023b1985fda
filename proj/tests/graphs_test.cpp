#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "safe/token_graph.hpp"

using namespace safe::graph;
using safe::Index;

namespace {

// Independent O(n·w) enumeration of co-occurring pairs.
std::set<std::pair<std::int64_t, std::int64_t>> brute_force_edges(
    const std::vector<std::int64_t>& ids, int window) {
  std::set<std::pair<std::int64_t, std::int64_t>> edges;
  const std::int64_t n = static_cast<std::int64_t>(ids.size());
  for (std::int64_t i = 0; i < n; ++i) {
    edges.insert({ids[i], ids[i]});  // self-loop
    for (std::int64_t j = i + 1; j < std::min(n, i + window); ++j)
      edges.insert({std::min(ids[i], ids[j]), std::max(ids[i], ids[j])});
  }
  return edges;
}

std::set<std::pair<std::int64_t, std::int64_t>> graph_edges(const TokenGraph& g) {
  std::set<std::pair<std::int64_t, std::int64_t>> edges;
  for (Index i = 0; i < g.node_count(); ++i)
    for (Index j = i; j < g.node_count(); ++j)
      if (g.adjacency(i, j) != 0.0) {
        const auto u = g.node_ids[static_cast<std::size_t>(i)];
        const auto v = g.node_ids[static_cast<std::size_t>(j)];
        edges.insert({std::min(u, v), std::max(u, v)});
      }
  return edges;
}

}  // namespace

TEST_CASE("single token graph") {
  auto g = build_token_graph({7}, 2);
  REQUIRE(g.node_count() == 1);
  CHECK(g.node_ids[0] == 7);
  CHECK(g.adjacency(0, 0) == 1.0);
  CHECK(g.feature_init() == g.node_ids);
}

TEST_CASE("abac window two") {
  // a=1 b=2 c=3
  auto g = build_token_graph({1, 2, 1, 3}, 2);
  REQUIRE(g.node_count() == 3);
  CHECK(g.node_ids == std::vector<std::int64_t>{1, 2, 3});
  CHECK(g.adjacency(0, 1) == 1.0);  // a-b
  CHECK(g.adjacency(0, 2) == 1.0);  // a-c
  CHECK(g.adjacency(1, 2) == 0.0);  // no b-c
  for (Index i = 0; i < 3; ++i) CHECK(g.adjacency(i, i) == 1.0);
}

TEST_CASE("empty sequence yields an empty graph") {
  auto g = build_token_graph({}, 5);
  CHECK(g.node_count() == 0);
}

TEST_CASE("window below two is rejected") {
  CHECK_THROWS_AS(build_token_graph({1, 2}, 1), safe::ConfigError);
}

TEST_CASE("edge sets equal brute-force window enumeration on seeded sequences") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int len = 1 + static_cast<int>(rng() % 40);
    const int window = 2 + static_cast<int>(rng() % 8);
    std::vector<std::int64_t> ids;
    for (int i = 0; i < len; ++i) ids.push_back(static_cast<std::int64_t>(rng() % 12));
    auto g = build_token_graph(ids, window);
    CHECK(graph_edges(g) == brute_force_edges(ids, window));
  }
}

TEST_CASE("adjacency is symmetric with unit diagonal") {
  std::mt19937_64 rng(7);
  std::vector<std::int64_t> ids;
  for (int i = 0; i < 60; ++i) ids.push_back(static_cast<std::int64_t>(rng() % 9));
  auto g = build_token_graph(ids, 5);
  for (Index i = 0; i < g.node_count(); ++i) {
    CHECK(g.adjacency(i, i) == 1.0);
    for (Index j = 0; j < g.node_count(); ++j)
      CHECK(g.adjacency(i, j) == g.adjacency(j, i));
  }
}

TEST_CASE("window spanning the whole sequence gives a complete graph") {
  std::vector<std::int64_t> ids = {4, 9, 2, 9, 4, 7};
  auto g = build_token_graph(ids, static_cast<int>(ids.size()));
  for (Index i = 0; i < g.node_count(); ++i)
    for (Index j = 0; j < g.node_count(); ++j)
      CHECK(g.adjacency(i, j) == 1.0);
}

TEST_CASE("permuting duplicate occurrences never changes the node set") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> ids;
    for (int i = 0; i < 30; ++i) ids.push_back(static_cast<std::int64_t>(rng() % 6));
    auto baseline = build_token_graph(ids, 4);
    std::vector<std::int64_t> shuffled = ids;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng() % i]);
    auto permuted = build_token_graph(shuffled, 4);
    std::set<std::int64_t> a(baseline.node_ids.begin(), baseline.node_ids.end());
    std::set<std::int64_t> b(permuted.node_ids.begin(), permuted.node_ids.end());
    CHECK(a == b);
  }
}
