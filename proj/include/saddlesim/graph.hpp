#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "saddlesim/errors.hpp"

namespace saddlesim {

//! Undirected edge, stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  Edge() = default;
  Edge(int a, int b) : u(std::min(a, b)), v(std::max(a, b)) {}

  friend bool operator==(const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }
  friend bool operator<(const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  }
};

//! Simple undirected graph on vertices {0, ..., vertex_count-1}.
//! Edges are kept sorted and deduplicated; self-loops are rejected.
class Graph {
 public:
  Graph() = default;

  Graph(int vertex_count, std::vector<Edge> edges) : m_(vertex_count), edges_(std::move(edges)) {
    if (m_ <= 0) throw InvalidParameter("graph needs at least one vertex");
    for (const Edge& e : edges_) {
      if (e.u == e.v) throw InvalidParameter("self-loop on vertex " + std::to_string(e.u));
      if (e.u < 0 || e.v >= m_)
        throw InvalidParameter("edge endpoint out of range: (" + std::to_string(e.u) + "," +
                               std::to_string(e.v) + ")");
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  int vertex_count() const { return m_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  bool has_edge(int a, int b) const {
    Edge e(a, b);
    return std::binary_search(edges_.begin(), edges_.end(), e);
  }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(m_);
    for (const Edge& e : edges_) {
      adj[e.u].push_back(e.v);
      adj[e.v].push_back(e.u);
    }
    return adj;
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(m_, 0);
    for (const Edge& e : edges_) {
      ++deg[e.u];
      ++deg[e.v];
    }
    return deg;
  }

  //! BFS connectivity. A single vertex counts as connected.
  bool connected() const {
    if (m_ == 1) return true;
    auto adj = adjacency();
    std::vector<char> seen(m_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int visited = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++visited;
          stack.push_back(v);
        }
      }
    }
    return visited == m_;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.m_ == b.m_ && a.edges_ == b.edges_;
  }

 private:
  int m_ = 1;
  std::vector<Edge> edges_;
};

//! Union of two edge sets over the same vertex set.
inline Graph graph_union(const Graph& a, const Graph& b) {
  if (a.vertex_count() != b.vertex_count())
    throw VertexMismatch("union of graphs on different vertex sets");
  std::vector<Edge> e = a.edges();
  e.insert(e.end(), b.edges().begin(), b.edges().end());
  return Graph(a.vertex_count(), std::move(e));
}

//! max(|E1 \ E2|, |E2 \ E1|): the number of edge moves between two rounds.
inline int edge_change_count(const Graph& g1, const Graph& g2) {
  if (g1.vertex_count() != g2.vertex_count())
    throw VertexMismatch("edge diff of graphs on different vertex sets");
  const auto& e1 = g1.edges();
  const auto& e2 = g2.edges();
  std::vector<Edge> only1, only2;
  std::set_difference(e1.begin(), e1.end(), e2.begin(), e2.end(), std::back_inserter(only1));
  std::set_difference(e2.begin(), e2.end(), e1.begin(), e1.end(), std::back_inserter(only2));
  return static_cast<int>(std::max(only1.size(), only2.size()));
}

// --- standard test topologies ---

inline Graph path_graph(int m) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < m; ++i) e.emplace_back(i, i + 1);
  return Graph(m, std::move(e));
}

inline Graph ring_graph(int m) {
  if (m < 3) throw InvalidParameter("ring needs at least 3 vertices");
  std::vector<Edge> e;
  for (int i = 0; i < m; ++i) e.emplace_back(i, (i + 1) % m);
  return Graph(m, std::move(e));
}

inline Graph star_graph(int m) {
  std::vector<Edge> e;
  for (int i = 1; i < m; ++i) e.emplace_back(0, i);
  return Graph(m, std::move(e));
}

inline Graph complete_graph(int m) {
  std::vector<Edge> e;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) e.emplace_back(i, j);
  return Graph(m, std::move(e));
}

}  // namespace saddlesim
