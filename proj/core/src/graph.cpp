#include "rwl/graph.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include "rwl/errors.hpp"
#include "rwl/rng.hpp"

namespace rwl {

namespace {

constexpr int kMaxConnectivityAttempts = 100;

std::vector<Edge> lattice_edges(std::size_t n, std::size_t half_k) {
  std::vector<Edge> edges;
  for (std::size_t j = 1; j <= half_k; ++j)
    for (std::size_t u = 0; u < n; ++u)
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>((u + j) % n));
  return edges;
}

std::vector<std::vector<NodeId>> to_adjacency(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::vector<NodeId>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

}  // namespace

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::ring: return "ring";
    case Topology::grid2d: return "grid2d";
    case Topology::erdos_renyi: return "erdos_renyi";
    case Topology::watts_strogatz: return "watts_strogatz";
    case Topology::custom: return "custom";
  }
  return "custom";
}

Topology parse_topology(std::string_view s) {
  if (s == "ring") return Topology::ring;
  if (s == "grid2d" || s == "grid") return Topology::grid2d;
  if (s == "erdos_renyi" || s == "er") return Topology::erdos_renyi;
  if (s == "watts_strogatz" || s == "ws") return Topology::watts_strogatz;
  if (s == "custom") return Topology::custom;
  throw InvalidArgument("unknown topology '" + std::string(s) + "'");
}

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges, Topology topology,
                        std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("graph needs at least one node");
  if (n > std::numeric_limits<NodeId>::max()) throw InvalidArgument("graph too large");

  Graph g;
  g.topology_ = topology;
  g.seed_ = seed;
  g.adjacency_.assign(n, {});
  for (auto [u, v] : edges) {
    if (u >= n || v >= n)
      throw InvalidArgument("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") out of range for n = " + std::to_string(n));
    if (u == v)
      throw InvalidArgument("self-loops are implicit and must not be listed (node " +
                            std::to_string(u) + ")");
    g.adjacency_[u].push_back(v);
    g.adjacency_[v].push_back(u);
  }
  std::size_t half_edges = 0;
  for (auto& nb : g.adjacency_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    half_edges += nb.size();
  }
  g.edge_count_ = half_edges / 2;
  if (!is_connected(g.adjacency_)) throw InvalidArgument("graph is not connected");
  return g;
}

std::size_t Graph::degree(NodeId v) const {
  if (v >= size())
    throw InvalidArgument("node " + std::to_string(v) + " out of range (n = " +
                          std::to_string(size()) + ")");
  return adjacency_[v].size();
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  if (v >= size())
    throw InvalidArgument("node " + std::to_string(v) + " out of range (n = " +
                          std::to_string(size()) + ")");
  return adjacency_[v];
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= size() || v >= size()) return false;
  const auto& nb = adjacency_[u];
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < size(); ++u)
    for (NodeId v : adjacency_[u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

bool is_connected(const std::vector<std::vector<NodeId>>& adjacency) {
  const std::size_t n = adjacency.size();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop();
    for (NodeId u : adjacency[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        frontier.push(u);
      }
    }
  }
  return reached == n;
}

bool is_connected(const Graph& g) {
  std::vector<std::vector<NodeId>> adj(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    auto nb = g.neighbors_unchecked(v);
    adj[v].assign(nb.begin(), nb.end());
  }
  return is_connected(adj);
}

Graph build_ring(std::size_t n) {
  if (n < 3) throw InvalidArgument("ring needs n >= 3");
  return Graph::from_edges(n, lattice_edges(n, 1), Topology::ring);
}

Graph build_grid2d(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || rows * cols < 2)
    throw InvalidArgument("grid needs rows * cols >= 2");
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto id = static_cast<NodeId>(r * cols + c);
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, static_cast<NodeId>(id + cols));
    }
  }
  return Graph::from_edges(rows * cols, edges, Topology::grid2d);
}

Graph build_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("erdos_renyi needs n >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("erdos_renyi needs 0 < p <= 1");
  for (int attempt = 0; attempt < kMaxConnectivityAttempts; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < p) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    if (is_connected(to_adjacency(n, edges)))
      return Graph::from_edges(n, edges, Topology::erdos_renyi, seed);
  }
  throw ConstructionFailed("erdos_renyi(" + std::to_string(n) + ", " + std::to_string(p) +
                           ") stayed disconnected after 100 attempts");
}

Graph build_watts_strogatz(std::size_t n, std::size_t k, double beta, std::uint64_t seed) {
  if (k == 0 || k % 2 != 0) throw InvalidArgument("watts_strogatz needs an even k >= 2");
  if (k >= n) throw InvalidArgument("watts_strogatz needs k < n");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("watts_strogatz needs 0 <= beta <= 1");

  for (int attempt = 0; attempt < kMaxConnectivityAttempts; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<std::set<NodeId>> adj(n);
    for (auto [u, v] : lattice_edges(n, k / 2)) {
      adj[u].insert(v);
      adj[v].insert(u);
    }
    for (std::size_t j = 1; j <= k / 2; ++j) {
      for (std::size_t u = 0; u < n; ++u) {
        const auto v = static_cast<NodeId>((u + j) % n);
        if (!(rng.uniform() < beta)) continue;
        if (!adj[u].contains(v)) continue;  // already rewired away
        if (adj[u].size() >= n - 1) continue;
        NodeId w;
        do {
          w = static_cast<NodeId>(rng.below(n));
        } while (w == u || adj[u].contains(w));
        adj[u].erase(v);
        adj[v].erase(static_cast<NodeId>(u));
        adj[u].insert(w);
        adj[w].insert(static_cast<NodeId>(u));
      }
    }
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v : adj[u])
        if (u < v) edges.emplace_back(u, v);
    if (is_connected(to_adjacency(n, edges)))
      return Graph::from_edges(n, edges, Topology::watts_strogatz, seed);
  }
  throw ConstructionFailed("watts_strogatz stayed disconnected after 100 attempts");
}

Graph build_complete(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
  return Graph::from_edges(n, edges);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << g.size() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!(ls >> n)) throw InvalidArgument("edge list: expected node count, got '" + line + "'");
    break;
  }
  if (n == 0) throw InvalidArgument("edge list: missing or zero node count");
  std::vector<Edge> edges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long u = -1, v = -1;
    if (!(ls >> u >> v) || u < 0 || v < 0)
      throw InvalidArgument("edge list line " + std::to_string(lineno) + ": bad pair '" + line + "'");
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return Graph::from_edges(n, edges);
}

}  // namespace rwl
