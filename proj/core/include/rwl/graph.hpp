#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace rwl {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

enum class Topology { ring, grid2d, erdos_renyi, watts_strogatz, custom };

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view s);

// Undirected, connected, unweighted graph with 0-based dense node ids.
//
// Every node carries an implicit self-loop. Self-loops are not stored:
// neighbors(v) never contains v and degree(v) counts only the other
// endpoints. Kernels that need the self-loop (the Levy hop walk) add it
// themselves. Immutable after construction.
class Graph {
 public:
  // Validates ids, rejects self-loops, drops duplicate edges and requires the
  // result to be connected. Throws InvalidArgument otherwise.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges,
                          Topology topology = Topology::custom, std::uint64_t seed = 0);

  std::size_t size() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  Topology topology() const { return topology_; }
  std::uint64_t seed() const { return seed_; }

  // Both throw InvalidArgument for v >= size().
  std::size_t degree(NodeId v) const;
  std::span<const NodeId> neighbors(NodeId v) const;

  // Unchecked hot-loop variants.
  std::size_t degree_unchecked(NodeId v) const { return adjacency_[v].size(); }
  std::span<const NodeId> neighbors_unchecked(NodeId v) const { return adjacency_[v]; }

  bool has_edge(NodeId u, NodeId v) const;

  // Each undirected edge once, as (u, v) with u < v, in lexicographic order.
  std::vector<Edge> edges() const;

  bool operator==(const Graph& other) const { return adjacency_ == other.adjacency_; }

 private:
  Graph() = default;

  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
  Topology topology_ = Topology::custom;
  std::uint64_t seed_ = 0;
};

// Breadth-first reachability from node 0 over an adjacency list.
bool is_connected(const std::vector<std::vector<NodeId>>& adjacency);
bool is_connected(const Graph& g);

// Cycle 0-1-...-(n-1)-0. Requires n >= 3.
Graph build_ring(std::size_t n);

// Non-wrapping 4-neighbour lattice; node (r, c) has id r * cols + c.
// Requires rows * cols >= 2.
Graph build_grid2d(std::size_t rows, std::size_t cols);

// G(n, p). Pairs (i, j), i < j, are visited in lexicographic order and each is
// kept when Rng(seed + attempt).uniform() < p. Disconnected samples are
// discarded and the next attempt uses the next seed; after 100 failures
// ConstructionFailed is thrown.
Graph build_erdos_renyi(std::size_t n, double p, std::uint64_t seed);

// Watts-Strogatz small world: ring lattice where each node links to its k/2
// nearest neighbours on each side, then for j = 1..k/2 and u = 0..n-1 the
// lattice edge (u, u + j) is rewired with probability beta to a uniformly
// chosen endpoint that avoids self-loops and duplicate edges. Connectivity
// is enforced by resampling exactly as in build_erdos_renyi.
Graph build_watts_strogatz(std::size_t n, std::size_t k, double beta, std::uint64_t seed);

Graph build_complete(std::size_t n);

// Edge-list text format: first line n, then one "u v" per line.
void write_edge_list(const Graph& g, std::ostream& out);
Graph read_edge_list(std::istream& in);

}  // namespace rwl
