#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdn/tensor.hpp"

namespace gdn {

struct Arc {
  int src = 0;
  int dst = 0;
  friend bool operator==(const Arc&, const Arc&) = default;
};

enum class NeighborhoodMode { open, closed };

// Incoming-neighbor lists in CSR form, entries grouped by destination node in
// ascending order. Closed mode lists the node itself first (arc id -1).
struct NeighborhoodIndex {
  NeighborhoodMode mode = NeighborhoodMode::open;
  std::vector<int> offsets;    // size num_nodes + 1
  std::vector<int> neighbors;  // source node per entry
  std::vector<int> arcs;       // arc id per entry, -1 for the self entry
  std::vector<int> targets;    // destination node per entry

  int num_nodes() const { return static_cast<int>(offsets.size()) - 1; }
  int num_entries() const { return static_cast<int>(neighbors.size()); }
  int count(int v) const { return offsets[v + 1] - offsets[v]; }
};

// Directed attributed graph. Immutable once built; construction goes through
// build_graph so the neighbor indexes exist and invariants hold.
struct Graph {
  int num_nodes = 0;
  std::vector<Arc> arcs;
  Tensor node_features;  // [num_nodes x d], d may be 0
  Tensor arc_features;   // [num_arcs x d'], d' may be 0
  std::optional<std::vector<double>> node_targets;
  std::optional<std::vector<double>> graph_target;
  bool symmetrized = false;

  std::shared_ptr<const std::pair<NeighborhoodIndex, NeighborhoodIndex>>
      indexes;  // open, closed

  int num_arcs() const { return static_cast<int>(arcs.size()); }
  int feature_dim() const { return node_features.defined() ? node_features.cols() : 0; }
  int arc_feature_dim() const { return arc_features.defined() ? arc_features.cols() : 0; }
  const NeighborhoodIndex& in_index(NeighborhoodMode mode) const;
};

// Validates endpoints and feature shapes, fills defaults, builds indexes.
Graph build_graph(Graph raw);
Graph build_graph(int num_nodes, std::vector<Arc> arcs, Tensor node_features,
                  Tensor arc_features = {});

// Adds the reverse of every arc (copying its features), deduplicating, and
// sets the symmetrized flag. Idempotent on the arc set.
Graph symmetrize(const Graph& g);

struct Neighbors {
  std::vector<int> nodes;
  std::vector<int> arcs;  // -1 for the closed-mode self entry
};
Neighbors neighbors(const Graph& g, int v, NeighborhoodMode mode);

// Self-loop-augmented symmetric normalization: per returned index entry,
// coeff = 1/sqrt((deg(u)+1)(deg(v)+1)) with deg the in-degree before
// augmentation. Requires a symmetrized graph. An explicit base index (e.g. a
// sampled one) restricts which arcs appear; degrees stay full-graph.
struct GcnNorm {
  NeighborhoodIndex index;
  std::vector<double> coeff;
};
GcnNorm gcn_norm(const Graph& g);
GcnNorm gcn_norm(const Graph& g, const NeighborhoodIndex& base);

// Constant (off-tape) dense 0/1 adjacency of the arc list.
Tensor dense_adjacency(const Graph& g);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// BFS hop counts along arc orientation; kUnreachable when no path.
std::vector<std::vector<int>> shortest_path_distances(const Graph& g);

struct BatchedGraph {
  Graph graph;                    // disjoint union
  std::vector<int> node_to_graph;
  std::vector<int> node_counts;
  std::vector<int> node_offsets;
  int num_graphs = 0;
  Tensor graph_targets;  // [num_graphs x k] when every member has one
};
BatchedGraph make_batch(const std::vector<Graph>& graphs);

// JSON-lines corpus, one graph per line:
// {"n": int, "arcs": [[u,v],...], "x": [[...]], "edge_attr": [[...]],
//  "y_node": [...], "y_graph": ..., "directed": bool}
// A line with "directed": false is symmetrized on load.
std::vector<Graph> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, const std::vector<Graph>& graphs);

}  // namespace gdn
