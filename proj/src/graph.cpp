#include "gdn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <set>
#include <utility>

#include "gdn/error.hpp"
#include "gdn/kernels.hpp"

#include <json.hpp>

namespace gdn {

namespace {

NeighborhoodIndex build_index(int n, const std::vector<Arc>& arcs,
                              NeighborhoodMode mode) {
  NeighborhoodIndex idx;
  idx.mode = mode;
  const int m = static_cast<int>(arcs.size());
  std::vector<int> dst(m);
  for (int a = 0; a < m; ++a) dst[a] = arcs[a].dst;
  kernels::RowGroups groups = kernels::group_rows(dst.data(), m, n);

  const bool closed = mode == NeighborhoodMode::closed;
  const int total = m + (closed ? n : 0);
  idx.offsets.assign(n + 1, 0);
  idx.neighbors.reserve(total);
  idx.arcs.reserve(total);
  idx.targets.reserve(total);
  for (int v = 0; v < n; ++v) {
    idx.offsets[v] = static_cast<int>(idx.neighbors.size());
    if (closed) {
      idx.neighbors.push_back(v);
      idx.arcs.push_back(-1);
      idx.targets.push_back(v);
    }
    for (int e = groups.offsets[v]; e < groups.offsets[v + 1]; ++e) {
      const int a = groups.members[e];
      idx.neighbors.push_back(arcs[a].src);
      idx.arcs.push_back(a);
      idx.targets.push_back(v);
    }
  }
  idx.offsets[n] = static_cast<int>(idx.neighbors.size());
  return idx;
}

std::vector<int> in_degrees(const Graph& g) {
  std::vector<int> deg(g.num_nodes, 0);
  for (const Arc& a : g.arcs) ++deg[a.dst];
  return deg;
}

}  // namespace

const NeighborhoodIndex& Graph::in_index(NeighborhoodMode mode) const {
  if (!indexes)
    throw usage_error("graph has no neighbor indexes; construct it via build_graph");
  return mode == NeighborhoodMode::open ? indexes->first : indexes->second;
}

Graph build_graph(Graph raw) {
  if (raw.num_nodes < 0) throw structural_error("negative node count");
  const int n = raw.num_nodes;
  const int m = raw.num_arcs();
  for (const Arc& a : raw.arcs) {
    if (a.src < 0 || a.src >= n || a.dst < 0 || a.dst >= n)
      throw structural_error("arc endpoint out of range: (" +
                             std::to_string(a.src) + ", " + std::to_string(a.dst) +
                             ") with " + std::to_string(n) + " nodes");
  }
  if (!raw.node_features.defined()) raw.node_features = Tensor::zeros({n, 0});
  if (raw.node_features.rows() != n)
    throw shape_error("node feature rows != node count");
  if (!raw.arc_features.defined()) raw.arc_features = Tensor::zeros({m, 0});
  if (raw.arc_features.rows() != m)
    throw shape_error("arc feature rows != arc count");
  if (raw.node_targets && static_cast<int>(raw.node_targets->size()) != n)
    throw shape_error("node target length != node count");
  if (raw.symmetrized) {
    std::set<std::pair<int, int>> seen;
    for (const Arc& a : raw.arcs) seen.insert({a.src, a.dst});
    for (const Arc& a : raw.arcs)
      if (!seen.count({a.dst, a.src}))
        throw structural_error("graph flagged symmetrized but misses a reverse arc");
  }
  auto open = build_index(n, raw.arcs, NeighborhoodMode::open);
  auto closed = build_index(n, raw.arcs, NeighborhoodMode::closed);
  raw.indexes = std::make_shared<const std::pair<NeighborhoodIndex, NeighborhoodIndex>>(
      std::move(open), std::move(closed));
  return raw;
}

Graph build_graph(int num_nodes, std::vector<Arc> arcs, Tensor node_features,
                  Tensor arc_features) {
  Graph g;
  g.num_nodes = num_nodes;
  g.arcs = std::move(arcs);
  g.node_features = std::move(node_features);
  g.arc_features = std::move(arc_features);
  return build_graph(std::move(g));
}

Graph symmetrize(const Graph& g) {
  const int dp = g.arc_feature_dim();
  std::set<std::pair<int, int>> seen;
  std::vector<Arc> arcs;
  std::vector<double> feats;
  auto push = [&](const Arc& a, const double* row) {
    if (!seen.insert({a.src, a.dst}).second) return;
    arcs.push_back(a);
    feats.insert(feats.end(), row, row + dp);
  };
  for (int a = 0; a < g.num_arcs(); ++a)
    push(g.arcs[a], g.arc_features.data().data() + static_cast<std::size_t>(a) * dp);
  // Reverse arcs inherit the forward arc's features.
  for (int a = 0; a < g.num_arcs(); ++a)
    push({g.arcs[a].dst, g.arcs[a].src},
         g.arc_features.data().data() + static_cast<std::size_t>(a) * dp);

  Graph out;
  out.num_nodes = g.num_nodes;
  out.arcs = std::move(arcs);
  out.node_features = g.node_features;
  out.arc_features = Tensor::from({static_cast<int>(out.arcs.size()), dp}, feats);
  out.node_targets = g.node_targets;
  out.graph_target = g.graph_target;
  out.symmetrized = true;
  return build_graph(std::move(out));
}

Neighbors neighbors(const Graph& g, int v, NeighborhoodMode mode) {
  if (v < 0 || v >= g.num_nodes) throw structural_error("node id out of range");
  const NeighborhoodIndex& idx = g.in_index(mode);
  Neighbors out;
  for (int e = idx.offsets[v]; e < idx.offsets[v + 1]; ++e) {
    out.nodes.push_back(idx.neighbors[e]);
    out.arcs.push_back(idx.arcs[e]);
  }
  return out;
}

GcnNorm gcn_norm(const Graph& g) { return gcn_norm(g, g.in_index(NeighborhoodMode::open)); }

GcnNorm gcn_norm(const Graph& g, const NeighborhoodIndex& base) {
  if (!g.symmetrized)
    throw usage_error("gcn normalization requires a symmetrized graph");
  const int n = g.num_nodes;
  std::vector<int> deg = in_degrees(g);
  GcnNorm out;
  out.index.mode = NeighborhoodMode::closed;
  out.index.offsets.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) {
    out.index.offsets[v] = out.index.num_entries();
    const double dv = 1.0 / std::sqrt(deg[v] + 1.0);
    out.index.neighbors.push_back(v);
    out.index.arcs.push_back(-1);
    out.index.targets.push_back(v);
    out.coeff.push_back(dv * dv);
    for (int e = base.offsets[v]; e < base.offsets[v + 1]; ++e) {
      if (base.arcs[e] < 0) continue;  // tolerate a closed base
      const int u = base.neighbors[e];
      out.index.neighbors.push_back(u);
      out.index.arcs.push_back(base.arcs[e]);
      out.index.targets.push_back(v);
      out.coeff.push_back(dv / std::sqrt(deg[u] + 1.0));
    }
  }
  out.index.offsets[n] = out.index.num_entries();
  return out;
}

Tensor dense_adjacency(const Graph& g) {
  const int n = g.num_nodes;
  Tensor a = Tensor::zeros({n, n});
  for (const Arc& arc : g.arcs) a.at(arc.src, arc.dst) = 1.0;
  return a;
}

std::vector<std::vector<int>> shortest_path_distances(const Graph& g) {
  const int n = g.num_nodes;
  std::vector<std::vector<int>> adj(n);
  for (const Arc& a : g.arcs) adj[a.src].push_back(a.dst);
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kUnreachable));
  for (int s = 0; s < n; ++s) {
    dist[s][s] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (dist[s][v] != kUnreachable) continue;
        dist[s][v] = dist[s][u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

BatchedGraph make_batch(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw usage_error("make_batch needs at least one graph");
  BatchedGraph b;
  b.num_graphs = static_cast<int>(graphs.size());
  int n = 0, m = 0;
  int d = graphs[0].feature_dim();
  int dp = graphs[0].arc_feature_dim();
  for (const Graph& g : graphs) {
    if (g.feature_dim() != d) throw shape_error("batch members disagree on feature width");
    if (g.arc_feature_dim() != dp)
      throw shape_error("batch members disagree on arc feature width");
    n += g.num_nodes;
    m += g.num_arcs();
  }
  Graph u;
  u.num_nodes = n;
  u.arcs.reserve(m);
  std::vector<double> x, ax;
  x.reserve(static_cast<std::size_t>(n) * d);
  ax.reserve(static_cast<std::size_t>(m) * dp);
  bool all_node_targets = !graphs.empty();
  bool all_graph_targets = !graphs.empty();
  std::vector<double> node_targets;
  std::vector<double> graph_targets;
  int kg = graphs.empty() || !graphs[0].graph_target
               ? 0
               : static_cast<int>(graphs[0].graph_target->size());
  bool symmetric = true;
  int offset = 0;
  for (const Graph& g : graphs) {
    b.node_offsets.push_back(offset);
    b.node_counts.push_back(g.num_nodes);
    for (int v = 0; v < g.num_nodes; ++v)
      b.node_to_graph.push_back(static_cast<int>(b.node_offsets.size()) - 1);
    for (const Arc& a : g.arcs) u.arcs.push_back({a.src + offset, a.dst + offset});
    const double* gx = g.node_features.data().data();
    x.insert(x.end(), gx, gx + static_cast<std::size_t>(g.num_nodes) * d);
    const double* ga = g.arc_features.data().data();
    ax.insert(ax.end(), ga, ga + static_cast<std::size_t>(g.num_arcs()) * dp);
    if (g.node_targets)
      node_targets.insert(node_targets.end(), g.node_targets->begin(),
                          g.node_targets->end());
    else
      all_node_targets = false;
    if (g.graph_target && static_cast<int>(g.graph_target->size()) == kg && kg > 0)
      graph_targets.insert(graph_targets.end(), g.graph_target->begin(),
                           g.graph_target->end());
    else
      all_graph_targets = false;
    symmetric = symmetric && g.symmetrized;
    offset += g.num_nodes;
  }
  u.node_features = Tensor::from({n, d}, x);
  u.arc_features = Tensor::from({m, dp}, ax);
  if (all_node_targets) u.node_targets = std::move(node_targets);
  u.symmetrized = symmetric && !graphs.empty();
  b.graph = build_graph(std::move(u));
  if (all_graph_targets)
    b.graph_targets = Tensor::from({b.num_graphs, kg}, graph_targets);
  return b;
}

std::vector<Graph> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open corpus file: " + path);
  std::vector<Graph> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw usage_error("bad JSON at " + path + ":" + std::to_string(lineno) +
                        ": " + e.what());
    }
    Graph g;
    g.num_nodes = j.at("n").get<int>();
    for (const auto& pair : j.at("arcs"))
      g.arcs.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
    const int m = g.num_arcs();
    if (j.contains("x")) {
      std::vector<double> x;
      int d = -1;
      for (const auto& row : j["x"]) {
        if (d < 0) d = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != d)
          throw shape_error("ragged feature rows at " + path + ":" +
                            std::to_string(lineno));
        for (const auto& v : row) x.push_back(v.get<double>());
      }
      g.node_features = Tensor::from({g.num_nodes, std::max(d, 0)}, x);
    }
    if (j.contains("edge_attr")) {
      std::vector<double> ax;
      int d = -1;
      for (const auto& row : j["edge_attr"]) {
        if (d < 0) d = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != d)
          throw shape_error("ragged arc feature rows at " + path + ":" +
                            std::to_string(lineno));
        for (const auto& v : row) ax.push_back(v.get<double>());
      }
      g.arc_features = Tensor::from({m, std::max(d, 0)}, ax);
    }
    if (j.contains("y_node")) {
      std::vector<double> y;
      for (const auto& v : j["y_node"]) y.push_back(v.get<double>());
      g.node_targets = std::move(y);
    }
    if (j.contains("y_graph")) {
      std::vector<double> y;
      if (j["y_graph"].is_array())
        for (const auto& v : j["y_graph"]) y.push_back(v.get<double>());
      else
        y.push_back(j["y_graph"].get<double>());
      g.graph_target = std::move(y);
    }
    const bool directed = j.value("directed", true);
    Graph built = build_graph(std::move(g));
    out.push_back(directed ? std::move(built) : symmetrize(built));
  }
  return out;
}

void save_jsonl(const std::string& path, const std::vector<Graph>& graphs) {
  std::ofstream out(path);
  if (!out) throw usage_error("cannot write corpus file: " + path);
  for (const Graph& g : graphs) {
    nlohmann::json j;
    j["n"] = g.num_nodes;
    auto arcs = nlohmann::json::array();
    for (const Arc& a : g.arcs) arcs.push_back({a.src, a.dst});
    j["arcs"] = std::move(arcs);
    auto x = nlohmann::json::array();
    for (int v = 0; v < g.num_nodes; ++v) {
      auto row = nlohmann::json::array();
      for (int c = 0; c < g.feature_dim(); ++c) row.push_back(g.node_features.at(v, c));
      x.push_back(std::move(row));
    }
    j["x"] = std::move(x);
    if (g.arc_feature_dim() > 0) {
      auto ax = nlohmann::json::array();
      for (int a = 0; a < g.num_arcs(); ++a) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < g.arc_feature_dim(); ++c)
          row.push_back(g.arc_features.at(a, c));
        ax.push_back(std::move(row));
      }
      j["edge_attr"] = std::move(ax);
    }
    if (g.node_targets) j["y_node"] = *g.node_targets;
    if (g.graph_target) {
      if (g.graph_target->size() == 1)
        j["y_graph"] = (*g.graph_target)[0];
      else
        j["y_graph"] = *g.graph_target;
    }
    // Symmetrized graphs carry both arc orientations explicitly; the
    // directed:false marker survives the round trip (the loader's symmetrize
    // pass deduplicates the already-present reverse arcs).
    j["directed"] = !g.symmetrized;
    out << j.dump() << "\n";
  }
}

}  // namespace gdn
