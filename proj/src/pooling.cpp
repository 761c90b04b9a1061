#include "gdn/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gdn/error.hpp"

namespace gdn {

Graph PoolOutput::coarse_graph() const {
  Graph g;
  g.num_nodes = num_nodes_out;
  g.arcs = arcs;
  g.node_features = h;
  g.arc_features = arc_features;
  g.symmetrized = symmetrized;
  return build_graph(std::move(g));
}

Tensor entropy_loss(const Tensor& s) {
  for (int r = 0; r < s.rows(); ++r) {
    double sum = 0.0;
    for (int c = 0; c < s.cols(); ++c) sum += s.at(r, c);
    if (std::abs(sum - 1.0) > 1e-8)
      throw usage_error("entropy_loss: row " + std::to_string(r) +
                        " does not sum to 1");
  }
  return row_entropy_mean(s);
}

PoolOutput diffpool(const InnerLayer& inner, const Graph& g, const Tensor& h,
                    int num_clusters) {
  if (num_clusters < 1) throw usage_error("diffpool: need at least one cluster");
  Tensor logits = inner(g, h);
  if (logits.rows() != g.num_nodes || logits.cols() != num_clusters)
    throw shape_error("diffpool: inner layer must emit [n x C] logits");
  PoolOutput out;
  out.assign = softmax_rows(logits);
  Tensor st = transpose(out.assign);
  out.h = matmul(st, h);
  out.dense_adj = matmul(matmul(st, dense_adjacency(g)), out.assign);
  out.num_nodes_out = num_clusters;
  out.aux_losses["entropy"] = entropy_loss(out.assign);
  return out;
}

namespace {

// Indices of the ceil(ratio*n) largest scores, ties broken toward the lower
// index, returned in increasing order.
std::vector<int> select_top(const std::vector<double>& score, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw usage_error("pooling ratio must be in (0, 1]");
  const int n = static_cast<int>(score.size());
  if (n == 0) return {};
  const int k = std::min(
      n, static_cast<int>(std::ceil(ratio * n - 1e-12)));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });
  order.resize(std::max(k, 1));
  std::sort(order.begin(), order.end());
  return order;
}

void induce_subgraph(const Graph& g, const std::vector<int>& kept, PoolOutput& out) {
  std::vector<int> new_id(g.num_nodes, -1);
  for (int i = 0; i < static_cast<int>(kept.size()); ++i) new_id[kept[i]] = i;
  const int dp = g.arc_feature_dim();
  std::vector<double> feats;
  for (int a = 0; a < g.num_arcs(); ++a) {
    const Arc& arc = g.arcs[a];
    if (new_id[arc.src] < 0 || new_id[arc.dst] < 0) continue;
    out.arcs.push_back({new_id[arc.src], new_id[arc.dst]});
    const double* row = g.arc_features.data().data() + static_cast<std::size_t>(a) * dp;
    feats.insert(feats.end(), row, row + dp);
  }
  out.arc_features = Tensor::from({static_cast<int>(out.arcs.size()), dp}, feats);
  out.symmetrized = g.symmetrized;
}

}  // namespace

PoolOutput topk_pool(const Tensor& h, const Graph& g, const Tensor& p, double ratio) {
  if (h.rows() != g.num_nodes) throw shape_error("topk_pool: state rows != node count");
  if (p.cols() != 1 || p.rows() != h.cols())
    throw shape_error("topk_pool: projection vector must be [d x 1]");
  bool all_zero = true;
  for (double v : p.data()) all_zero = all_zero && v == 0.0;
  if (all_zero) throw numeric_error("topk_pool: zero projection vector");

  Tensor norm = sqrt_op(sum_all(mul(p, p)));
  Tensor s = div(matmul(h, p), norm);  // [n x 1]
  PoolOutput out;
  out.scores = s;
  out.kept = select_top(s.data(), ratio);
  Tensor gate = tanh_op(gather_rows(s, out.kept));
  out.h = mul(gather_rows(h, out.kept), gate);
  out.num_nodes_out = static_cast<int>(out.kept.size());
  induce_subgraph(g, out.kept, out);
  return out;
}

PoolOutput sagpool(const InnerLayer& inner, const Graph& g, const Tensor& h,
                   double ratio) {
  Tensor raw = inner(g, h);
  if (raw.rows() != g.num_nodes || raw.cols() != 1)
    throw shape_error("sagpool: inner layer must emit one score per node");
  Tensor s = tanh_op(raw);
  PoolOutput out;
  out.scores = s;
  out.kept = select_top(s.data(), ratio);
  Tensor gate = gather_rows(s, out.kept);
  out.h = mul(gather_rows(h, out.kept), gate);
  out.num_nodes_out = static_cast<int>(out.kept.size());
  induce_subgraph(g, out.kept, out);
  return out;
}

PoolOutput edgepool(const Tensor& w, const Tensor& b, const Graph& g,
                    const Tensor& h) {
  if (h.rows() != g.num_nodes) throw shape_error("edgepool: state rows != node count");
  if (w.cols() != 1 || w.rows() != 2 * h.cols())
    throw shape_error("edgepool: weight must be [2d x 1]");
  if (!g.symmetrized) throw usage_error("edgepool expects a symmetrized graph");
  const int n = g.num_nodes;
  const int m = g.num_arcs();

  PoolOutput out;
  Tensor s;
  if (m > 0) {
    std::vector<int> srcs(m), dsts(m);
    for (int a = 0; a < m; ++a) {
      srcs[a] = g.arcs[a].src;
      dsts[a] = g.arcs[a].dst;
    }
    Tensor cat = concat_cols({gather_rows(h, srcs), gather_rows(h, dsts)});
    s = sigmoid(add(matmul(cat, w), b));
    out.scores = s;
  }

  // Greedy maximal matching, descending score, ties by lower arc index.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (m > 0)
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      return s.data()[a] > s.data()[c];
    });
  std::vector<char> matched(n, 0);
  std::vector<int> pair_arc(n, -1);
  std::vector<int> pair_with(n, -1);
  for (int a : order) {
    const int u = g.arcs[a].src, v = g.arcs[a].dst;
    if (u == v || matched[u] || matched[v]) continue;
    matched[u] = matched[v] = 1;
    pair_with[u] = v;
    pair_with[v] = u;
    pair_arc[u] = pair_arc[v] = a;
    out.merges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.merges.begin(), out.merges.end());

  // New ids in ascending order of representative (min of pair, or the node).
  out.node_map.assign(n, -1);
  std::vector<Tensor> rows;
  for (int v = 0; v < n; ++v) {
    if (matched[v] && pair_with[v] < v) {
      out.node_map[v] = out.node_map[pair_with[v]];
      continue;
    }
    out.node_map[v] = static_cast<int>(rows.size());
    if (!matched[v]) {
      rows.push_back(gather_rows(h, {v}));
    } else {
      const int u = pair_with[v];
      Tensor merged = mul(add(gather_rows(h, {v}), gather_rows(h, {u})),
                          gather_rows(s, {pair_arc[v]}));
      rows.push_back(merged);
    }
  }
  out.num_nodes_out = static_cast<int>(rows.size());
  out.h = rows.empty() ? Tensor::zeros({0, h.cols()}) : concat_rows(rows);

  // Rewire arcs between distinct coarse nodes; arc features are not carried
  // through contraction.
  std::set<std::pair<int, int>> seen;
  for (const Arc& arc : g.arcs) {
    const int a = out.node_map[arc.src], c = out.node_map[arc.dst];
    if (a == c) continue;
    if (seen.insert({a, c}).second) out.arcs.push_back({a, c});
  }
  out.arc_features = Tensor::zeros({static_cast<int>(out.arcs.size()), 0});
  out.symmetrized = g.symmetrized;
  return out;
}

}  // namespace gdn
