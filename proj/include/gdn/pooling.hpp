#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gdn/graph.hpp"
#include "gdn/tensor.hpp"

namespace gdn {

struct PoolOutput {
  Tensor h;  // [n' x d] coarsened node states
  int num_nodes_out = 0;

  // DiffPool: dense coarse adjacency + soft assignment.
  Tensor dense_adj;  // [C x C]
  Tensor assign;     // [n x C], rows sum to 1

  // Top-k / SAGPool / EdgePool: coarse arc list (+ carried arc features).
  std::vector<Arc> arcs;
  Tensor arc_features;
  bool symmetrized = false;

  std::vector<int> kept;                     // top-k/sag: strictly increasing
  Tensor scores;                             // the gate/score column used
  std::vector<std::pair<int, int>> merges;   // edgepool: matched node pairs
  std::vector<int> node_map;                 // edgepool: old id -> new id

  std::map<std::string, Tensor> aux_losses;

  // Rebuilds a Graph from the arc-list outputs (not for DiffPool, whose
  // coarse adjacency is dense and stays on the tape).
  Graph coarse_graph() const;
};

using InnerLayer = std::function<Tensor(const Graph&, const Tensor&)>;

// S = row-softmax(inner(g, h)); H' = S^T h; A' = S^T A S; entropy aux loss.
PoolOutput diffpool(const InnerLayer& inner, const Graph& g, const Tensor& h,
                    int num_clusters);

// s = h p / ||p||, keep the ceil(ratio*n) largest (ties: lower index), gate
// kept rows by tanh(s).
PoolOutput topk_pool(const Tensor& h, const Graph& g, const Tensor& p, double ratio);

// s = tanh(inner(g, h)) with a scalar-output layer; selection and gating as
// in topk_pool, gate = s itself.
PoolOutput sagpool(const InnerLayer& inner, const Graph& g, const Tensor& h,
                   double ratio);

// Scores every arc with sigmoid(w^T [h_src, h_dst] + b), contracts a greedy
// maximal matching in descending score order (ties: lower arc index); merged
// feature = score * (h_src + h_dst); unmatched nodes pass through.
PoolOutput edgepool(const Tensor& w, const Tensor& b, const Graph& g,
                    const Tensor& h);

// Mean over rows of the natural-log entropy; rows must sum to 1.
Tensor entropy_loss(const Tensor& s);

}  // namespace gdn
