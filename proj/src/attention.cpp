#include "gdn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gdn/error.hpp"

namespace gdn {

namespace {

void check_h(const Graph& g, const Tensor& h, int in_dim, const char* who) {
  if (h.rows() != g.num_nodes)
    throw shape_error(std::string(who) + ": state rows != node count");
  if (h.cols() != in_dim)
    throw shape_error(std::string(who) + ": state width != layer in_dim");
}

int relation_of(const Graph& g, int arc, const RelationalConfig& cfg) {
  const double v = g.arc_features.at(arc, cfg.relation_column);
  const int k = static_cast<int>(std::llround(v));
  if (std::abs(v - k) > 1e-9 || k < 0 || k >= cfg.num_relations)
    throw usage_error("relation id out of range on arc " + std::to_string(arc));
  return k;
}

}  // namespace

LayerParams init_rgcn_params(const RelationalConfig& cfg, std::uint64_t seed) {
  if (cfg.in_dim <= 0 || cfg.out_dim <= 0)
    throw usage_error("layer dims must be positive");
  if (cfg.num_relations < 1) throw usage_error("need at least one relation");
  LayerParams p;
  std::uint64_t s = seed;
  for (int k = 0; k < cfg.num_relations; ++k)
    p.add("W_rel_" + std::to_string(k), glorot(cfg.in_dim, cfg.out_dim, s++));
  p.add("W_self", glorot(cfg.in_dim, cfg.out_dim, s++));
  return p;
}

Tensor rgcn_forward(const RelationalConfig& cfg, const LayerParams& params,
                    const Graph& g, const Tensor& h, const NeighborhoodIndex* idx) {
  check_h(g, h, cfg.in_dim, "rgcn_forward");
  if (cfg.relation_column >= g.arc_feature_dim() && g.num_arcs() > 0)
    throw usage_error("rgcn_forward: relation column missing from arc features");
  const NeighborhoodIndex& nbr = idx ? *idx : g.in_index(NeighborhoodMode::open);

  // Entry subsets per relation, in index order (deterministic reduction).
  std::vector<std::vector<int>> rel_src(cfg.num_relations), rel_dst(cfg.num_relations);
  for (int e = 0; e < nbr.num_entries(); ++e) {
    if (nbr.arcs[e] < 0) continue;  // self entries carry no relation
    const int k = relation_of(g, nbr.arcs[e], cfg);
    rel_src[k].push_back(nbr.neighbors[e]);
    rel_dst[k].push_back(nbr.targets[e]);
  }

  Tensor acc = matmul(h, params.at("W_self"));
  for (int k = 0; k < cfg.num_relations; ++k) {
    if (rel_src[k].empty()) continue;
    Tensor mean_k = segment_reduce(gather_rows(h, rel_src[k]), rel_dst[k],
                                   g.num_nodes, Reduce::mean);
    acc = add(acc, matmul(mean_k, params.at("W_rel_" + std::to_string(k))));
  }
  return activation(cfg.activation, acc);
}

LayerParams init_ecc_params(const EccConfig& cfg, int arc_feature_dim,
                            std::uint64_t seed) {
  if (cfg.in_dim <= 0 || cfg.out_dim <= 0)
    throw usage_error("layer dims must be positive");
  if (arc_feature_dim <= 0)
    throw usage_error("ecc needs arc features");
  LayerParams p;
  std::uint64_t s = seed;
  p.add("We1", glorot(arc_feature_dim, cfg.edge_hidden, s++));
  p.add("be1", Tensor::zeros({1, cfg.edge_hidden}));
  p.add("We2", glorot(cfg.edge_hidden, cfg.out_dim * cfg.in_dim, s++));
  p.add("be2", Tensor::zeros({1, cfg.out_dim * cfg.in_dim}));
  return p;
}

Tensor ecc_forward(const EccConfig& cfg, const LayerParams& params, const Graph& g,
                   const Tensor& h, const NeighborhoodIndex* idx) {
  check_h(g, h, cfg.in_dim, "ecc_forward");
  if (g.arc_feature_dim() == 0 && g.num_arcs() > 0)
    throw usage_error("ecc_forward: graph has no arc features");
  const NeighborhoodIndex& nbr = idx ? *idx : g.in_index(NeighborhoodMode::open);

  std::vector<int> srcs, dsts, arc_ids;
  for (int e = 0; e < nbr.num_entries(); ++e) {
    if (nbr.arcs[e] < 0) continue;
    srcs.push_back(nbr.neighbors[e]);
    dsts.push_back(nbr.targets[e]);
    arc_ids.push_back(nbr.arcs[e]);
  }
  if (srcs.empty())
    return activation(cfg.activation, Tensor::zeros({g.num_nodes, cfg.out_dim}));

  // Per-arc operator from the arc-feature MLP, applied row-wise.
  Tensor e1 = relu(add(matmul(g.arc_features, params.at("We1")), params.at("be1")));
  Tensor e2 = add(matmul(e1, params.at("We2")), params.at("be2"));
  Tensor msgs = rowwise_matvec(gather_rows(e2, arc_ids), gather_rows(h, srcs),
                               cfg.out_dim);
  Tensor agg = segment_reduce(msgs, dsts, g.num_nodes, Reduce::mean);
  return activation(cfg.activation, agg);
}

LayerParams init_gat_params(const AttentionConfig& cfg, std::uint64_t seed) {
  if (cfg.in_dim <= 0 || cfg.head_dim <= 0)
    throw usage_error("layer dims must be positive");
  if (cfg.num_heads < 1) throw usage_error("need at least one head");
  LayerParams p;
  std::uint64_t s = seed;
  for (int k = 0; k < cfg.num_heads; ++k) {
    p.add("W" + std::to_string(k), glorot(cfg.in_dim, cfg.head_dim, s++));
    p.add("a" + std::to_string(k), glorot(2 * cfg.head_dim, 1, s++));
  }
  return p;
}

Tensor gat_forward(const AttentionConfig& cfg, const LayerParams& params,
                   const Graph& g, const Tensor& h, const NeighborhoodIndex* idx,
                   Tensor* alpha_out) {
  check_h(g, h, cfg.in_dim, "gat_forward");
  const NeighborhoodIndex& nbr = idx ? *idx : g.in_index(cfg.neighborhood);

  std::vector<Tensor> heads, alphas;
  for (int k = 0; k < cfg.num_heads; ++k) {
    Tensor wh = matmul(h, params.at("W" + std::to_string(k)));
    Tensor src = gather_rows(wh, nbr.neighbors);
    Tensor dst = gather_rows(wh, nbr.targets);
    Tensor scores = leaky_relu(
        matmul(concat_cols({src, dst}), params.at("a" + std::to_string(k))),
        cfg.leaky_slope);
    Tensor alpha = segment_softmax(scores, nbr.targets, g.num_nodes);
    Tensor agg = segment_reduce(mul(src, alpha), nbr.targets, g.num_nodes,
                                Reduce::sum);
    heads.push_back(activation(cfg.activation, agg));
    if (alpha_out) alphas.push_back(alpha);
  }
  if (alpha_out)
    *alpha_out = alphas.size() == 1 ? alphas[0] : concat_cols(alphas);
  if (heads.size() == 1) return heads[0];
  if (cfg.merge == AttentionConfig::Merge::concat) return concat_cols(heads);
  Tensor sum = heads[0];
  for (std::size_t k = 1; k < heads.size(); ++k) sum = add(sum, heads[k]);
  return scale(sum, 1.0 / static_cast<double>(heads.size()));
}

NeighborhoodIndex sample_neighbors(const Graph& g, int fanout, std::uint64_t seed) {
  if (fanout < 1) throw usage_error("sample_neighbors: fanout must be >= 1");
  const NeighborhoodIndex& base = g.in_index(NeighborhoodMode::open);
  std::mt19937_64 rng(seed);
  NeighborhoodIndex out;
  out.mode = NeighborhoodMode::open;
  const int n = g.num_nodes;
  out.offsets.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) {
    out.offsets[v] = out.num_entries();
    const int cnt = base.count(v);
    const int lo = base.offsets[v];
    if (cnt <= fanout) {
      for (int e = lo; e < lo + cnt; ++e) {
        out.neighbors.push_back(base.neighbors[e]);
        out.arcs.push_back(base.arcs[e]);
        out.targets.push_back(v);
      }
      continue;
    }
    std::vector<int> pos(cnt);
    std::iota(pos.begin(), pos.end(), 0);
    for (int i = 0; i < fanout; ++i) {
      std::uniform_int_distribution<int> pick(i, cnt - 1);
      std::swap(pos[i], pos[pick(rng)]);
    }
    std::sort(pos.begin(), pos.begin() + fanout);  // keep original arc order
    for (int i = 0; i < fanout; ++i) {
      const int e = lo + pos[i];
      out.neighbors.push_back(base.neighbors[e]);
      out.arcs.push_back(base.arcs[e]);
      out.targets.push_back(v);
    }
  }
  out.offsets[n] = out.num_entries();
  return out;
}

}  // namespace gdn
