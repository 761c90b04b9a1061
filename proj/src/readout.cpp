#include "gdn/readout.hpp"

#include <cmath>

#include "gdn/error.hpp"

namespace gdn {

LayerParams init_readout_params(const ReadoutConfig& cfg, std::uint64_t seed) {
  LayerParams p;
  if (cfg.mode != ReadoutConfig::Mode::deepsets) return p;
  if (cfg.in_dim <= 0 || cfg.inner_dim <= 0 || cfg.out_dim <= 0)
    throw usage_error("deepsets readout dims must be positive");
  p.add("Wi", glorot(cfg.in_dim, cfg.inner_dim, seed));
  p.add("bi", Tensor::zeros({1, cfg.inner_dim}));
  p.add("Wo", glorot(cfg.inner_dim, cfg.out_dim, seed + 1));
  p.add("bo", Tensor::zeros({1, cfg.out_dim}));
  return p;
}

Tensor readout(const ReadoutConfig& cfg, const LayerParams& params, const Tensor& h,
               const std::vector<int>& node_to_graph, int num_graphs) {
  if (static_cast<int>(node_to_graph.size()) != h.rows())
    throw shape_error("readout: node_to_graph length != state rows");
  std::vector<char> empty;
  switch (cfg.mode) {
    case ReadoutConfig::Mode::sum:
      return segment_reduce(h, node_to_graph, num_graphs, Reduce::sum);
    case ReadoutConfig::Mode::mean:
      return segment_reduce(h, node_to_graph, num_graphs, Reduce::mean);
    case ReadoutConfig::Mode::max: {
      Tensor out = segment_reduce(h, node_to_graph, num_graphs, Reduce::max, &empty);
      for (char e : empty)
        if (e) throw usage_error("readout: max over an empty graph");
      return out;
    }
    case ReadoutConfig::Mode::deepsets: {
      Tensor inner = activation(
          cfg.activation, add(matmul(h, params.at("Wi")), params.at("bi")));
      Tensor summed = segment_reduce(inner, node_to_graph, num_graphs, Reduce::sum);
      return activation(cfg.activation,
                        add(matmul(summed, params.at("Wo")), params.at("bo")));
    }
  }
  throw usage_error("unknown readout mode");
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) throw shape_error("mse: shape mismatch");
  Tensor d = sub(pred, target);
  return scale(sum_all(mul(d, d)), 1.0 / std::max(pred.rows(), 1));
}

Tensor link_reconstruction_loss(const Graph& g, const Tensor& h) {
  if (h.rows() != g.num_nodes)
    throw shape_error("link_reconstruction_loss: state rows != node count");
  if (g.num_arcs() == 0) return Tensor::scalar(0.0);
  std::vector<int> srcs, dsts;
  srcs.reserve(g.num_arcs());
  dsts.reserve(g.num_arcs());
  for (const Arc& a : g.arcs) {
    srcs.push_back(a.src);
    dsts.push_back(a.dst);
  }
  Tensor d = sub(gather_rows(h, dsts), gather_rows(h, srcs));
  return sum_all(mul(d, d));
}

Tensor edge_decoder_prob(const Tensor& hu, const Tensor& hv) {
  if (hu.shape() != hv.shape()) throw shape_error("edge_decoder_prob: shape mismatch");
  return sigmoid(row_sum(mul(hu, hv)));
}

Tensor node_level_decoder_nll(const Tensor& h, const Graph& g) {
  if (h.rows() != g.num_nodes)
    throw shape_error("node_level_decoder_nll: state rows != node count");
  Tensor logits = matmul(h, transpose(h));
  return scale(bce_with_logits_sum(logits, dense_adjacency(g)),
               1.0 / std::max(g.num_nodes, 1));
}

LayerParams init_graph_decoder_params(int in_dim, int hidden, int k,
                                      std::uint64_t seed) {
  if (in_dim <= 0 || hidden <= 0 || k <= 0)
    throw usage_error("graph decoder dims must be positive");
  LayerParams p;
  p.add("W1", glorot(in_dim, hidden, seed));
  p.add("b1", Tensor::zeros({1, hidden}));
  p.add("W2", glorot(hidden, k * k, seed + 1));
  p.add("b2", Tensor::zeros({1, k * k}));
  return p;
}

Tensor graph_level_decoder(const LayerParams& params, const Tensor& hg, int k) {
  if (hg.rows() != 1) throw shape_error("graph_level_decoder: expects one embedding row");
  Tensor h1 = relu(add(matmul(hg, params.at("W1")), params.at("b1")));
  Tensor logits = add(matmul(h1, params.at("W2")), params.at("b2"));
  return reshape(sigmoid(logits), {k, k});
}

Tensor graph_level_nll(const Tensor& probs, const Graph& g_true) {
  if (probs.rows() != probs.cols())
    throw shape_error("graph_level_nll: probability matrix must be square");
  const int k = probs.rows();
  if (g_true.num_nodes > k)
    throw usage_error("graph_level_nll: graph exceeds decoder size");
  Tensor target = Tensor::zeros({k, k});
  for (const Arc& a : g_true.arcs) target.at(a.src, a.dst) = 1.0;
  return bernoulli_nll_sum(probs, target);
}

Tensor kl_gaussian(const GaussianParams& q) {
  if (q.mu.shape() != q.log_sigma.shape())
    throw shape_error("kl_gaussian: mu/log_sigma shape mismatch");
  Tensor ls2 = scale(q.log_sigma, 2.0);
  Tensor terms = sub(add(exp_op(ls2), mul(q.mu, q.mu)),
                     add(Tensor::from(q.mu.shape(),
                                      std::vector<double>(q.mu.numel(), 1.0)),
                         ls2));
  return scale(sum_all(terms), 0.5);
}

}  // namespace gdn
