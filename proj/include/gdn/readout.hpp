#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdn/graph.hpp"
#include "gdn/layers.hpp"
#include "gdn/tensor.hpp"

namespace gdn {

struct ReadoutConfig {
  enum class Mode { sum, mean, max, deepsets };
  Mode mode = Mode::sum;
  // deepsets: inner map in_dim -> inner_dim per node, segment-sum, outer map
  // inner_dim -> out_dim.
  int in_dim = 0;
  int inner_dim = 0;
  int out_dim = 0;
  std::string activation = "identity";
};

// Params for deepsets: "Wi", "bi", "Wo", "bo"; other modes take none.
LayerParams init_readout_params(const ReadoutConfig& cfg, std::uint64_t seed);

// Per-graph reduction of node rows. Empty graphs produce a zero row under
// sum/mean and are an error under max.
Tensor readout(const ReadoutConfig& cfg, const LayerParams& params, const Tensor& h,
               const std::vector<int>& node_to_graph, int num_graphs);

// ---- learning criteria ----

// Mean over rows of the squared L2 distance; gradient 2(pred-target)/B.
Tensor mse(const Tensor& pred, const Tensor& target);

// Sum over arcs of ||h_dst - h_src||^2. On symmetrized graphs every
// undirected edge is counted in both orientations.
Tensor link_reconstruction_loss(const Graph& g, const Tensor& h);

// sigmoid(<h_u, h_v>) per row pair; [m x d] inputs give [m x 1] outputs.
Tensor edge_decoder_prob(const Tensor& hu, const Tensor& hv);

// -(1/n) sum over all ordered node pairs (self-pairs included, diagonal
// target 0) of the Bernoulli log-likelihood of the adjacency entry under
// sigmoid(<h_u, h_v>).
Tensor node_level_decoder_nll(const Tensor& h, const Graph& g);

// Params: "W1", "b1", "W2", "b2" — MLP from a graph embedding to k^2 logits.
LayerParams init_graph_decoder_params(int in_dim, int hidden, int k,
                                      std::uint64_t seed);
// Probabilistic adjacency [k x k] from one graph embedding [1 x in_dim].
Tensor graph_level_decoder(const LayerParams& params, const Tensor& hg, int k);
// Bernoulli cross-entropy (summed) of a [k x k] probability matrix against
// the zero-padded true adjacency in corpus node order.
Tensor graph_level_nll(const Tensor& probs, const Graph& g_true);

struct GaussianParams {
  Tensor mu;
  Tensor log_sigma;  // same shape as mu
};
// D_KL[N(mu, sigma^2) || N(0, I)] = 1/2 sum(sigma^2 + mu^2 - 1 - ln sigma^2).
Tensor kl_gaussian(const GaussianParams& q);

}  // namespace gdn
