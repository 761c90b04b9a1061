#pragma once

#include <cstdint>
#include <string>

#include "gdn/graph.hpp"
#include "gdn/layers.hpp"
#include "gdn/tensor.hpp"

namespace gdn {

// Discrete arc labels live in one integer-valued column of arc_features.
struct RelationalConfig {
  int num_relations = 1;
  int relation_column = 0;
  int in_dim = 0;
  int out_dim = 0;
  std::string activation = "relu";
};

// Params: "W_rel_0" .. "W_rel_{K-1}" plus "W_self".
LayerParams init_rgcn_params(const RelationalConfig& cfg, std::uint64_t seed);
Tensor rgcn_forward(const RelationalConfig& cfg, const LayerParams& params,
                    const Graph& g, const Tensor& h,
                    const NeighborhoodIndex* idx = nullptr);

struct EccConfig {
  int in_dim = 0;
  int out_dim = 0;
  int edge_hidden = 16;  // hidden width of the arc-feature MLP
  std::string activation = "relu";
};

// Params: "We1", "be1", "We2", "be2" — MLP from arc features to a flattened
// row-major [out_dim x in_dim] matrix per arc.
LayerParams init_ecc_params(const EccConfig& cfg, int arc_feature_dim,
                            std::uint64_t seed);
Tensor ecc_forward(const EccConfig& cfg, const LayerParams& params, const Graph& g,
                   const Tensor& h, const NeighborhoodIndex* idx = nullptr);

struct AttentionConfig {
  int num_heads = 1;
  int in_dim = 0;
  int head_dim = 0;
  enum class Merge { concat, average };
  Merge merge = Merge::concat;
  double leaky_slope = 0.2;
  std::string activation = "identity";
  // Self-attention to the node's own state; open mode would error on
  // isolated nodes (softmax over an empty set).
  NeighborhoodMode neighborhood = NeighborhoodMode::closed;
};

// Params per head h: "W{h}" [in_dim x head_dim], "a{h}" [2*head_dim x 1].
LayerParams init_gat_params(const AttentionConfig& cfg, std::uint64_t seed);
// alpha_out, when given, receives the attention coefficients as one column
// per head, rows aligned with the neighborhood-index entries.
Tensor gat_forward(const AttentionConfig& cfg, const LayerParams& params,
                   const Graph& g, const Tensor& h,
                   const NeighborhoodIndex* idx = nullptr,
                   Tensor* alpha_out = nullptr);

// Uniform without-replacement subset of each node's open in-neighbors, of
// size min(fanout, |N_v|), original arc order preserved. Deterministic per
// seed. Drop-in replacement index for any layer forward.
NeighborhoodIndex sample_neighbors(const Graph& g, int fanout, std::uint64_t seed);

}  // namespace gdn
