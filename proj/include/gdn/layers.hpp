#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gdn/graph.hpp"
#include "gdn/tensor.hpp"

namespace gdn {

enum class Aggregator { sum, mean, max };

struct LayerConfig {
  enum class Variant { generic, gcn, gin, sage_mean };
  Variant variant = Variant::generic;
  int in_dim = 0;
  int out_dim = 0;
  Aggregator aggregator = Aggregator::sum;
  NeighborhoodMode neighborhood = NeighborhoodMode::open;
  std::string activation = "relu";
  double gin_epsilon = 0.0;
  bool gin_epsilon_learnable = false;
  int gin_hidden = 0;  // 0 -> out_dim
};

// Insertion-ordered named tensors; the order is the checkpoint and optimizer
// order, so it must be deterministic.
struct LayerParams {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(std::string name, Tensor t) { items.emplace_back(std::move(name), std::move(t)); }
  bool has(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
};

// Uniform(-L, L) with L = sqrt(6 / (fan_in + fan_out)), seeded.
Tensor glorot(int rows, int cols, std::uint64_t seed);

LayerParams init_layer_params(const LayerConfig& cfg, std::uint64_t seed);

// All forwards accept an optional replacement neighborhood index (e.g. a
// sampled one); nullptr means the graph's own index in the configured mode.
Tensor mp_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                  const Tensor& h, const NeighborhoodIndex* idx = nullptr);
Tensor gcn_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                   const Tensor& h, const NeighborhoodIndex* idx = nullptr);
Tensor gin_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                   const Tensor& h, const NeighborhoodIndex* idx = nullptr);
Tensor sage_mean_forward(const LayerConfig& cfg, const LayerParams& params,
                         const Graph& g, const Tensor& h,
                         const NeighborhoodIndex* idx = nullptr);
// Dispatch on cfg.variant.
Tensor layer_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                     const Tensor& h, const NeighborhoodIndex* idx = nullptr);

struct LayerSpec {
  LayerConfig cfg;
  LayerParams params;
};

// Sequential application; with concat_all the per-layer outputs (input state
// excluded) are column-concatenated instead of returning only the last one.
Tensor stack_forward(const std::vector<LayerSpec>& stack, const Graph& g,
                     const Tensor& h0, bool concat_all = false);

struct RecurrentResult {
  Tensor h;
  int iterations = 0;
  bool converged = false;
};

// Applies the same layer repeatedly (shared weights) until the max-abs state
// change drops below tol or max_iters is reached. Requires in_dim == out_dim.
RecurrentResult recurrent_iterate(const LayerConfig& cfg, const LayerParams& params,
                                  const Graph& g, const Tensor& h0, int max_iters = 50,
                                  double tol = 1e-6);

}  // namespace gdn
