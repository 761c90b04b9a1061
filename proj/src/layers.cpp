#include "gdn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gdn/error.hpp"

namespace gdn {

bool LayerParams::has(std::string_view name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

Tensor& LayerParams::at(std::string_view name) {
  for (auto& [n, t] : items)
    if (n == name) return t;
  throw usage_error("unknown parameter: " + std::string(name));
}

const Tensor& LayerParams::at(std::string_view name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw usage_error("unknown parameter: " + std::string(name));
}

Tensor glorot(int rows, int cols, std::uint64_t seed) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& v : data) v = dist(rng);
  return Tensor::from({rows, cols}, std::move(data));
}

LayerParams init_layer_params(const LayerConfig& cfg, std::uint64_t seed) {
  if (cfg.in_dim <= 0 || cfg.out_dim <= 0)
    throw usage_error("layer dims must be positive");
  LayerParams p;
  std::uint64_t s = seed;
  auto w = [&](int r, int c) { return glorot(r, c, s++); };
  switch (cfg.variant) {
    case LayerConfig::Variant::generic:
      p.add("W_psi", w(cfg.in_dim, cfg.out_dim));
      p.add("W_phi", w(cfg.in_dim + cfg.out_dim, cfg.out_dim));
      p.add("b_phi", Tensor::zeros({1, cfg.out_dim}));
      break;
    case LayerConfig::Variant::gcn:
      p.add("W", w(cfg.in_dim, cfg.out_dim));
      break;
    case LayerConfig::Variant::gin: {
      const int hidden = cfg.gin_hidden > 0 ? cfg.gin_hidden : cfg.out_dim;
      p.add("eps", Tensor::scalar(cfg.gin_epsilon));
      p.add("W1", w(cfg.in_dim, hidden));
      p.add("b1", Tensor::zeros({1, hidden}));
      p.add("W2", w(hidden, cfg.out_dim));
      p.add("b2", Tensor::zeros({1, cfg.out_dim}));
      break;
    }
    case LayerConfig::Variant::sage_mean:
      p.add("W", w(2 * cfg.in_dim, cfg.out_dim));
      break;
  }
  return p;
}

namespace {

void check_h(const Graph& g, const Tensor& h, int in_dim, const char* who) {
  if (h.rows() != g.num_nodes)
    throw shape_error(std::string(who) + ": state rows != node count");
  if (h.cols() != in_dim)
    throw shape_error(std::string(who) + ": state width != layer in_dim");
}

// Neighbor-count column [n x 1] with zeros clamped to 1 (mean divisor).
Tensor count_column(const NeighborhoodIndex& idx) {
  const int n = idx.num_nodes();
  std::vector<double> c(n);
  for (int v = 0; v < n; ++v) c[v] = std::max(idx.count(v), 1);
  return Tensor::from({n, 1}, std::move(c));
}

}  // namespace

Tensor mp_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                  const Tensor& h, const NeighborhoodIndex* idx) {
  check_h(g, h, cfg.in_dim, "mp_forward");
  const NeighborhoodIndex& nbr = idx ? *idx : g.in_index(cfg.neighborhood);
  Tensor psi = matmul(h, params.at("W_psi"));
  Tensor msgs = gather_rows(psi, nbr.neighbors);
  Reduce mode = cfg.aggregator == Aggregator::sum    ? Reduce::sum
                : cfg.aggregator == Aggregator::mean ? Reduce::mean
                                                     : Reduce::max;
  Tensor agg = segment_reduce(msgs, nbr.targets, g.num_nodes, mode);
  Tensor z = concat_cols({h, agg});
  return activation(cfg.activation, add(matmul(z, params.at("W_phi")), params.at("b_phi")));
}

Tensor gcn_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                   const Tensor& h, const NeighborhoodIndex* idx) {
  check_h(g, h, cfg.in_dim, "gcn_forward");
  GcnNorm norm = idx ? gcn_norm(g, *idx) : gcn_norm(g);
  Tensor hw = matmul(h, params.at("W"));
  Tensor msgs = gather_rows(hw, norm.index.neighbors);
  Tensor coeff =
      Tensor::from({norm.index.num_entries(), 1}, std::move(norm.coeff));
  Tensor agg = segment_reduce(mul(msgs, coeff), norm.index.targets, g.num_nodes,
                              Reduce::sum);
  return activation(cfg.activation, agg);
}

Tensor gin_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                   const Tensor& h, const NeighborhoodIndex* idx) {
  check_h(g, h, cfg.in_dim, "gin_forward");
  const NeighborhoodIndex& nbr = idx ? *idx : g.in_index(cfg.neighborhood);
  Tensor nbr_sum = segment_reduce(gather_rows(h, nbr.neighbors), nbr.targets,
                                  g.num_nodes, Reduce::sum);
  Tensor one_plus_eps = add(params.at("eps"), Tensor::scalar(1.0));
  Tensor pre = add(mul(h, one_plus_eps), nbr_sum);
  Tensor h1 = relu(add(matmul(pre, params.at("W1")), params.at("b1")));
  return add(matmul(h1, params.at("W2")), params.at("b2"));
}

Tensor sage_mean_forward(const LayerConfig& cfg, const LayerParams& params,
                         const Graph& g, const Tensor& h,
                         const NeighborhoodIndex* idx) {
  check_h(g, h, cfg.in_dim, "sage_mean_forward");
  const NeighborhoodIndex& nbr = idx ? *idx : g.in_index(NeighborhoodMode::open);
  Tensor nbr_sum = segment_reduce(gather_rows(h, nbr.neighbors), nbr.targets,
                                  g.num_nodes, Reduce::sum);
  Tensor z = div(concat_cols({h, nbr_sum}), count_column(nbr));
  return activation(cfg.activation, matmul(z, params.at("W")));
}

Tensor layer_forward(const LayerConfig& cfg, const LayerParams& params, const Graph& g,
                     const Tensor& h, const NeighborhoodIndex* idx) {
  switch (cfg.variant) {
    case LayerConfig::Variant::generic: return mp_forward(cfg, params, g, h, idx);
    case LayerConfig::Variant::gcn: return gcn_forward(cfg, params, g, h, idx);
    case LayerConfig::Variant::gin: return gin_forward(cfg, params, g, h, idx);
    case LayerConfig::Variant::sage_mean:
      return sage_mean_forward(cfg, params, g, h, idx);
  }
  throw usage_error("unknown layer variant");
}

Tensor stack_forward(const std::vector<LayerSpec>& stack, const Graph& g,
                     const Tensor& h0, bool concat_all) {
  Tensor h = h0;
  std::vector<Tensor> outputs;
  for (const LayerSpec& layer : stack) {
    h = layer_forward(layer.cfg, layer.params, g, h);
    if (concat_all) outputs.push_back(h);
  }
  if (!concat_all) return h;
  if (outputs.empty()) return h0;
  return concat_cols(outputs);
}

RecurrentResult recurrent_iterate(const LayerConfig& cfg, const LayerParams& params,
                                  const Graph& g, const Tensor& h0, int max_iters,
                                  double tol) {
  if (cfg.in_dim != cfg.out_dim)
    throw shape_error("recurrent_iterate needs in_dim == out_dim");
  RecurrentResult res;
  res.h = h0;
  for (int t = 0; t < max_iters; ++t) {
    Tensor next = layer_forward(cfg, params, g, res.h);
    double delta = 0.0;
    for (std::int64_t i = 0; i < next.numel(); ++i)
      delta = std::max(delta, std::abs(next.data()[i] - res.h.data()[i]));
    res.h = next;
    ++res.iterations;
    if (delta < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gdn
