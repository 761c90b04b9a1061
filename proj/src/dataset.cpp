#include "gdn/dataset.hpp"

#include <random>

#include "gdn/error.hpp"

namespace gdn {

Graph gen_two_community(int n_per_block, double p_in, double p_out,
                        std::uint64_t seed) {
  if (n_per_block < 1) throw usage_error("gen_two_community: empty block");
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
    throw usage_error("gen_two_community: probabilities must be in [0,1]");
  const int n = 2 * n_per_block;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  auto block = [&](int v) { return v < n_per_block ? 0 : 1; };
  Graph g;
  g.num_nodes = n;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double p = block(u) == block(v) ? p_in : p_out;
      if (coin(rng) < p) g.arcs.push_back({u, v});
    }
  std::vector<double> x(n), y(n);
  for (int v = 0; v < n; ++v) {
    x[v] = (block(v) == 0 ? 1.0 : -1.0) + noise(rng);
    y[v] = block(v);
  }
  g.node_features = Tensor::from({n, 1}, std::move(x));
  g.node_targets = std::move(y);
  return symmetrize(build_graph(std::move(g)));
}

std::vector<Graph> gen_cycles_vs_paths(int num_graphs, int min_n, int max_n,
                                       std::uint64_t seed) {
  if (min_n < 3) throw usage_error("gen_cycles_vs_paths: min_n must be >= 3");
  if (max_n < min_n) throw usage_error("gen_cycles_vs_paths: max_n < min_n");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(min_n, max_n);
  std::vector<Graph> out;
  out.reserve(num_graphs);
  for (int i = 0; i < num_graphs; ++i) {
    const int n = size(rng);
    const bool cycle = i % 2 == 1;
    Graph g;
    g.num_nodes = n;
    for (int v = 0; v + 1 < n; ++v) g.arcs.push_back({v, v + 1});
    if (cycle) g.arcs.push_back({n - 1, 0});
    g.node_features = Tensor::from({n, 1}, std::vector<double>(n, 1.0));
    g.graph_target = std::vector<double>{cycle ? 1.0 : 0.0};
    out.push_back(symmetrize(build_graph(std::move(g))));
  }
  return out;
}

}  // namespace gdn
