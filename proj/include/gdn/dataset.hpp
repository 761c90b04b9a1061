#pragma once

#include <cstdint>
#include <vector>

#include "gdn/graph.hpp"

namespace gdn {

// Two-block stochastic block model: labels = block ids, symmetrized, one
// feature per node = block bias (+1 / -1) plus unit Gaussian noise.
Graph gen_two_community(int n_per_block, double p_in, double p_out,
                        std::uint64_t seed);

// Alternating paths (graph_target 0) and cycles (graph_target 1) with sizes
// uniform in [min_n, max_n], constant feature 1, symmetrized. Even
// num_graphs gives exactly balanced labels.
std::vector<Graph> gen_cycles_vs_paths(int num_graphs, int min_n, int max_n,
                                       std::uint64_t seed);

}  // namespace gdn
