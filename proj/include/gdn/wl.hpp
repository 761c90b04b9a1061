#pragma once

#include <cstdint>
#include <vector>

#include "gdn/graph.hpp"

namespace gdn {

// 1-dimensional Weisfeiler-Lehman color refinement. Colors are 64-bit content
// hashes: two nodes whose refinement histories agree get the same color, even
// across graphs, so graph hashes are directly comparable.
struct WlResult {
  // colors[t] holds the node colors after t refinement rounds; colors[0] is
  // the initial coloring from the node feature bit patterns (uniform when the
  // graph has no features).
  std::vector<std::vector<std::uint64_t>> colors;
  std::vector<std::uint64_t> iteration_hashes;  // hash of sorted colors[t]
  std::vector<int> class_counts;                // distinct colors per round
  std::uint64_t graph_hash = 0;
  int stable_after = 0;   // rounds until the partition stopped splitting
  bool converged = false;  // false when max_iters ran out first
};

// max_iters <= 0 means num_nodes rounds (refinement always stabilizes by then).
WlResult wl_refine(const Graph& g, int max_iters = 0);

}  // namespace gdn
