#include "gdn/wl.hpp"

#include <algorithm>
#include <bit>

namespace gdn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
}

constexpr std::uint64_t kFeatureSeed = 0x8F1BBCDC5C6C1B25ULL;
constexpr std::uint64_t kRoundSeed = 0xA24BAED4963EE407ULL;
constexpr std::uint64_t kGraphSeed = 0x3C79AC492BA7B653ULL;

std::uint64_t hash_sorted(std::vector<std::uint64_t> v, std::uint64_t seed) {
  std::sort(v.begin(), v.end());
  std::uint64_t h = seed;
  for (std::uint64_t x : v) h = combine(h, x);
  return h;
}

int distinct(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace

WlResult wl_refine(const Graph& g, int max_iters) {
  const int n = g.num_nodes;
  if (max_iters <= 0) max_iters = std::max(n, 1);
  const int d = g.feature_dim();

  WlResult res;
  std::vector<std::uint64_t> color(n);
  for (int v = 0; v < n; ++v) {
    std::uint64_t h = kFeatureSeed;
    for (int c = 0; c < d; ++c)
      h = combine(h, std::bit_cast<std::uint64_t>(g.node_features.at(v, c)));
    color[v] = h;
  }
  res.colors.push_back(color);
  res.iteration_hashes.push_back(hash_sorted(color, kRoundSeed));
  res.class_counts.push_back(n > 0 ? distinct(color) : 0);

  const NeighborhoodIndex& idx = g.in_index(NeighborhoodMode::open);
  res.converged = n == 0;
  for (int t = 1; t <= max_iters; ++t) {
    std::vector<std::uint64_t> next(n);
    for (int v = 0; v < n; ++v) {
      std::vector<std::uint64_t> nbr;
      nbr.reserve(idx.count(v));
      for (int e = idx.offsets[v]; e < idx.offsets[v + 1]; ++e)
        nbr.push_back(color[idx.neighbors[e]]);
      std::sort(nbr.begin(), nbr.end());
      std::uint64_t h = combine(kRoundSeed, color[v]);
      for (std::uint64_t x : nbr) h = combine(h, x);
      next[v] = h;
    }
    res.colors.push_back(next);
    res.iteration_hashes.push_back(hash_sorted(next, kRoundSeed));
    res.class_counts.push_back(distinct(next));
    color = std::move(next);
    // Refinement only ever splits classes, so an unchanged count means the
    // partition is stable.
    const int rounds = static_cast<int>(res.class_counts.size());
    if (res.class_counts[rounds - 1] == res.class_counts[rounds - 2]) {
      res.converged = true;
      res.stable_after = rounds - 2;
      break;
    }
  }
  if (!res.converged) res.stable_after = static_cast<int>(res.class_counts.size()) - 1;

  std::uint64_t gh = combine(kGraphSeed, static_cast<std::uint64_t>(n));
  for (std::uint64_t h : res.iteration_hashes) gh = combine(gh, h);
  res.graph_hash = gh;
  return res;
}

}  // namespace gdn
