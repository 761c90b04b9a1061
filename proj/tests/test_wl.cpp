#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gdn/graph.hpp"
#include "gdn/wl.hpp"
#include "oracles.hpp"

using namespace gdn;

namespace {

Graph cycle(int n) {
  std::vector<Arc> arcs;
  for (int i = 0; i < n; ++i) {
    arcs.push_back({i, (i + 1) % n});
    arcs.push_back({(i + 1) % n, i});
  }
  Graph g = build_graph(n, std::move(arcs), Tensor::from({n, 1}, std::vector<double>(n, 1.0)));
  g.symmetrized = true;
  return build_graph(std::move(g));
}

Graph two_triangles() {
  std::vector<Arc> arcs;
  auto tri = [&](int base) {
    for (int i = 0; i < 3; ++i) {
      int u = base + i, v = base + (i + 1) % 3;
      arcs.push_back({u, v});
      arcs.push_back({v, u});
    }
  };
  tri(0);
  tri(3);
  Graph g = build_graph(6, std::move(arcs), Tensor::from({6, 1}, std::vector<double>(6, 1.0)));
  g.symmetrized = true;
  return build_graph(std::move(g));
}

}  // namespace

TEST_CASE("single node stabilizes immediately") {
  Graph g = build_graph(1, {}, Tensor::from({1, 1}, {1}));
  WlResult r = wl_refine(g);
  CHECK(r.converged);
  CHECK(r.stable_after == 0);
  CHECK(r.class_counts.front() == 1);
}

TEST_CASE("path of three nodes splits ends from middle after one round") {
  Graph g = build_graph(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}},
                        Tensor::from({3, 1}, {1, 1, 1}));
  WlResult r = wl_refine(g);
  CHECK(r.class_counts[0] == 1);  // identical features
  CHECK(r.class_counts[1] == 2);  // degree splits {0,2} from {1}
  CHECK(r.colors.back()[0] == r.colors.back()[2]);
  CHECK(r.colors.back()[0] != r.colors.back()[1]);
  CHECK(r.converged);
}

TEST_CASE("distinct initial features seed distinct colors") {
  Graph g = build_graph(2, {}, Tensor::from({2, 1}, {1.0, 2.0}));
  WlResult r = wl_refine(g);
  CHECK(r.class_counts[0] == 2);
  CHECK(r.colors[0][0] != r.colors[0][1]);
}

TEST_CASE("class counts never decrease across rounds") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    oracle::RandGraphOpts o;
    o.n = 9;
    o.constant_features = true;
    Graph g = oracle::rand_graph(rng, o);
    WlResult r = wl_refine(g);
    for (size_t i = 1; i < r.class_counts.size(); ++i)
      CHECK(r.class_counts[i] >= r.class_counts[i - 1]);
    CHECK(r.converged);
  }
}

TEST_CASE("six-cycle and two triangles share every hash") {
  WlResult a = wl_refine(cycle(6));
  WlResult b = wl_refine(two_triangles());
  CHECK(a.graph_hash == b.graph_hash);
  REQUIRE(a.iteration_hashes.size() == b.iteration_hashes.size());
  for (size_t i = 0; i < a.iteration_hashes.size(); ++i)
    CHECK(a.iteration_hashes[i] == b.iteration_hashes[i]);
}

TEST_CASE("cycles of different lengths get different hashes") {
  CHECK(wl_refine(cycle(6)).graph_hash != wl_refine(cycle(7)).graph_hash);
}

TEST_CASE("a path and a cycle of equal size are distinguished") {
  Graph c = cycle(5);
  std::vector<Arc> arcs;
  for (int i = 0; i + 1 < 5; ++i) {
    arcs.push_back({i, i + 1});
    arcs.push_back({i + 1, i});
  }
  Graph p = build_graph(5, std::move(arcs), Tensor::from({5, 1}, std::vector<double>(5, 1.0)));
  p.symmetrized = true;
  p = build_graph(std::move(p));
  CHECK(wl_refine(c).graph_hash != wl_refine(p).graph_hash);
}

TEST_CASE("relabeling nodes changes nothing") {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    oracle::RandGraphOpts o;
    o.n = 8;
    o.fdim = 2;
    Graph g = oracle::rand_graph(rng, o);
    Graph h = oracle::permute_graph(g, oracle::rand_perm(8, rng));
    WlResult rg = wl_refine(g);
    WlResult rh = wl_refine(h);
    CHECK(rg.graph_hash == rh.graph_hash);
    CHECK(rg.class_counts == rh.class_counts);
  }
}

TEST_CASE("max_iters zero reports the feature classes only") {
  Graph g = cycle(4);
  WlResult r = wl_refine(g, 0);
  CHECK(r.colors.size() >= 1);
  CHECK(r.class_counts[0] == 1);
}

TEST_CASE("feature-sensitive refinement splits an otherwise regular graph") {
  // 4-cycle with one marked node: regular by structure, split by features
  std::vector<Arc> arcs;
  for (int i = 0; i < 4; ++i) {
    arcs.push_back({i, (i + 1) % 4});
    arcs.push_back({(i + 1) % 4, i});
  }
  Graph g = build_graph(4, std::move(arcs), Tensor::from({4, 1}, {9, 1, 1, 1}));
  g.symmetrized = true;
  g = build_graph(std::move(g));
  WlResult r = wl_refine(g);
  // marked node, its two neighbors, opposite node: 3 classes
  CHECK(r.class_counts.back() == 3);
}
