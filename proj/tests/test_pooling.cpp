#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "gdn/error.hpp"
#include "gdn/layers.hpp"
#include "gdn/pooling.hpp"
#include "oracles.hpp"

using namespace gdn;

namespace {

// Inner layer that returns fixed logits regardless of the graph.
InnerLayer fixed_logits(Tensor logits) {
  return [logits](const Graph&, const Tensor&) { return logits; };
}

Graph tri_plus_edge() {
  // triangle 0-1-2 plus pendant edge 2-3
  std::vector<Arc> arcs;
  auto both = [&](int u, int v) {
    arcs.push_back({u, v});
    arcs.push_back({v, u});
  };
  both(0, 1);
  both(1, 2);
  both(0, 2);
  both(2, 3);
  Graph g = build_graph(4, std::move(arcs),
                        Tensor::from({4, 2}, {1, 0, 0, 1, 1, 1, 2, 2}));
  g.symmetrized = true;
  return build_graph(std::move(g));
}

}  // namespace

// ------------------------------------------------------------ diffpool

TEST_CASE("diffpool with a hard one-hot assignment sums the clusters") {
  Graph g = tri_plus_edge();
  // huge logits -> softmax is effectively one-hot: {0,1}->cluster0, {2,3}->cluster1
  Tensor logits = Tensor::from({4, 2}, {50, 0, 50, 0, 0, 50, 0, 50});
  PoolOutput po = diffpool(fixed_logits(logits), g, g.node_features, 2);

  CHECK(po.num_nodes_out == 2);
  CHECK(po.h.at(0, 0) == doctest::Approx(1.0));  // rows 0+1
  CHECK(po.h.at(0, 1) == doctest::Approx(1.0));
  CHECK(po.h.at(1, 0) == doctest::Approx(3.0));  // rows 2+3
  CHECK(po.h.at(1, 1) == doctest::Approx(3.0));

  // A' = S^T A S: cluster0 has the 0-1 edge both ways, cross has 2 arcs, etc.
  CHECK(po.dense_adj.at(0, 0) == doctest::Approx(2.0));
  CHECK(po.dense_adj.at(0, 1) == doctest::Approx(2.0));  // arcs 0-2, 1-2
  CHECK(po.dense_adj.at(1, 1) == doctest::Approx(2.0));  // arc 2-3 both ways

  // near-one-hot rows have near-zero entropy
  CHECK(po.aux_losses.at("entropy").item() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("diffpool to one cluster sums everything") {
  Graph g = tri_plus_edge();
  PoolOutput po = diffpool(fixed_logits(Tensor::zeros({4, 1})), g, g.node_features, 1);
  CHECK(po.num_nodes_out == 1);
  CHECK(po.h.at(0, 0) == doctest::Approx(4.0));
  CHECK(po.h.at(0, 1) == doctest::Approx(4.0));
  CHECK(po.dense_adj.at(0, 0) == doctest::Approx(8.0));  // all arcs
  // uniform trivial assignment has entropy ln(1) = 0
  CHECK(po.aux_losses.at("entropy").item() == doctest::Approx(0.0));
}

TEST_CASE("diffpool assignment rows always sum to one") {
  std::mt19937_64 rng(301);
  oracle::RandGraphOpts o;
  o.n = 9;
  Graph g = oracle::rand_graph(rng, o);
  LayerConfig cfg;
  cfg.variant = LayerConfig::Variant::gcn;
  cfg.in_dim = o.fdim;
  cfg.out_dim = 3;
  cfg.activation = "identity";
  LayerParams p = init_layer_params(cfg, 77);
  InnerLayer inner = [&](const Graph& gg, const Tensor& hh) {
    return gcn_forward(cfg, p, gg, hh);
  };
  PoolOutput po = diffpool(inner, g, g.node_features, 3);
  for (int v = 0; v < 9; ++v) {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += po.assign.at(v, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(po.aux_losses.at("entropy").item() > 0.0);
  CHECK(po.aux_losses.at("entropy").item() <= std::log(3.0) + 1e-12);
}

TEST_CASE("diffpool checks the inner layer's output shape") {
  Graph g = tri_plus_edge();
  CHECK_THROWS_AS(diffpool(fixed_logits(Tensor::zeros({4, 3})), g, g.node_features, 2),
                  shape_error);
  CHECK_THROWS_AS(diffpool(fixed_logits(Tensor::zeros({3, 2})), g, g.node_features, 2),
                  shape_error);
}

// ------------------------------------------------------------ top-k

TEST_CASE("topk keeps the highest-scoring rows with ties to the lower index") {
  // p = e1, so s = first feature column; scores 5, 5, 1, 9 -> keep {3, 0}
  Graph g = build_graph(4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}},
                        Tensor::from({4, 1}, {5, 5, 1, 9}));
  g.symmetrized = true;
  g = build_graph(std::move(g));
  Tensor p = Tensor::from({1, 1}, {1.0});

  PoolOutput po = topk_pool(g.node_features, g, p, 0.5);
  CHECK(po.num_nodes_out == 2);
  CHECK(po.kept == std::vector<int>{0, 3});  // ascending order of kept ids
  // gate = tanh(score): rows are h * tanh(s)
  CHECK(po.h.at(0, 0) == doctest::Approx(5 * std::tanh(5.0)));
  CHECK(po.h.at(1, 0) == doctest::Approx(9 * std::tanh(9.0)));
  // no arcs survive between 0 and 3
  CHECK(po.arcs.empty());
}

TEST_CASE("topk count is exactly ceil(ratio * n)") {
  std::mt19937_64 rng(302);
  for (int n : {1, 2, 3, 7, 10, 30, 53}) {
    oracle::RandGraphOpts o;
    o.n = n;
    o.extra_edges = 2;
    o.fdim = 3;
    Graph g = oracle::rand_graph(rng, o);
    Tensor p = oracle::rand_graph(rng, o).node_features;  // junk source of randoms
    Tensor pv = Tensor::zeros({3, 1});
    for (int i = 0; i < 3; ++i) pv.at(i, 0) = p.at(0, i) + 0.1;
    for (double ratio : {0.1, 0.3, 0.5, 2.0 / 3.0, 0.999, 1.0}) {
      PoolOutput po = topk_pool(g.node_features, g, pv, ratio);
      const int want = static_cast<int>(std::ceil(ratio * n - 1e-9));
      CHECK(po.num_nodes_out == want);
      CHECK(static_cast<int>(po.kept.size()) == want);
    }
  }
}

TEST_CASE("topk induces the subgraph on the kept nodes") {
  Graph g = tri_plus_edge();
  // keep 3 of 4 nodes: scores by second feature column 0,1,1,2 -> drop node 0
  Tensor p = Tensor::from({2, 1}, {0.0, 1.0});
  PoolOutput po = topk_pool(g.node_features, g, p, 0.75);
  CHECK(po.kept == std::vector<int>{1, 2, 3});
  // surviving arcs: 1-2 (both ways), 2-3 (both ways), relabeled to {0,1,2}
  std::set<std::pair<int, int>> got;
  for (const Arc& a : po.arcs) got.insert({a.src, a.dst});
  std::set<std::pair<int, int>> want = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  CHECK(got == want);
  CHECK(po.symmetrized);
  Graph coarse = po.coarse_graph();
  CHECK(coarse.num_nodes == 3);
  CHECK(coarse.symmetrized);
}

TEST_CASE("topk rejects degenerate inputs") {
  Graph g = tri_plus_edge();
  CHECK_THROWS_AS(topk_pool(g.node_features, g, Tensor::zeros({2, 1}), 0.5),
                  numeric_error);  // zero projection vector
  Tensor p = Tensor::from({2, 1}, {1.0, 0.0});
  CHECK_THROWS_AS(topk_pool(g.node_features, g, p, 0.0), usage_error);
  CHECK_THROWS_AS(topk_pool(g.node_features, g, p, 1.5), usage_error);
  CHECK_THROWS_AS(topk_pool(g.node_features, g, Tensor::zeros({3, 1}), 0.5),
                  shape_error);
}

// ------------------------------------------------------------ sagpool

TEST_CASE("sagpool gates by tanh of the inner score and keeps structure-awareness") {
  Graph g = tri_plus_edge();
  Tensor scores = Tensor::from({4, 1}, {0.9, -0.2, 0.4, 0.1});
  PoolOutput po = sagpool(fixed_logits(scores), g, g.node_features, 0.5);
  CHECK(po.kept == std::vector<int>{0, 2});
  // gate is tanh(s) itself
  CHECK(po.h.at(0, 0) == doctest::Approx(std::tanh(0.9) * 1.0));
  CHECK(po.h.at(1, 1) == doctest::Approx(std::tanh(0.4) * 1.0));
  // arc 0-2 survives
  std::set<std::pair<int, int>> got;
  for (const Arc& a : po.arcs) got.insert({a.src, a.dst});
  CHECK(got == std::set<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("sagpool scores depend on the graph structure") {
  // same features, different wiring -> different inner GCN scores
  std::mt19937_64 rng(303);
  oracle::RandGraphOpts o;
  o.n = 6;
  o.constant_features = true;
  Graph a = oracle::rand_graph(rng, o);
  o.extra_edges = 12;
  Graph b = oracle::rand_graph(rng, o);

  LayerConfig cfg;
  cfg.variant = LayerConfig::Variant::gcn;
  cfg.in_dim = o.fdim;
  cfg.out_dim = 1;
  cfg.activation = "identity";
  LayerParams p = init_layer_params(cfg, 55);
  InnerLayer inner = [&](const Graph& gg, const Tensor& hh) {
    return gcn_forward(cfg, p, gg, hh);
  };
  PoolOutput pa = sagpool(inner, a, a.node_features, 1.0);
  PoolOutput pb = sagpool(inner, b, b.node_features, 1.0);
  CHECK(oracle::max_abs_diff(pa.scores, pb.scores) > 1e-9);
}

TEST_CASE("sagpool demands a scalar inner output") {
  Graph g = tri_plus_edge();
  CHECK_THROWS_AS(sagpool(fixed_logits(Tensor::zeros({4, 2})), g, g.node_features, 0.5),
                  shape_error);
}

// ------------------------------------------------------------ edgepool

TEST_CASE("edgepool on a triangle contracts exactly one edge") {
  std::vector<Arc> arcs;
  auto both = [&](int u, int v) {
    arcs.push_back({u, v});
    arcs.push_back({v, u});
  };
  both(0, 1);
  both(1, 2);
  both(0, 2);
  Graph g = build_graph(3, std::move(arcs), Tensor::from({3, 1}, {1, 2, 4}));
  g.symmetrized = true;
  g = build_graph(std::move(g));

  // score depends only on the endpoint sum -> edge 1-2 wins (sum 6)
  Tensor w = Tensor::from({2, 1}, {1.0, 1.0});
  Tensor b = Tensor::zeros({1, 1});
  PoolOutput po = edgepool(w, b, g, g.node_features);

  CHECK(po.num_nodes_out == 2);
  REQUIRE(po.merges.size() == 1);
  CHECK(po.merges[0] == std::pair<int, int>{1, 2});
  // node 0 passes through as coarse node 0 (min anchor ordering)
  CHECK(po.node_map[0] == 0);
  CHECK(po.node_map[1] == 1);
  CHECK(po.node_map[2] == 1);
  const double score = 1.0 / (1.0 + std::exp(-6.0));
  CHECK(po.h.at(1, 0) == doctest::Approx(score * 6.0));
  CHECK(po.h.at(0, 0) == doctest::Approx(1.0));  // pass-through keeps features
  // coarse graph: single undirected edge between the two supernodes
  std::set<std::pair<int, int>> got;
  for (const Arc& a : po.arcs) got.insert({a.src, a.dst});
  CHECK(got == std::set<std::pair<int, int>>{{0, 1}, {1, 0}});
  CHECK(po.symmetrized);
}

TEST_CASE("edgepool on a single edge merges both endpoints") {
  Graph g = build_graph(2, {{0, 1}, {1, 0}}, Tensor::from({2, 1}, {3, 5}));
  g.symmetrized = true;
  g = build_graph(std::move(g));
  Tensor w = Tensor::zeros({2, 1});
  Tensor b = Tensor::zeros({1, 1});  // score sigmoid(0) = 0.5
  PoolOutput po = edgepool(w, b, g, g.node_features);
  CHECK(po.num_nodes_out == 1);
  CHECK(po.h.at(0, 0) == doctest::Approx(0.5 * 8.0));
  CHECK(po.arcs.empty());
}

TEST_CASE("edgepool with no arcs passes every node through") {
  Graph g = build_graph(3, {}, Tensor::from({3, 1}, {1, 2, 3}));
  g.symmetrized = true;
  g = build_graph(std::move(g));
  PoolOutput po = edgepool(Tensor::zeros({2, 1}), Tensor::zeros({1, 1}), g,
                           g.node_features);
  CHECK(po.num_nodes_out == 3);
  CHECK(po.merges.empty());
  CHECK(oracle::max_abs_diff(po.h, g.node_features) == 0.0);
}

TEST_CASE("edgepool produces a valid maximal matching on random graphs") {
  std::mt19937_64 rng(304);
  for (int t = 0; t < 100; ++t) {
    oracle::RandGraphOpts o;
    o.n = 4 + static_cast<int>(rng() % 8);
    o.extra_edges = static_cast<int>(rng() % 8);
    Graph g = oracle::rand_graph(rng, o);
    Tensor w = oracle::rand_graph(rng, o).node_features;  // random params
    Tensor wcol = Tensor::zeros({2 * o.fdim, 1});
    for (int i = 0; i < 2 * o.fdim; ++i) wcol.at(i, 0) = w.at(i % o.n, i % o.fdim);
    PoolOutput po = edgepool(wcol, Tensor::zeros({1, 1}), g, g.node_features);

    std::set<std::pair<int, int>> edges;
    for (const Arc& a : g.arcs) edges.insert({a.src, a.dst});
    std::set<int> matched;
    for (auto [u, v] : po.merges) {
      CHECK(edges.count({u, v}));  // merged pairs are real edges
      CHECK(!matched.count(u));    // no node in two merges
      CHECK(!matched.count(v));
      matched.insert(u);
      matched.insert(v);
    }
    // maximality: every edge has a matched endpoint
    for (const Arc& a : g.arcs) {
      if (a.src == a.dst) continue;
      CHECK((matched.count(a.src) || matched.count(a.dst)));
    }
    CHECK(po.num_nodes_out == o.n - static_cast<int>(po.merges.size()));
  }
}

TEST_CASE("edgepool requires a symmetrized graph") {
  Graph g = build_graph(2, {{0, 1}}, Tensor::zeros({2, 1}));
  CHECK_THROWS_AS(edgepool(Tensor::zeros({2, 1}), Tensor::zeros({1, 1}), g,
                           g.node_features),
                  usage_error);
}

// ------------------------------------------------------------ entropy

TEST_CASE("entropy loss endpoints are exact") {
  for (int c : {2, 3, 5, 8}) {
    Tensor uniform = Tensor::zeros({4, c});
    for (double& v : uniform.data()) v = 1.0 / c;
    CHECK(std::abs(entropy_loss(uniform).item() - std::log(double(c))) < 1e-12);

    Tensor onehot = Tensor::zeros({3, c});
    for (int r = 0; r < 3; ++r) onehot.at(r, r % c) = 1.0;
    CHECK(std::abs(entropy_loss(onehot).item()) < 1e-12);
  }
  // rows that do not sum to one are rejected
  CHECK_THROWS_AS(entropy_loss(Tensor::from({1, 2}, {0.7, 0.7})), usage_error);
}
