#include "gdn/gradsuite.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <string>

#include "gdn/attention.hpp"
#include "gdn/graph.hpp"
#include "gdn/layers.hpp"
#include "gdn/pooling.hpp"
#include "gdn/readout.hpp"
#include "gdn/tensor.hpp"

namespace gdn {

namespace {

constexpr int kNodes = 6;
constexpr int kFeat = 4;
constexpr int kArcFeat = 3;

Tensor random_tensor(int rows, int cols, std::mt19937_64& rng, double span = 1.0) {
  std::uniform_real_distribution<double> u(-span, span);
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Small symmetric fixture: a 6-cycle with two chords. Arc features carry an
// integer relation id in column 0 (so the relational layer can reuse the same
// graph) and smooth random values elsewhere.
Graph make_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Arc> arcs;
  auto both = [&](int u, int v) {
    arcs.push_back({u, v});
    arcs.push_back({v, u});
  };
  for (int i = 0; i < kNodes; ++i) both(i, (i + 1) % kNodes);
  both(0, 3);
  both(1, 4);
  int m = static_cast<int>(arcs.size());
  Tensor x = random_tensor(kNodes, kFeat, rng);
  Tensor ef = random_tensor(m, kArcFeat, rng);
  std::uniform_int_distribution<int> rel(0, 1);
  for (int a = 0; a < m; ++a) ef.at(a, 0) = static_cast<double>(rel(rng));
  Graph g;
  g.num_nodes = kNodes;
  g.arcs = std::move(arcs);
  g.node_features = x;
  g.arc_features = ef;
  g.symmetrized = true;
  return build_graph(std::move(g));
}

// Quadratic scalarization so the incoming grads at the component output are
// position-dependent rather than all-ones.
Tensor squash(const Tensor& t) { return sum_all(mul(t, t)); }

struct Suite {
  std::uint64_t seed;
  Graph g;
  std::mt19937_64 rng;
  std::vector<GradCheckEntry> out;

  explicit Suite(std::uint64_t s) : seed(s), g(make_fixture(s)), rng(s ^ 0x9e3779b9) {}

  void check(const std::string& name, const std::function<Tensor()>& f,
             std::vector<Tensor> params) {
    out.push_back({name, grad_check(f, std::move(params))});
  }

  void layer_case(const std::string& name, LayerConfig cfg) {
    LayerParams p = init_layer_params(cfg, seed + out.size());
    std::vector<Tensor> params;
    for (auto& [n, t] : p.items) params.push_back(t);
    check(name, [this, cfg, p] { return squash(layer_forward(cfg, p, g, g.node_features)); },
          std::move(params));
  }
};

}  // namespace

std::vector<GradCheckEntry> run_grad_suite(std::uint64_t seed) {
  Suite s(seed);

  // -------- message passing layers
  for (auto agg : {Aggregator::sum, Aggregator::mean, Aggregator::max}) {
    LayerConfig cfg;
    cfg.variant = LayerConfig::Variant::generic;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.aggregator = agg;
    cfg.activation = "tanh";
    std::string n = agg == Aggregator::sum    ? "layer/generic_sum"
                    : agg == Aggregator::mean ? "layer/generic_mean"
                                              : "layer/generic_max";
    s.layer_case(n, cfg);
  }
  {
    LayerConfig cfg;
    cfg.variant = LayerConfig::Variant::generic;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.neighborhood = NeighborhoodMode::closed;
    cfg.activation = "sigmoid";
    s.layer_case("layer/generic_closed", cfg);
  }
  {
    LayerConfig cfg;
    cfg.variant = LayerConfig::Variant::gcn;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.activation = "relu";
    s.layer_case("layer/gcn", cfg);
  }
  {
    LayerConfig cfg;
    cfg.variant = LayerConfig::Variant::gin;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.gin_hidden = 5;
    cfg.gin_epsilon = 0.3;
    cfg.gin_epsilon_learnable = true;
    s.layer_case("layer/gin", cfg);
  }
  {
    LayerConfig cfg;
    cfg.variant = LayerConfig::Variant::sage_mean;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.activation = "tanh";
    s.layer_case("layer/sage_mean", cfg);
  }

  // -------- relational / edge-conditioned / attention
  {
    RelationalConfig cfg;
    cfg.num_relations = 2;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.activation = "tanh";
    LayerParams p = init_rgcn_params(cfg, seed + 101);
    std::vector<Tensor> params;
    for (auto& [n, t] : p.items) params.push_back(t);
    s.check("layer/rgcn",
            [&s, cfg, p] { return squash(rgcn_forward(cfg, p, s.g, s.g.node_features)); },
            std::move(params));
  }
  {
    EccConfig cfg;
    cfg.in_dim = kFeat;
    cfg.out_dim = 3;
    cfg.edge_hidden = 5;
    LayerParams p = init_ecc_params(cfg, kArcFeat, seed + 102);
    std::vector<Tensor> params;
    for (auto& [n, t] : p.items) params.push_back(t);
    s.check("layer/ecc",
            [&s, cfg, p] { return squash(ecc_forward(cfg, p, s.g, s.g.node_features)); },
            std::move(params));
  }
  for (auto merge : {AttentionConfig::Merge::concat, AttentionConfig::Merge::average}) {
    AttentionConfig cfg;
    cfg.num_heads = 2;
    cfg.in_dim = kFeat;
    cfg.head_dim = 3;
    cfg.merge = merge;
    cfg.activation = "tanh";
    LayerParams p = init_gat_params(cfg, seed + 103);
    std::vector<Tensor> params;
    for (auto& [n, t] : p.items) params.push_back(t);
    s.check(merge == AttentionConfig::Merge::concat ? "layer/gat_concat"
                                                    : "layer/gat_average",
            [&s, cfg, p] { return squash(gat_forward(cfg, p, s.g, s.g.node_features)); },
            std::move(params));
  }

  // -------- pooling
  {
    const int C = 3;
    LayerConfig inner_cfg;
    inner_cfg.variant = LayerConfig::Variant::gcn;
    inner_cfg.in_dim = kFeat;
    inner_cfg.out_dim = C;
    inner_cfg.activation = "identity";
    LayerParams ip = init_layer_params(inner_cfg, seed + 201);
    Tensor w0 = glorot(kFeat, kFeat, seed + 202);
    s.check("pool/diffpool",
            [&s, inner_cfg, ip, w0, C] {
              Tensor h = matmul(s.g.node_features, w0);
              InnerLayer inner = [&inner_cfg, &ip](const Graph& gg, const Tensor& hh) {
                return gcn_forward(inner_cfg, ip, gg, hh);
              };
              PoolOutput po = diffpool(inner, s.g, h, C);
              Tensor loss = add(squash(po.h), squash(po.dense_adj));
              return add(loss, po.aux_losses.at("entropy"));
            },
            {w0, ip.at("W")});
  }
  {
    Tensor p = glorot(kFeat, 1, seed + 203);
    Tensor w0 = glorot(kFeat, kFeat, seed + 204);
    s.check("pool/topk",
            [&s, p, w0] {
              Tensor h = matmul(s.g.node_features, w0);
              PoolOutput po = topk_pool(h, s.g, p, 0.5);
              return squash(po.h);
            },
            {p, w0});
  }
  {
    LayerConfig inner_cfg;
    inner_cfg.variant = LayerConfig::Variant::gcn;
    inner_cfg.in_dim = kFeat;
    inner_cfg.out_dim = 1;
    inner_cfg.activation = "identity";
    LayerParams ip = init_layer_params(inner_cfg, seed + 205);
    Tensor w0 = glorot(kFeat, kFeat, seed + 206);
    s.check("pool/sagpool",
            [&s, inner_cfg, ip, w0] {
              Tensor h = matmul(s.g.node_features, w0);
              InnerLayer inner = [&inner_cfg, &ip](const Graph& gg, const Tensor& hh) {
                return gcn_forward(inner_cfg, ip, gg, hh);
              };
              PoolOutput po = sagpool(inner, s.g, h, 0.5);
              return squash(po.h);
            },
            {w0, ip.at("W")});
  }
  {
    Tensor w = glorot(2 * kFeat, 1, seed + 207);
    Tensor b = Tensor::zeros({1, 1});
    Tensor w0 = glorot(kFeat, kFeat, seed + 208);
    s.check("pool/edgepool",
            [&s, w, b, w0] {
              Tensor h = matmul(s.g.node_features, w0);
              PoolOutput po = edgepool(w, b, s.g, h);
              return squash(po.h);
            },
            {w, b, w0});
  }
  {
    Tensor z = random_tensor(5, 4, s.rng);
    s.check("pool/entropy_loss",
            [z] { return entropy_loss(softmax_rows(z)); }, {z});
  }

  // -------- readouts
  {
    std::vector<int> n2g = {0, 0, 0, 1, 1, 1};
    for (auto mode : {ReadoutConfig::Mode::sum, ReadoutConfig::Mode::mean,
                      ReadoutConfig::Mode::max}) {
      ReadoutConfig cfg;
      cfg.mode = mode;
      cfg.in_dim = kFeat;
      Tensor w0 = glorot(kFeat, kFeat, seed + 301);
      std::string n = mode == ReadoutConfig::Mode::sum    ? "readout/sum"
                      : mode == ReadoutConfig::Mode::mean ? "readout/mean"
                                                          : "readout/max";
      s.check(n,
              [&s, cfg, w0, n2g] {
                Tensor h = matmul(s.g.node_features, w0);
                LayerParams none;
                return squash(readout(cfg, none, h, n2g, 2));
              },
              {w0});
    }
    {
      ReadoutConfig cfg;
      cfg.mode = ReadoutConfig::Mode::deepsets;
      cfg.in_dim = kFeat;
      cfg.inner_dim = 5;
      cfg.out_dim = 3;
      cfg.activation = "tanh";
      LayerParams p = init_readout_params(cfg, seed + 302);
      std::vector<Tensor> params;
      for (auto& [n, t] : p.items) params.push_back(t);
      s.check("readout/deepsets",
              [&s, cfg, p, n2g] {
                return squash(readout(cfg, p, s.g.node_features, n2g, 2));
              },
              std::move(params));
    }
  }

  // -------- losses
  {
    Tensor logits = random_tensor(4, 3, s.rng);
    std::vector<int> labels = {0, 2, 1, 0};
    s.check("loss/cross_entropy", [logits, labels] { return cross_entropy(logits, labels); },
            {logits});
  }
  {
    Tensor pred = random_tensor(4, 3, s.rng);
    Tensor target = random_tensor(4, 3, s.rng);
    s.check("loss/mse", [pred, target] { return mse(pred, target); }, {pred});
  }
  {
    Tensor logits = random_tensor(3, 3, s.rng);
    Tensor target = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 1, 0, 0, 1});
    s.check("loss/bce_with_logits",
            [logits, target] { return bce_with_logits_sum(logits, target); }, {logits});
  }
  {
    Tensor w0 = glorot(kFeat, 3, seed + 401);
    s.check("loss/link_reconstruction",
            [&s, w0] {
              return link_reconstruction_loss(s.g, matmul(s.g.node_features, w0));
            },
            {w0});
  }
  {
    Tensor hu = random_tensor(4, 3, s.rng);
    Tensor hv = random_tensor(4, 3, s.rng);
    Tensor target = Tensor::from({4, 1}, {1, 0, 1, 0});
    s.check("loss/edge_decoder",
            [hu, hv, target] {
              return bernoulli_nll_sum(edge_decoder_prob(hu, hv), target);
            },
            {hu, hv});
  }
  {
    Tensor w0 = glorot(kFeat, 3, seed + 402);
    s.check("loss/node_level_nll",
            [&s, w0] {
              return node_level_decoder_nll(matmul(s.g.node_features, w0), s.g);
            },
            {w0});
  }
  {
    const int k = kNodes;
    LayerParams p = init_graph_decoder_params(kFeat, 5, k, seed + 403);
    std::vector<Tensor> params;
    for (auto& [n, t] : p.items) params.push_back(t);
    std::vector<int> n2g(kNodes, 0);
    s.check("loss/graph_level_nll",
            [&s, p, k, n2g] {
              ReadoutConfig rc;
              rc.mode = ReadoutConfig::Mode::mean;
              rc.in_dim = kFeat;
              LayerParams none;
              Tensor hg = readout(rc, none, s.g.node_features, n2g, 1);
              return graph_level_nll(graph_level_decoder(p, hg, k), s.g);
            },
            std::move(params));
  }
  {
    GaussianParams q;
    q.mu = random_tensor(3, 4, s.rng);
    q.log_sigma = random_tensor(3, 4, s.rng, 0.5);
    s.check("loss/kl_gaussian", [q] { return kl_gaussian(q); }, {q.mu, q.log_sigma});
  }

  return s.out;
}

double grad_suite_worst(const std::vector<GradCheckEntry>& entries) {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_err);
  return worst;
}

}  // namespace gdn
