#include "gdn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gdn/error.hpp"
#include "gdn/optim.hpp"
#include "gdn/readout.hpp"

namespace gdn {

namespace {

// ------------------------------------------------------------ task data

struct TaskData {
  std::vector<Graph> graphs;

  // graph-level tasks
  std::vector<int> labels;  // classification label per graph
  int num_classes = 0;
  int target_width = 0;  // regression target width
  std::vector<int> train_ids;
  std::vector<int> test_ids;

  // node-level tasks
  std::vector<std::vector<int>> node_labels;  // per graph, per node

  // link prediction
  Graph train_graph;
  std::vector<std::pair<int, int>> held_pos;
  std::vector<std::pair<int, int>> held_neg;
  std::vector<std::pair<int, int>> train_pos;
  std::vector<std::pair<int, int>> train_neg;
};

std::vector<int> labels_from_node_targets(const Graph& g) {
  if (!g.node_targets)
    throw usage_error("node classification requires node targets in the data");
  std::vector<int> out;
  out.reserve(g.node_targets->size());
  for (double v : *g.node_targets) {
    long k = std::lround(v);
    if (std::abs(v - static_cast<double>(k)) > 1e-9 || k < 0)
      throw usage_error("node targets must be non-negative class ids");
    out.push_back(static_cast<int>(k));
  }
  return out;
}

void prefix_split(int n, double train_fraction, std::vector<int>& train_ids,
                  std::vector<int>& test_ids) {
  if (train_fraction <= 0.0 || train_fraction > 1.0)
    throw usage_error("train_fraction must lie in (0, 1]");
  int ntrain = static_cast<int>(
      std::ceil(train_fraction * static_cast<double>(n) - 1e-12));
  ntrain = std::min(std::max(ntrain, 1), n);
  train_ids.clear();
  test_ids.clear();
  for (int i = 0; i < n; ++i)
    (i < ntrain ? train_ids : test_ids).push_back(i);
}

// Collects each undirected edge once as (u, v) with u < v.
std::vector<std::pair<int, int>> undirected_pairs(const Graph& g) {
  std::set<std::pair<int, int>> seen;
  for (const Arc& a : g.arcs) {
    int u = std::min(a.src, a.dst), v = std::max(a.src, a.dst);
    if (u != v) seen.insert({u, v});
  }
  return {seen.begin(), seen.end()};
}

std::vector<std::pair<int, int>> sample_negative_pairs(
    int n, int count, const std::set<std::pair<int, int>>& forbidden,
    std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> out;
  std::set<std::pair<int, int>> used;
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::int64_t attempts = 0;
  const std::int64_t limit = 1000LL * std::max(count, 1) + 10000;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > limit)
      throw usage_error("could not sample enough non-edges for evaluation");
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    std::pair<int, int> p{std::min(u, v), std::max(u, v)};
    if (forbidden.count(p) || used.count(p)) continue;
    used.insert(p);
    out.push_back(p);
  }
  return out;
}

TaskData prepare(const ExperimentConfig& cfg) {
  TaskData d;
  d.graphs = load_dataset(cfg);
  if (d.graphs.empty()) throw usage_error("dataset is empty");

  switch (cfg.task) {
    case Task::graph_classification: {
      int max_label = -1;
      for (const Graph& g : d.graphs) {
        if (!g.graph_target || g.graph_target->empty())
          throw usage_error("graph classification requires graph targets");
        double v = (*g.graph_target)[0];
        long k = std::lround(v);
        if (std::abs(v - static_cast<double>(k)) > 1e-9 || k < 0)
          throw usage_error("graph targets must be non-negative class ids");
        d.labels.push_back(static_cast<int>(k));
        max_label = std::max(max_label, static_cast<int>(k));
      }
      d.num_classes = cfg.num_classes > 0 ? cfg.num_classes : max_label + 1;
      if (d.num_classes < 2)
        throw usage_error("classification needs at least two classes");
      prefix_split(static_cast<int>(d.graphs.size()), cfg.train_fraction,
                   d.train_ids, d.test_ids);
      break;
    }
    case Task::graph_regression: {
      for (const Graph& g : d.graphs) {
        if (!g.graph_target || g.graph_target->empty())
          throw usage_error("graph regression requires graph targets");
        int w = static_cast<int>(g.graph_target->size());
        if (d.target_width == 0) d.target_width = w;
        if (w != d.target_width)
          throw usage_error("graph targets must share one width");
      }
      prefix_split(static_cast<int>(d.graphs.size()), cfg.train_fraction,
                   d.train_ids, d.test_ids);
      break;
    }
    case Task::node_classification_transductive: {
      const Graph& g = d.graphs.front();
      d.node_labels.push_back(labels_from_node_targets(g));
      if (cfg.train_mask.empty())
        throw usage_error("transductive training requires a train_mask");
      auto check_mask = [&](const std::vector<int>& mask, const char* name) {
        for (int v : mask)
          if (v < 0 || v >= g.num_nodes)
            throw usage_error(std::string(name) + " references a missing node");
      };
      check_mask(cfg.train_mask, "train_mask");
      check_mask(cfg.val_mask, "val_mask");
      check_mask(cfg.test_mask, "test_mask");
      int max_label = 0;
      for (int v : d.node_labels[0]) max_label = std::max(max_label, v);
      d.num_classes = cfg.num_classes > 0 ? cfg.num_classes : max_label + 1;
      break;
    }
    case Task::node_classification_inductive: {
      int max_label = 0;
      for (const Graph& g : d.graphs) {
        d.node_labels.push_back(labels_from_node_targets(g));
        for (int v : d.node_labels.back()) max_label = std::max(max_label, v);
      }
      d.num_classes = cfg.num_classes > 0 ? cfg.num_classes : max_label + 1;
      prefix_split(static_cast<int>(d.graphs.size()), cfg.train_fraction,
                   d.train_ids, d.test_ids);
      break;
    }
    case Task::link_prediction: {
      Graph g = d.graphs.front();
      if (!g.symmetrized) g = symmetrize(g);
      auto pairs = undirected_pairs(g);
      if (pairs.size() < 2)
        throw usage_error("link prediction needs at least two edges");
      std::mt19937_64 rng(mix_seed(static_cast<std::uint64_t>(cfg.seed), 777));
      std::shuffle(pairs.begin(), pairs.end(), rng);
      int e = static_cast<int>(pairs.size());
      int nh = static_cast<int>(
          std::ceil(cfg.holdout_fraction * static_cast<double>(e) - 1e-12));
      nh = std::min(std::max(nh, 1), e - 1);
      d.held_pos.assign(pairs.begin(), pairs.begin() + nh);
      d.train_pos.assign(pairs.begin() + nh, pairs.end());

      std::vector<Arc> train_arcs;
      for (auto& p : d.train_pos) {
        train_arcs.push_back({p.first, p.second});
        train_arcs.push_back({p.second, p.first});
      }
      Graph tg;
      tg.num_nodes = g.num_nodes;
      tg.arcs = std::move(train_arcs);
      tg.node_features = g.node_features;
      tg.symmetrized = true;
      d.train_graph = build_graph(std::move(tg));

      std::set<std::pair<int, int>> all_edges(pairs.begin(), pairs.end());
      d.held_neg = sample_negative_pairs(g.num_nodes, nh, all_edges, rng);
      std::set<std::pair<int, int>> forbidden = all_edges;
      forbidden.insert(d.held_neg.begin(), d.held_neg.end());
      d.train_neg = sample_negative_pairs(
          g.num_nodes, static_cast<int>(d.train_pos.size()), forbidden, rng);
      break;
    }
    case Task::autoencode:
      break;
  }
  return d;
}

// ------------------------------------------------------------ small helpers

int argmax_row(const Tensor& t, int row) {
  int best = 0;
  for (int c = 1; c < t.cols(); ++c)
    if (t.at(row, c) > t.at(row, best)) best = c;
  return best;
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  int correct = 0;
  for (int r = 0; r < logits.rows(); ++r)
    if (argmax_row(logits, r) == labels[static_cast<size_t>(r)]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

Tensor apply_linear(const Tensor& x, const LayerParams& head) {
  if (head.items.empty()) return x;
  return add(matmul(x, head.at("W")), head.at("b"));
}

double pair_score(const Tensor& h, int u, int v) {
  double z = 0.0;
  for (int k = 0; k < h.cols(); ++k) z += h.at(u, k) * h.at(v, k);
  return z;  // logit; sigmoid(z) >= 0.5 iff z >= 0
}

double softplus(double z) {
  // log(1 + exp(z)), stable for large |z|
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct Optimizer {
  std::string kind;
  Sgd sgd{0.01};
  Adam adam{};
  explicit Optimizer(const ExperimentConfig& cfg)
      : kind(cfg.optimizer), sgd(cfg.lr), adam(cfg.lr) {}
  void step(std::vector<ParamRef>& params) {
    if (kind == "sgd")
      sgd.step(params);
    else
      adam.step(params);
  }
};

struct SplitEval {
  double loss = 0.0;
  double metric = 0.0;
};

// ------------------------------------------------------------ forward plumbing

// Node states for one graph at the requested depth. `sample_seed` enables
// neighbor sampling on blocks that request it (training only).
Tensor encode(Model& m, const Graph& g, int num_blocks,
              std::uint64_t* sample_seed) {
  return m.node_forward(g, g.node_features, num_blocks, sample_seed);
}

// Graph embeddings for a list of graphs. Uses one batched forward when no
// pooling block is present, otherwise runs the graphs one at a time.
Tensor embed_graphs(Model& m, const std::vector<Graph>& graphs,
                    const std::vector<int>& ids, int lo, int hi,
                    int num_blocks, std::uint64_t* sample_seed,
                    std::map<std::string, Tensor>* aux) {
  if (m.has_pooling()) {
    std::vector<Tensor> embs;
    for (int i = lo; i < hi; ++i) {
      auto fw = m.graph_forward(graphs[static_cast<size_t>(ids[static_cast<size_t>(i)])],
                                num_blocks, sample_seed);
      embs.push_back(fw.graph_embedding);
      if (aux)
        for (auto& [k, v] : fw.aux_losses) {
          auto it = aux->find(k);
          if (it == aux->end())
            aux->emplace(k, v);
          else
            it->second = add(it->second, v);
        }
    }
    return concat_rows(embs);
  }
  std::vector<Graph> chunk;
  for (int i = lo; i < hi; ++i)
    chunk.push_back(graphs[static_cast<size_t>(ids[static_cast<size_t>(i)])]);
  BatchedGraph b = make_batch(chunk);
  auto fw = m.batch_forward(b, num_blocks, sample_seed);
  return fw.graph_embedding;
}

Tensor stack_targets(const std::vector<Graph>& graphs,
                     const std::vector<int>& ids, int lo, int hi, int width) {
  Tensor t = Tensor::zeros({hi - lo, width});
  for (int i = lo; i < hi; ++i) {
    const auto& y = *graphs[static_cast<size_t>(ids[static_cast<size_t>(i)])].graph_target;
    for (int c = 0; c < width; ++c) t.at(i - lo, c) = y[static_cast<size_t>(c)];
  }
  return t;
}

// ------------------------------------------------------------ split evaluation

SplitEval eval_graph_task(Model& m, const LayerParams& head,
                          const ExperimentConfig& cfg, const TaskData& d,
                          const std::vector<int>& ids, int num_blocks) {
  SplitEval ev;
  if (ids.empty()) return ev;
  double loss_sum = 0.0;
  double metric_sum = 0.0;
  int total = static_cast<int>(ids.size());
  int bs = std::max(cfg.batch_size, 1);
  for (int lo = 0; lo < total; lo += bs) {
    int hi = std::min(lo + bs, total);
    Tensor emb = embed_graphs(m, d.graphs, ids, lo, hi, num_blocks,
                              nullptr, nullptr);
    Tensor out = apply_linear(emb, head);
    if (cfg.task == Task::graph_classification) {
      std::vector<int> lab;
      for (int i = lo; i < hi; ++i)
        lab.push_back(d.labels[static_cast<size_t>(ids[static_cast<size_t>(i)])]);
      loss_sum += cross_entropy(out, lab).item() * static_cast<double>(hi - lo);
      for (int r = 0; r < out.rows(); ++r)
        if (argmax_row(out, r) == lab[static_cast<size_t>(r)]) metric_sum += 1.0;
    } else {
      Tensor y = stack_targets(d.graphs, ids, lo, hi, d.target_width);
      loss_sum += mse(out, y).item() * static_cast<double>(hi - lo);
      for (int r = 0; r < out.rows(); ++r) {
        double err = 0.0;
        for (int c = 0; c < out.cols(); ++c)
          err += std::abs(out.at(r, c) - y.at(r, c));
        metric_sum += err / static_cast<double>(std::max(out.cols(), 1));
      }
    }
  }
  ev.loss = loss_sum / static_cast<double>(total);
  ev.metric = metric_sum / static_cast<double>(total);
  return ev;
}

SplitEval eval_node_mask(Model& m, const LayerParams& head, const TaskData& d,
                         const std::vector<int>& mask, int num_blocks) {
  SplitEval ev;
  if (mask.empty()) return ev;
  const Graph& g = d.graphs.front();
  Tensor logits = apply_linear(encode(m, g, num_blocks, nullptr), head);
  Tensor sel = gather_rows(logits, mask);
  std::vector<int> lab;
  for (int v : mask) lab.push_back(d.node_labels[0][static_cast<size_t>(v)]);
  ev.loss = cross_entropy(sel, lab).item();
  ev.metric = accuracy(sel, lab);
  return ev;
}

SplitEval eval_node_graphs(Model& m, const LayerParams& head, const TaskData& d,
                           const std::vector<int>& ids, int num_blocks) {
  SplitEval ev;
  if (ids.empty()) return ev;
  double loss_sum = 0.0;
  int correct = 0, total = 0;
  for (int id : ids) {
    const Graph& g = d.graphs[static_cast<size_t>(id)];
    Tensor logits = apply_linear(encode(m, g, num_blocks, nullptr), head);
    const std::vector<int>& lab = d.node_labels[static_cast<size_t>(id)];
    loss_sum += cross_entropy(logits, lab).item() * static_cast<double>(g.num_nodes);
    for (int r = 0; r < logits.rows(); ++r)
      if (argmax_row(logits, r) == lab[static_cast<size_t>(r)]) ++correct;
    total += g.num_nodes;
  }
  ev.loss = loss_sum / static_cast<double>(std::max(total, 1));
  ev.metric = static_cast<double>(correct) / static_cast<double>(std::max(total, 1));
  return ev;
}

SplitEval eval_pairs(const Tensor& h,
                     const std::vector<std::pair<int, int>>& pos,
                     const std::vector<std::pair<int, int>>& neg) {
  SplitEval ev;
  int total = static_cast<int>(pos.size() + neg.size());
  if (total == 0) return ev;
  double nll = 0.0;
  int correct = 0;
  for (auto& p : pos) {
    double z = pair_score(h, p.first, p.second);
    nll += softplus(-z);  // -log sigmoid(z)
    if (z >= 0.0) ++correct;
  }
  for (auto& p : neg) {
    double z = pair_score(h, p.first, p.second);
    nll += softplus(z);  // -log(1 - sigmoid(z))
    if (z < 0.0) ++correct;
  }
  ev.loss = nll / static_cast<double>(total);
  ev.metric = static_cast<double>(correct) / static_cast<double>(total);
  return ev;
}

SplitEval eval_autoencode(Model& m, const TaskData& d, int num_blocks) {
  const Graph& g = d.graphs.front();
  Tensor h = encode(m, g, num_blocks, nullptr);
  SplitEval ev;
  ev.loss = node_level_decoder_nll(h, g).item();
  Tensor a = dense_adjacency(g);
  int correct = 0;
  int total = g.num_nodes * g.num_nodes;
  for (int u = 0; u < g.num_nodes; ++u)
    for (int v = 0; v < g.num_nodes; ++v) {
      double z = pair_score(h, u, v);
      bool present = a.at(u, v) > 0.5;
      if ((z >= 0.0) == present) ++correct;
    }
  ev.metric = total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                        : 0.0;
  return ev;
}

void push_rows(std::vector<EpochRow>& rows, int epoch,
               const std::vector<std::pair<std::string, SplitEval>>& evs) {
  for (auto& [split, ev] : evs)
    rows.push_back({epoch, split, ev.loss, ev.metric});
}

// Evaluates every populated split at the given depth and appends rows.
void evaluate_epoch(Model& m, const LayerParams& head,
                    const ExperimentConfig& cfg, const TaskData& d,
                    int num_blocks, int epoch, std::vector<EpochRow>& rows) {
  std::vector<std::pair<std::string, SplitEval>> evs;
  switch (cfg.task) {
    case Task::graph_classification:
    case Task::graph_regression:
      evs.emplace_back("train",
                       eval_graph_task(m, head, cfg, d, d.train_ids, num_blocks));
      if (!d.test_ids.empty())
        evs.emplace_back("test",
                         eval_graph_task(m, head, cfg, d, d.test_ids, num_blocks));
      break;
    case Task::node_classification_transductive:
      evs.emplace_back("train",
                       eval_node_mask(m, head, d, cfg.train_mask, num_blocks));
      if (!cfg.val_mask.empty())
        evs.emplace_back("val",
                         eval_node_mask(m, head, d, cfg.val_mask, num_blocks));
      if (!cfg.test_mask.empty())
        evs.emplace_back("test",
                         eval_node_mask(m, head, d, cfg.test_mask, num_blocks));
      break;
    case Task::node_classification_inductive:
      evs.emplace_back("train",
                       eval_node_graphs(m, head, d, d.train_ids, num_blocks));
      if (!d.test_ids.empty())
        evs.emplace_back("test",
                         eval_node_graphs(m, head, d, d.test_ids, num_blocks));
      break;
    case Task::link_prediction: {
      Tensor h = encode(m, d.train_graph, num_blocks, nullptr);
      SplitEval tr = eval_pairs(h, d.train_pos, d.train_neg);
      tr.loss = node_level_decoder_nll(h, d.train_graph).item();
      evs.emplace_back("train", tr);
      evs.emplace_back("test", eval_pairs(h, d.held_pos, d.held_neg));
      break;
    }
    case Task::autoencode:
      evs.emplace_back("train", eval_autoencode(m, d, num_blocks));
      break;
  }
  push_rows(rows, epoch, evs);
}

// ------------------------------------------------------------ training steps

Tensor weighted_aux(const std::map<std::string, Tensor>& aux, double weight) {
  Tensor acc = Tensor::scalar(0.0);
  bool any = false;
  for (auto& [k, v] : aux) {
    acc = any ? add(acc, v) : v;
    any = true;
  }
  if (!any) return Tensor::scalar(0.0);
  return scale(acc, weight);
}

void check_finite(double loss, int epoch) {
  if (!std::isfinite(loss))
    throw numeric_error("training loss became non-finite at epoch " +
                        std::to_string(epoch));
}

// Runs one optimization epoch; returns nothing (rows come from evaluate_epoch).
void train_one_epoch(Model& m, const LayerParams& head,
                     const ExperimentConfig& cfg, const TaskData& d,
                     int num_blocks, std::vector<ParamRef>& trainable,
                     Optimizer& opt, std::uint64_t* sample_seed, int epoch) {
  switch (cfg.task) {
    case Task::graph_classification:
    case Task::graph_regression: {
      int total = static_cast<int>(d.train_ids.size());
      int bs = std::max(cfg.batch_size, 1);
      for (int lo = 0; lo < total; lo += bs) {
        int hi = std::min(lo + bs, total);
        Tape tape;
        std::map<std::string, Tensor> aux;
        Tensor emb = embed_graphs(m, d.graphs, d.train_ids, lo, hi, num_blocks,
                                  sample_seed, &aux);
        Tensor out = apply_linear(emb, head);
        Tensor loss;
        if (cfg.task == Task::graph_classification) {
          std::vector<int> lab;
          for (int i = lo; i < hi; ++i)
            lab.push_back(
                d.labels[static_cast<size_t>(d.train_ids[static_cast<size_t>(i)])]);
          loss = cross_entropy(out, lab);
        } else {
          Tensor y = stack_targets(d.graphs, d.train_ids, lo, hi, d.target_width);
          loss = mse(out, y);
        }
        if (cfg.aux_weight != 0.0 && !aux.empty())
          loss = add(loss, weighted_aux(aux, cfg.aux_weight));
        check_finite(loss.item(), epoch);
        zero_grads(trainable);
        tape.backward(loss);
        opt.step(trainable);
      }
      break;
    }
    case Task::node_classification_transductive: {
      const Graph& g = d.graphs.front();
      Tape tape;
      Tensor logits = apply_linear(encode(m, g, num_blocks, sample_seed), head);
      Tensor sel = gather_rows(logits, cfg.train_mask);
      std::vector<int> lab;
      for (int v : cfg.train_mask)
        lab.push_back(d.node_labels[0][static_cast<size_t>(v)]);
      Tensor loss = cross_entropy(sel, lab);
      check_finite(loss.item(), epoch);
      zero_grads(trainable);
      tape.backward(loss);
      opt.step(trainable);
      break;
    }
    case Task::node_classification_inductive: {
      for (int id : d.train_ids) {
        const Graph& g = d.graphs[static_cast<size_t>(id)];
        Tape tape;
        Tensor logits = apply_linear(encode(m, g, num_blocks, sample_seed), head);
        Tensor loss = cross_entropy(logits, d.node_labels[static_cast<size_t>(id)]);
        check_finite(loss.item(), epoch);
        zero_grads(trainable);
        tape.backward(loss);
        opt.step(trainable);
      }
      break;
    }
    case Task::link_prediction: {
      Tape tape;
      Tensor h = encode(m, d.train_graph, num_blocks, sample_seed);
      Tensor loss = node_level_decoder_nll(h, d.train_graph);
      check_finite(loss.item(), epoch);
      zero_grads(trainable);
      tape.backward(loss);
      opt.step(trainable);
      break;
    }
    case Task::autoencode: {
      const Graph& g = d.graphs.front();
      Tape tape;
      Tensor h = encode(m, g, num_blocks, sample_seed);
      Tensor loss = node_level_decoder_nll(h, g);
      check_finite(loss.item(), epoch);
      zero_grads(trainable);
      tape.backward(loss);
      opt.step(trainable);
      break;
    }
  }
}

int head_width(const ExperimentConfig& cfg, const TaskData& d) {
  switch (cfg.task) {
    case Task::graph_classification:
    case Task::node_classification_transductive:
    case Task::node_classification_inductive:
      return d.num_classes;
    case Task::graph_regression:
      return d.target_width;
    case Task::link_prediction:
    case Task::autoencode:
      return 0;  // raw embeddings feed the decoder
  }
  return 0;
}

bool graph_level(Task t) {
  return t == Task::graph_classification || t == Task::graph_regression;
}

std::string summary_json(const ExperimentConfig& cfg,
                         const std::vector<EpochRow>& rows, int total_epochs) {
  nlohmann::json j;
  j["task"] = task_to_string(cfg.task);
  j["mode"] = cfg.mode;
  j["seed"] = cfg.seed;
  j["epochs"] = total_epochs;
  nlohmann::json splits = nlohmann::json::object();
  int last = -1;
  for (const auto& r : rows) last = std::max(last, r.epoch);
  for (const auto& r : rows)
    if (r.epoch == last) {
      splits[r.split]["loss"] = r.loss;
      splits[r.split]["metric"] = r.metric;
    }
  j["final"] = splits;
  return j.dump(2) + "\n";
}

}  // namespace

// ------------------------------------------------------------ public entry

TrainResult train(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();

  TaskData d = prepare(cfg);
  const Graph& g0 =
      cfg.task == Task::link_prediction ? d.train_graph : d.graphs.front();
  int fdim = g0.feature_dim();
  int adim = g0.arc_feature_dim();

  TrainResult res;
  res.model = build_model(cfg, fdim, adim, head_width(cfg, d));
  Model& m = res.model;

  if (m.has_pooling() && !graph_level(cfg.task))
    throw usage_error("pooling blocks only apply to graph-level tasks");

  std::uint64_t sample_ctr = mix_seed(static_cast<std::uint64_t>(cfg.seed), 555);

  if (cfg.mode == "end_to_end") {
    auto params = m.parameters();
    for (auto& p : params) p.tensor.set_requires_grad(true);
    Optimizer opt(cfg);
    for (int e = 0; e < cfg.epochs; ++e) {
      train_one_epoch(m, m.head, cfg, d, -1, params, opt, &sample_ctr, e);
      evaluate_epoch(m, m.head, cfg, d, -1, e, res.rows);
    }
  } else {  // constructive
    if (m.has_pooling())
      throw usage_error("constructive mode does not support pooling blocks");
    if (graph_level(cfg.task) && m.readout_cfg.mode == ReadoutConfig::Mode::deepsets)
      throw usage_error("constructive mode requires a sum, mean, or max readout");
    int stages = static_cast<int>(m.blocks.size());
    int full_head = head_width(cfg, d);
    int epoch = 0;
    for (int s = 0; s < stages; ++s) {
      // Freeze everything, then re-enable the current block.
      for (auto& p : m.parameters()) p.tensor.set_requires_grad(false);
      auto stage_params = m.block_parameters(s);
      for (auto& p : stage_params) p.tensor.set_requires_grad(true);

      LayerParams stage_head;
      if (full_head > 0) {
        // sum/mean/max readouts are parameter-free, so the stage embedding
        // width equals the stage block's output width for every task
        int in = m.blocks[static_cast<size_t>(s)].spec.out_dim();
        std::uint64_t hs =
            mix_seed(static_cast<std::uint64_t>(cfg.seed), 2000 + static_cast<std::uint64_t>(s));
        stage_head.add("W", glorot(in, full_head, hs));
        stage_head.add("b", Tensor::zeros({1, full_head}));
        stage_head.at("W").set_requires_grad(true);
        stage_head.at("b").set_requires_grad(true);
        stage_params.push_back({"head.W", stage_head.at("W")});
        stage_params.push_back({"head.b", stage_head.at("b")});
      }

      Optimizer opt(cfg);
      for (int e = 0; e < cfg.epochs; ++e, ++epoch) {
        train_one_epoch(m, stage_head, cfg, d, s + 1, stage_params, opt,
                        &sample_ctr, epoch);
        evaluate_epoch(m, stage_head, cfg, d, s + 1, epoch, res.rows);
      }
      if (s == stages - 1) m.head = stage_head;
    }
    for (auto& p : m.parameters()) p.tensor.set_requires_grad(true);
  }

  res.summary_json = summary_json(cfg, res.rows, cfg.epochs *
      (cfg.mode == "constructive" ? static_cast<int>(m.blocks.size()) : 1));
  auto t1 = std::chrono::steady_clock::now();
  res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  return res;
}

std::string evaluate(const ExperimentConfig& cfg, Model& m) {
  TaskData d = prepare(cfg);
  std::vector<EpochRow> rows;
  evaluate_epoch(m, m.head, cfg, d, -1, 0, rows);
  return summary_json(cfg, rows, 0);
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochRow>& rows) {
  std::ofstream out(path);
  if (!out) throw usage_error("cannot open " + path + " for writing");
  out << "epoch,split,loss,metric\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.split << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.metric);
    out << buf << '\n';
  }
}

}  // namespace gdn
