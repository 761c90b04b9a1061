#include "gdn/config.hpp"

#include <fstream>

#include <json.hpp>

#include "gdn/dataset.hpp"
#include "gdn/error.hpp"

namespace gdn {

Task task_from_string(const std::string& s) {
  if (s == "node_classification_transductive") return Task::node_classification_transductive;
  if (s == "node_classification_inductive") return Task::node_classification_inductive;
  if (s == "graph_classification") return Task::graph_classification;
  if (s == "graph_regression") return Task::graph_regression;
  if (s == "link_prediction") return Task::link_prediction;
  if (s == "autoencode") return Task::autoencode;
  throw usage_error("unknown task: " + s);
}

std::string task_to_string(Task t) {
  switch (t) {
    case Task::node_classification_transductive: return "node_classification_transductive";
    case Task::node_classification_inductive: return "node_classification_inductive";
    case Task::graph_classification: return "graph_classification";
    case Task::graph_regression: return "graph_regression";
    case Task::link_prediction: return "link_prediction";
    case Task::autoencode: return "autoencode";
  }
  return "?";
}

namespace {

Aggregator aggregator_from_string(const std::string& s) {
  if (s == "sum") return Aggregator::sum;
  if (s == "mean") return Aggregator::mean;
  if (s == "max") return Aggregator::max;
  throw usage_error("unknown aggregator: " + s);
}

NeighborhoodMode mode_from_string(const std::string& s) {
  if (s == "open") return NeighborhoodMode::open;
  if (s == "closed") return NeighborhoodMode::closed;
  throw usage_error("unknown neighborhood mode: " + s);
}

BlockSpec parse_block(const nlohmann::json& j) {
  BlockSpec b;
  const std::string type = j.at("type").get<std::string>();
  if (type == "generic" || type == "gcn" || type == "gin" || type == "sage_mean") {
    b.kind = type == "generic" ? BlockSpec::Kind::generic
             : type == "gcn"   ? BlockSpec::Kind::gcn
             : type == "gin"   ? BlockSpec::Kind::gin
                               : BlockSpec::Kind::sage_mean;
    b.layer.variant = type == "generic" ? LayerConfig::Variant::generic
                      : type == "gcn"   ? LayerConfig::Variant::gcn
                      : type == "gin"   ? LayerConfig::Variant::gin
                                        : LayerConfig::Variant::sage_mean;
    b.layer.out_dim = j.at("out_dim").get<int>();
    if (j.contains("activation")) b.layer.activation = j["activation"].get<std::string>();
    else if (type == "gcn") b.layer.activation = "relu";
    if (j.contains("aggregator"))
      b.layer.aggregator = aggregator_from_string(j["aggregator"].get<std::string>());
    if (j.contains("neighborhood"))
      b.layer.neighborhood = mode_from_string(j["neighborhood"].get<std::string>());
    if (j.contains("epsilon")) b.layer.gin_epsilon = j["epsilon"].get<double>();
    if (j.contains("epsilon_learnable"))
      b.layer.gin_epsilon_learnable = j["epsilon_learnable"].get<bool>();
    if (j.contains("hidden")) b.layer.gin_hidden = j["hidden"].get<int>();
  } else if (type == "rgcn") {
    b.kind = BlockSpec::Kind::rgcn;
    b.rel.out_dim = j.at("out_dim").get<int>();
    b.rel.num_relations = j.at("num_relations").get<int>();
    if (j.contains("relation_column"))
      b.rel.relation_column = j["relation_column"].get<int>();
    if (j.contains("activation")) b.rel.activation = j["activation"].get<std::string>();
  } else if (type == "ecc") {
    b.kind = BlockSpec::Kind::ecc;
    b.ecc.out_dim = j.at("out_dim").get<int>();
    if (j.contains("edge_hidden")) b.ecc.edge_hidden = j["edge_hidden"].get<int>();
    if (j.contains("activation")) b.ecc.activation = j["activation"].get<std::string>();
  } else if (type == "gat") {
    b.kind = BlockSpec::Kind::gat;
    b.gat.head_dim = j.at("head_dim").get<int>();
    if (j.contains("heads")) b.gat.num_heads = j["heads"].get<int>();
    if (j.contains("merge"))
      b.gat.merge = j["merge"].get<std::string>() == "average"
                        ? AttentionConfig::Merge::average
                        : AttentionConfig::Merge::concat;
    if (j.contains("leaky_slope")) b.gat.leaky_slope = j["leaky_slope"].get<double>();
    if (j.contains("activation")) b.gat.activation = j["activation"].get<std::string>();
    if (j.contains("neighborhood"))
      b.gat.neighborhood = mode_from_string(j["neighborhood"].get<std::string>());
  } else if (type == "diffpool") {
    b.kind = BlockSpec::Kind::diffpool;
    b.clusters = j.at("clusters").get<int>();
  } else if (type == "topk") {
    b.kind = BlockSpec::Kind::topk;
    b.ratio = j.at("ratio").get<double>();
  } else if (type == "sagpool") {
    b.kind = BlockSpec::Kind::sagpool;
    b.ratio = j.at("ratio").get<double>();
  } else if (type == "edgepool") {
    b.kind = BlockSpec::Kind::edgepool;
  } else {
    throw usage_error("unknown block type: " + type);
  }
  if (j.contains("fanout")) b.fanout = j["fanout"].get<int>();
  return b;
}

ReadoutConfig parse_readout(const nlohmann::json& j) {
  ReadoutConfig r;
  const std::string mode = j.value("mode", "sum");
  if (mode == "sum") r.mode = ReadoutConfig::Mode::sum;
  else if (mode == "mean") r.mode = ReadoutConfig::Mode::mean;
  else if (mode == "max") r.mode = ReadoutConfig::Mode::max;
  else if (mode == "deepsets") r.mode = ReadoutConfig::Mode::deepsets;
  else throw usage_error("unknown readout mode: " + mode);
  if (j.contains("inner_dim")) r.inner_dim = j["inner_dim"].get<int>();
  if (j.contains("out_dim")) r.out_dim = j["out_dim"].get<int>();
  if (j.contains("activation")) r.activation = j["activation"].get<std::string>();
  return r;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw usage_error("bad config JSON in " + path + ": " + e.what());
  }
  ExperimentConfig cfg;
  cfg.task = task_from_string(j.at("task").get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("mode")) cfg.mode = j["mode"].get<std::string>();
  if (cfg.mode != "end_to_end" && cfg.mode != "constructive")
    throw usage_error("training mode must be end_to_end or constructive");
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("optimizer")) cfg.optimizer = j["optimizer"].get<std::string>();
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw usage_error("optimizer must be adam or sgd");
  if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
  if (j.contains("aux_weight")) cfg.aux_weight = j["aux_weight"].get<double>();
  if (j.contains("data")) cfg.data_path = j["data"].get<std::string>();
  if (j.contains("generator")) {
    GeneratorSpec g;
    const auto& gj = j["generator"];
    g.kind = gj.at("kind").get<std::string>();
    if (gj.contains("n_per_block")) g.n_per_block = gj["n_per_block"].get<int>();
    if (gj.contains("p_in")) g.p_in = gj["p_in"].get<double>();
    if (gj.contains("p_out")) g.p_out = gj["p_out"].get<double>();
    if (gj.contains("num_graphs")) g.num_graphs = gj["num_graphs"].get<int>();
    if (gj.contains("min_n")) g.min_n = gj["min_n"].get<int>();
    if (gj.contains("max_n")) g.max_n = gj["max_n"].get<int>();
    cfg.generator = g;
  }
  if (cfg.data_path.empty() == !cfg.generator.has_value())
    throw usage_error("config needs exactly one of \"data\" or \"generator\"");
  for (const auto& bj : j.at("layers")) cfg.blocks.push_back(parse_block(bj));
  if (j.contains("readout")) cfg.readout = parse_readout(j["readout"]);
  if (j.contains("num_classes")) cfg.num_classes = j["num_classes"].get<int>();
  auto mask = [&](const char* key) {
    std::vector<int> out;
    if (j.contains(key))
      for (const auto& v : j[key]) out.push_back(v.get<int>());
    return out;
  };
  cfg.train_mask = mask("train_mask");
  cfg.val_mask = mask("val_mask");
  cfg.test_mask = mask("test_mask");
  if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
  if (j.contains("holdout_fraction"))
    cfg.holdout_fraction = j["holdout_fraction"].get<double>();
  return cfg;
}

std::vector<Graph> load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data_path.empty()) return load_jsonl(cfg.data_path);
  const GeneratorSpec& g = *cfg.generator;
  if (g.kind == "two_community")
    return {gen_two_community(g.n_per_block, g.p_in, g.p_out, cfg.seed)};
  if (g.kind == "cycles_vs_paths")
    return gen_cycles_vs_paths(g.num_graphs, g.min_n, g.max_n, cfg.seed);
  throw usage_error("unknown generator kind: " + g.kind);
}

Model build_model(const ExperimentConfig& cfg, int feature_dim,
                  int arc_feature_dim, int head_out) {
  if (feature_dim <= 0)
    throw usage_error("dataset has no node features; layers need an input width");
  Model m;
  int width = feature_dim;
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    BlockSpec spec = cfg.blocks[i];
    spec.set_in_dim(width);
    m.blocks.push_back(make_block(spec, arc_feature_dim,
                                  mix_seed(cfg.seed, 100 + i)));
    width = spec.out_dim();
  }
  m.readout_cfg = cfg.readout;
  m.readout_cfg.in_dim = width;
  if (m.readout_cfg.mode == ReadoutConfig::Mode::deepsets) {
    if (m.readout_cfg.inner_dim == 0) m.readout_cfg.inner_dim = width;
    if (m.readout_cfg.out_dim == 0) m.readout_cfg.out_dim = width;
  } else {
    m.readout_cfg.out_dim = width;
  }
  m.readout_params = init_readout_params(m.readout_cfg, mix_seed(cfg.seed, 900));
  if (head_out > 0) {
    const bool graph_level = cfg.task == Task::graph_classification ||
                             cfg.task == Task::graph_regression;
    const int head_in = graph_level ? m.readout_cfg.out_dim : width;
    m.head.add("W", glorot(head_in, head_out, mix_seed(cfg.seed, 901)));
    m.head.add("b", Tensor::zeros({1, head_out}));
  }
  return m;
}

}  // namespace gdn
