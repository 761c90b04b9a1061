#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "gdn/config.hpp"
#include "gdn/dataset.hpp"
#include "gdn/error.hpp"
#include "gdn/train.hpp"

using namespace gdn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "gdn_harness_tests";
  fs::create_directories(d);
  return d;
}

ExperimentConfig tiny_classification(int num_graphs, int epochs) {
  ExperimentConfig cfg;
  cfg.task = Task::graph_classification;
  cfg.seed = 5;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.lr = 0.02;
  GeneratorSpec gen;
  gen.kind = "cycles_vs_paths";
  gen.num_graphs = num_graphs;
  gen.min_n = 6;
  gen.max_n = 9;
  cfg.generator = gen;

  BlockSpec b;
  b.kind = BlockSpec::Kind::gin;
  b.layer.variant = LayerConfig::Variant::gin;
  b.layer.out_dim = 8;
  b.layer.gin_hidden = 8;
  b.layer.activation = "relu";
  cfg.blocks = {b};
  cfg.readout.mode = ReadoutConfig::Mode::sum;
  cfg.train_fraction = 0.75;
  return cfg;
}

bool params_equal(std::vector<ParamRef> a, std::vector<ParamRef> b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name) return false;
    if (a[i].tensor.data() != b[i].tensor.data()) return false;
  }
  return true;
}

std::string write_json(const std::string& name, const std::string& body) {
  fs::path p = temp_dir() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

}  // namespace

TEST_CASE("sgd with a zero learning rate never moves the parameters") {
  ExperimentConfig cfg = tiny_classification(8, 1);
  cfg.optimizer = "sgd";
  cfg.lr = 0.0;
  TrainResult one = train(cfg);
  cfg.epochs = 4;
  TrainResult four = train(cfg);
  CHECK(params_equal(one.model.parameters(), four.model.parameters()));
  // and the frozen model scores every epoch identically
  for (const EpochRow& r : four.rows) {
    if (r.split == "train") {
      CHECK(r.loss == four.rows[0].loss);
    }
  }
}

TEST_CASE("adam overfits a tiny corpus") {
  ExperimentConfig cfg = tiny_classification(16, 120);
  TrainResult res = train(cfg);
  const EpochRow* last_train = nullptr;
  for (const EpochRow& r : res.rows)
    if (r.split == "train") last_train = &r;
  REQUIRE(last_train != nullptr);
  CHECK(last_train->metric == doctest::Approx(1.0));
  CHECK(last_train->loss < 0.05);
}

TEST_CASE("constructive stages leave earlier blocks frozen") {
  ExperimentConfig base = tiny_classification(10, 3);
  base.mode = "constructive";
  base.seed = 11;

  TrainResult solo = train(base);  // one block, one stage

  ExperimentConfig two = base;
  BlockSpec b2 = two.blocks[0];
  b2.layer.out_dim = 5;
  b2.layer.gin_hidden = 5;
  two.blocks.push_back(b2);
  TrainResult both = train(two);

  // stage 1 runs the same dynamics in both configs; stage 2 must not touch
  // block 0, so its parameters agree bit for bit
  auto pick_block0 = [](Model& m) {
    std::vector<ParamRef> out;
    for (auto& p : m.parameters())
      if (p.name.rfind("block0.", 0) == 0) out.push_back(p);
    return out;
  };
  CHECK(params_equal(pick_block0(solo.model), pick_block0(both.model)));

  // continuous zero-based epoch numbering across stages: 2 stages x 3 epochs
  int max_epoch = 0;
  for (const EpochRow& r : both.rows) max_epoch = std::max(max_epoch, r.epoch);
  CHECK(max_epoch == 5);
}

TEST_CASE("a batch forward scores exactly like per-graph forwards") {
  ExperimentConfig cfg = tiny_classification(6, 1);
  std::vector<Graph> graphs = load_dataset(cfg);
  Model m = build_model(cfg, graphs[0].feature_dim(), 0, 2);

  BatchedGraph batch = make_batch(graphs);
  Model::Forward fb = m.batch_forward(batch);
  std::vector<int> targets;
  for (const Graph& g : graphs)
    targets.push_back(static_cast<int>(std::lround((*g.graph_target)[0])));
  double batched = cross_entropy(fb.output, targets).item();

  double mean = 0.0;
  for (size_t i = 0; i < graphs.size(); ++i) {
    Model::Forward f1 = m.graph_forward(graphs[i]);
    mean += cross_entropy(f1.output, {targets[i]}).item();
  }
  mean /= static_cast<double>(graphs.size());
  CHECK(batched == doctest::Approx(mean).epsilon(1e-9));
}

TEST_CASE("checkpoints round-trip through disk") {
  ExperimentConfig cfg = tiny_classification(4, 1);
  std::vector<Graph> graphs = load_dataset(cfg);
  Model a = build_model(cfg, graphs[0].feature_dim(), 0, 2);
  cfg.seed = 99;
  Model b = build_model(cfg, graphs[0].feature_dim(), 0, 2);

  Tensor out_a = a.graph_forward(graphs[0]).output;
  Tensor out_b = b.graph_forward(graphs[0]).output;
  CHECK(std::abs(out_a.at(0, 0) - out_b.at(0, 0)) > 1e-12);  // different inits

  fs::path ckpt = temp_dir() / "roundtrip.ckpt";
  save_checkpoint(ckpt.string(), a.parameters());

  auto loaded = load_checkpoint(ckpt.string());
  CHECK(loaded.size() == a.parameters().size());
  CHECK(loaded.front().first == a.parameters().front().name);

  assign_checkpoint(b, ckpt.string());
  Tensor out_b2 = b.graph_forward(graphs[0]).output;
  CHECK(out_b2.at(0, 0) == out_a.at(0, 0));
  CHECK(out_b2.at(0, 1) == out_a.at(0, 1));

  // a model with different shapes rejects the file
  ExperimentConfig other = tiny_classification(4, 1);
  other.blocks[0].layer.out_dim = 3;
  other.blocks[0].layer.gin_hidden = 3;
  Model c = build_model(other, graphs[0].feature_dim(), 0, 2);
  CHECK_THROWS_AS(assign_checkpoint(c, ckpt.string()), usage_error);
  CHECK_THROWS_AS(load_checkpoint((temp_dir() / "missing.ckpt").string()),
                  usage_error);
}

TEST_CASE("training twice from one config is byte-identical") {
  ExperimentConfig cfg = tiny_classification(10, 8);
  TrainResult r1 = train(cfg);
  TrainResult r2 = train(cfg);
  REQUIRE(r1.rows.size() == r2.rows.size());
  for (size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].epoch == r2.rows[i].epoch);
    CHECK(r1.rows[i].split == r2.rows[i].split);
    CHECK(r1.rows[i].loss == r2.rows[i].loss);      // exact, not approximate
    CHECK(r1.rows[i].metric == r2.rows[i].metric);
  }
  CHECK(r1.summary_json == r2.summary_json);
}

TEST_CASE("evaluate agrees with the final training row") {
  ExperimentConfig cfg = tiny_classification(10, 6);
  TrainResult res = train(cfg);
  nlohmann::json s = nlohmann::json::parse(res.summary_json);
  nlohmann::json e = nlohmann::json::parse(evaluate(cfg, res.model));
  CHECK(s.at("final") == e.at("final"));
}

TEST_CASE("a diverging run reports a numeric error, not garbage") {
  // tiny regression corpus with huge targets; an absurd sgd step rate drives
  // the squared loss to overflow within a few epochs
  std::vector<Graph> gs;
  for (int i = 0; i < 4; ++i) {
    Graph g = build_graph(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}},
                          Tensor::from({3, 1}, {1.0, 2.0, double(i)}));
    g.symmetrized = true;
    g.graph_target = std::vector<double>{1e8};
    gs.push_back(build_graph(std::move(g)));
  }
  fs::path data = temp_dir() / "explode.jsonl";
  save_jsonl(data.string(), gs);

  ExperimentConfig cfg;
  cfg.task = Task::graph_regression;
  cfg.seed = 3;
  cfg.epochs = 12;
  cfg.batch_size = 4;
  cfg.optimizer = "sgd";
  cfg.lr = 1e12;
  cfg.data_path = data.string();
  BlockSpec b;
  b.kind = BlockSpec::Kind::gcn;
  b.layer.variant = LayerConfig::Variant::gcn;
  b.layer.out_dim = 4;
  cfg.blocks = {b};
  cfg.readout.mode = ReadoutConfig::Mode::sum;
  cfg.train_fraction = 0.75;
  CHECK_THROWS_AS(train(cfg), numeric_error);
}

TEST_CASE("config files are validated on load") {
  const std::string ok_layers = R"("layers": [{"type": "gcn", "out_dim": 4}])";
  const std::string gen = R"("generator": {"kind": "cycles_vs_paths", "num_graphs": 4})";

  CHECK_THROWS_AS(load_config((temp_dir() / "nope.json").string()), usage_error);
  CHECK_THROWS_AS(load_config(write_json("notjson.json", "{oops")), usage_error);
  CHECK_THROWS_AS(
      load_config(write_json("both.json",
          R"({"task": "graph_classification", )" + ok_layers +
          R"(, "data": "x.jsonl", )" + gen + "}")),
      usage_error);
  CHECK_THROWS_AS(
      load_config(write_json("neither.json",
          R"({"task": "graph_classification", )" + ok_layers + "}")),
      usage_error);
  CHECK_THROWS_AS(
      load_config(write_json("badmode.json",
          R"({"task": "graph_classification", "mode": "warp", )" + ok_layers +
          ", " + gen + "}")),
      usage_error);
  CHECK_THROWS_AS(
      load_config(write_json("badopt.json",
          R"({"task": "graph_classification", "optimizer": "lion", )" + ok_layers +
          ", " + gen + "}")),
      usage_error);
  CHECK_THROWS_AS(
      load_config(write_json("badtask.json",
          R"({"task": "dreaming", )" + ok_layers + ", " + gen + "}")),
      usage_error);
  CHECK_THROWS_AS(
      load_config(write_json("badblock.json",
          R"({"task": "graph_classification", "layers": [{"type": "mamba"}], )" +
          gen + "}")),
      usage_error);

  // a valid file parses into the expected fields
  std::string good = write_json("good.json",
      R"({"task": "graph_classification", "seed": 7, "epochs": 3, )" +
      ok_layers + ", " + gen + "}");
  ExperimentConfig cfg = load_config(good);
  CHECK(cfg.task == Task::graph_classification);
  CHECK(cfg.seed == 7);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.blocks.size() == 1);
  CHECK(cfg.generator.has_value());
}

TEST_CASE("misconfigured training requests fail fast") {
  // pooling on a node-level task
  ExperimentConfig cfg = tiny_classification(4, 1);
  cfg.task = Task::node_classification_transductive;
  BlockSpec pool;
  pool.kind = BlockSpec::Kind::topk;
  pool.ratio = 0.5;
  cfg.blocks.push_back(pool);
  cfg.train_mask = {0};
  CHECK_THROWS_AS(train(cfg), usage_error);

  // constructive with pooling
  ExperimentConfig c2 = tiny_classification(4, 1);
  c2.mode = "constructive";
  BlockSpec pool2;
  pool2.kind = BlockSpec::Kind::topk;
  pool2.ratio = 0.5;
  c2.blocks.push_back(pool2);
  CHECK_THROWS_AS(train(c2), usage_error);

  // constructive with a parameterized readout
  ExperimentConfig c3 = tiny_classification(4, 1);
  c3.mode = "constructive";
  c3.readout.mode = ReadoutConfig::Mode::deepsets;
  c3.readout.inner_dim = 4;
  c3.readout.out_dim = 4;
  CHECK_THROWS_AS(train(c3), usage_error);
}
