#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gdn/model.hpp"

namespace gdn {

enum class Task {
  node_classification_transductive,
  node_classification_inductive,
  graph_classification,
  graph_regression,
  link_prediction,
  autoencode,
};
Task task_from_string(const std::string& s);
std::string task_to_string(Task t);

struct GeneratorSpec {
  std::string kind;  // "two_community" | "cycles_vs_paths"
  int n_per_block = 30;
  double p_in = 0.3;
  double p_out = 0.02;
  int num_graphs = 200;
  int min_n = 6;
  int max_n = 12;
};

struct ExperimentConfig {
  Task task = Task::graph_classification;
  std::uint64_t seed = 1;
  std::string mode = "end_to_end";  // or "constructive"
  int epochs = 100;
  int batch_size = 32;
  std::string optimizer = "adam";  // or "sgd"
  double lr = 0.01;
  double aux_weight = 0.0;  // weight of pooling aux losses in the objective

  std::string data_path;                  // JSONL corpus, or:
  std::optional<GeneratorSpec> generator;

  std::vector<BlockSpec> blocks;  // in_dims resolved at assembly time
  ReadoutConfig readout;
  int num_classes = 0;  // 0 = infer from targets

  // Transductive masks (explicit node index lists).
  std::vector<int> train_mask, val_mask, test_mask;
  // Graph-level / inductive split over graphs.
  double train_fraction = 0.8;
  // Link prediction: fraction of undirected edges held out for evaluation.
  double holdout_fraction = 0.2;
};

ExperimentConfig load_config(const std::string& path);

// Resolves block in_dims from the data feature width, builds seeded
// parameters, the readout, and (when head_out > 0) the linear head.
Model build_model(const ExperimentConfig& cfg, int feature_dim,
                  int arc_feature_dim, int head_out);

// Loads the corpus named by the config (file or generator).
std::vector<Graph> load_dataset(const ExperimentConfig& cfg);

}  // namespace gdn
