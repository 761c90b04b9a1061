#pragma once

#include <string>
#include <vector>

#include "gdn/config.hpp"
#include "gdn/model.hpp"

namespace gdn {

struct EpochRow {
  int epoch = 0;
  std::string split;  // train | val | test
  double loss = 0.0;
  double metric = 0.0;  // accuracy, MAE, or link accuracy depending on task
};

struct TrainResult {
  std::vector<EpochRow> rows;
  std::string summary_json;
  Model model;
  // Reported on stdout only; metric files must stay byte-identical across
  // runs of the same config+seed.
  double wall_seconds = 0.0;
};

TrainResult train(const ExperimentConfig& cfg);

// Metrics of an already-trained model on the config's dataset (same summary
// shape as train's, without the epoch history).
std::string evaluate(const ExperimentConfig& cfg, Model& model);

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows);

}  // namespace gdn
