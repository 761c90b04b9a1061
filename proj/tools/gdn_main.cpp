// Command line front end: train / eval / gradcheck / wltest / gen.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdn/config.hpp"
#include "gdn/dataset.hpp"
#include "gdn/error.hpp"
#include "gdn/gradsuite.hpp"
#include "gdn/graph.hpp"
#include "gdn/model.hpp"
#include "gdn/train.hpp"
#include "gdn/wl.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_train(const std::string& config_path, int seed_override,
              const std::string& out_dir) {
  gdn::ExperimentConfig cfg = gdn::load_config(config_path);
  if (seed_override >= 0) cfg.seed = seed_override;

  gdn::TrainResult res = gdn::train(cfg);

  fs::create_directories(out_dir);
  gdn::write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), res.rows);
  {
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << res.summary_json;
  }
  gdn::save_checkpoint((fs::path(out_dir) / "model.ckpt").string(),
                       res.model.parameters());

  // Wall time goes to stdout only; the files stay byte-stable across runs.
  std::printf("wall_seconds %.3f\n", res.wall_seconds);
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path) {
  gdn::ExperimentConfig cfg = gdn::load_config(config_path);
  std::vector<gdn::Graph> graphs = gdn::load_dataset(cfg);
  if (graphs.empty()) throw gdn::usage_error("dataset is empty");

  // The head width is recovered from the stored shapes; the loader then
  // verifies every parameter name and shape strictly.
  int head_out = 0;
  for (auto& [name, t] : gdn::load_checkpoint(ckpt_path))
    if (name == "head.W") head_out = t.cols();
  const gdn::Graph& g0 = graphs.front();
  gdn::Model m = gdn::build_model(cfg, g0.feature_dim(), g0.arc_feature_dim(),
                                  head_out);
  gdn::assign_checkpoint(m, ckpt_path);

  std::string summary = gdn::evaluate(cfg, m);
  std::fputs(summary.c_str(), stdout);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double tol) {
  auto entries = gdn::run_grad_suite(seed);
  bool ok = true;
  for (const auto& e : entries) {
    bool pass = e.max_rel_err < tol;
    ok = ok && pass;
    std::printf("%-28s %12.3e  %s\n", e.name.c_str(), e.max_rel_err,
                pass ? "ok" : "FAIL");
  }
  std::printf("worst %.3e (tolerance %.1e)\n", gdn::grad_suite_worst(entries), tol);
  return ok ? 0 : 1;
}

int cmd_wltest(const std::string& data_path, int max_iters) {
  std::vector<gdn::Graph> graphs = gdn::load_jsonl(data_path);
  std::map<std::uint64_t, std::vector<int>> buckets;
  for (size_t i = 0; i < graphs.size(); ++i) {
    gdn::WlResult r = gdn::wl_refine(graphs[i], max_iters);
    buckets[r.graph_hash].push_back(static_cast<int>(i));
  }
  int collisions = 0;
  for (auto& [hash, ids] : buckets) {
    if (ids.size() < 2) continue;
    ++collisions;
    std::printf("indistinguishable:");
    for (int id : ids) std::printf(" %d", id);
    std::printf("\n");
  }
  std::printf("%zu graphs, %zu distinct colourings, %d shared\n", graphs.size(),
              buckets.size(), collisions);
  return 0;
}

int cmd_gen(const std::string& kind, const std::string& out_path, int seed,
            int num_graphs, int min_n, int max_n, int n_per_block, double p_in,
            double p_out) {
  std::vector<gdn::Graph> graphs;
  if (kind == "cycles_paths") {
    graphs = gdn::gen_cycles_vs_paths(num_graphs, min_n, max_n,
                                      static_cast<std::uint64_t>(seed));
  } else if (kind == "two_community") {
    graphs.push_back(gdn::gen_two_community(n_per_block, p_in, p_out,
                                            static_cast<std::uint64_t>(seed)));
  } else {
    throw gdn::usage_error("unknown generator kind: " + kind);
  }
  gdn::save_jsonl(out_path, graphs);
  std::printf("wrote %zu graphs to %s\n", graphs.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep graph network experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", ckpt_path, data_path;
  int seed_override = -1;

  auto* train = app.add_subcommand("train", "train a model from a config");
  train->add_option("--config", config_path, "experiment config (json)")->required();
  train->add_option("--seed", seed_override, "override the config seed");
  train->add_option("--out", out_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--config", config_path, "experiment config (json)")->required();
  eval->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();

  std::uint64_t gc_seed = 7;
  double gc_tol = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit");
  gradcheck->add_option("--seed", gc_seed, "fixture seed");
  gradcheck->add_option("--tol", gc_tol, "max relative error");

  int wl_iters = 0;
  auto* wltest = app.add_subcommand("wltest", "colour-refinement distinguishability");
  wltest->add_option("--data", data_path, "graph corpus (jsonl)")->required();
  wltest->add_option("--iters", wl_iters, "refinement rounds (0 = until stable)");

  std::string gen_kind, gen_out = "data.jsonl";
  int gen_seed = 1, gen_num = 200, gen_min_n = 6, gen_max_n = 12, gen_npb = 30;
  double gen_pin = 0.3, gen_pout = 0.02;
  auto* gen = app.add_subcommand("gen", "write a synthetic corpus");
  gen->add_option("--kind", gen_kind, "cycles_paths | two_community")->required();
  gen->add_option("--out", gen_out, "output path (jsonl)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--num-graphs", gen_num, "corpus size (cycles_paths)");
  gen->add_option("--min-n", gen_min_n, "smallest graph (cycles_paths)");
  gen->add_option("--max-n", gen_max_n, "largest graph (cycles_paths)");
  gen->add_option("--n-per-block", gen_npb, "nodes per community (two_community)");
  gen->add_option("--p-in", gen_pin, "within-community edge probability");
  gen->add_option("--p-out", gen_pout, "cross-community edge probability");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, seed_override, out_dir);
    if (eval->parsed()) return cmd_eval(config_path, ckpt_path);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_tol);
    if (wltest->parsed()) return cmd_wltest(data_path, wl_iters);
    if (gen->parsed())
      return cmd_gen(gen_kind, gen_out, gen_seed, gen_num, gen_min_n, gen_max_n,
                     gen_npb, gen_pin, gen_pout);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
