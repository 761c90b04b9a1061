#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gdn/attention.hpp"
#include "gdn/graph.hpp"
#include "gdn/layers.hpp"
#include "gdn/optim.hpp"
#include "gdn/pooling.hpp"
#include "gdn/readout.hpp"

namespace gdn {

// Deterministic stream splitter for deriving per-component seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct BlockSpec {
  enum class Kind {
    generic, gcn, gin, sage_mean, rgcn, ecc, gat,
    diffpool, topk, sagpool, edgepool
  };
  Kind kind = Kind::generic;

  LayerConfig layer;      // generic / gcn / gin / sage_mean
  RelationalConfig rel;   // rgcn
  EccConfig ecc;          // ecc
  AttentionConfig gat;    // gat

  int clusters = 0;       // diffpool
  double ratio = 0.5;     // topk / sagpool
  int fanout = 0;         // 0 = full neighborhoods (layer blocks only)
  int pool_dim = 0;       // pooling blocks: preserved feature width

  bool is_pooling() const;
  int in_dim() const;
  int out_dim() const;    // feature width this block emits
  void set_in_dim(int d);
};

struct Block {
  BlockSpec spec;
  LayerParams params;
};

// Seeded parameter construction for one block. For sagpool the params are a
// scalar-output inner GCN ("W"), for topk the projection ("p"), for edgepool
// the score affine map ("w", "b").
Block make_block(const BlockSpec& spec, int arc_feature_dim, std::uint64_t seed);

// A configured stack + readout + linear head. Pooling blocks coarsen the
// graph; diffpool emits a dense coarse adjacency and is therefore only valid
// as the final block before readout.
struct Model {
  std::vector<Block> blocks;
  ReadoutConfig readout_cfg;
  LayerParams readout_params;
  LayerParams head;  // "W", "b"; may be empty (embedding tasks)

  struct Forward {
    Tensor node_states;
    Tensor graph_embedding;  // defined for graph-level forwards
    Tensor output;           // head applied on whole-stack forwards, else embedding
    std::map<std::string, Tensor> aux_losses;
  };

  bool has_pooling() const;

  // Node-level forward (pooling rejected): block chain only, head applied by
  // the caller via apply_head. num_blocks=-1 runs the whole stack;
  // sample_seed, when given, draws sampled neighborhoods for blocks with a
  // fanout and advances the counter.
  Tensor node_forward(const Graph& g, const Tensor& h0, int num_blocks = -1,
                      std::uint64_t* sample_seed = nullptr) const;

  // Whole-model forward for a single graph (pooling allowed).
  Forward graph_forward(const Graph& g, int num_blocks = -1,
                        std::uint64_t* sample_seed = nullptr) const;

  // Batched forward; requires a pooling-free stack.
  Forward batch_forward(const BatchedGraph& b, int num_blocks = -1,
                        std::uint64_t* sample_seed = nullptr) const;

  Tensor apply_head(const Tensor& x) const;

  // Insertion-ordered references, names "block{i}.{p}", "readout.{p}",
  // "head.{p}" — this order is the optimizer and checkpoint order.
  std::vector<ParamRef> parameters();
  std::vector<ParamRef> block_parameters(int i);
  std::vector<ParamRef> readout_head_parameters();
};

// Versioned flat binary: magic, tensor count, then per tensor name length +
// name + ndim + dims + row-major doubles, all little-endian.
void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);
// Copies loaded values into the model's identically named parameters;
// mismatched names or shapes are errors.
void assign_checkpoint(Model& m, const std::string& path);

}  // namespace gdn
