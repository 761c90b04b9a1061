#include "gdn/model.hpp"

#include <cstring>
#include <fstream>

#include "gdn/error.hpp"

namespace gdn {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool BlockSpec::is_pooling() const {
  return kind == Kind::diffpool || kind == Kind::topk || kind == Kind::sagpool ||
         kind == Kind::edgepool;
}

int BlockSpec::in_dim() const {
  switch (kind) {
    case Kind::generic: case Kind::gcn: case Kind::gin: case Kind::sage_mean:
      return layer.in_dim;
    case Kind::rgcn: return rel.in_dim;
    case Kind::ecc: return ecc.in_dim;
    case Kind::gat: return gat.in_dim;
    default: return 0;  // pooling: set via set_in_dim
  }
}

int BlockSpec::out_dim() const {
  switch (kind) {
    case Kind::generic: case Kind::gcn: case Kind::gin: case Kind::sage_mean:
      return layer.out_dim;
    case Kind::rgcn: return rel.out_dim;
    case Kind::ecc: return ecc.out_dim;
    case Kind::gat:
      return gat.merge == AttentionConfig::Merge::concat
                 ? gat.num_heads * gat.head_dim
                 : gat.head_dim;
    default: return pool_dim;
  }
}

void BlockSpec::set_in_dim(int d) {
  switch (kind) {
    case Kind::generic: case Kind::gcn: case Kind::gin: case Kind::sage_mean:
      layer.in_dim = d; break;
    case Kind::rgcn: rel.in_dim = d; break;
    case Kind::ecc: ecc.in_dim = d; break;
    case Kind::gat: gat.in_dim = d; break;
    default: pool_dim = d; break;  // pooling preserves the width
  }
}

Block make_block(const BlockSpec& spec, int arc_feature_dim, std::uint64_t seed) {
  Block b;
  b.spec = spec;
  switch (spec.kind) {
    case BlockSpec::Kind::generic:
    case BlockSpec::Kind::gcn:
    case BlockSpec::Kind::gin:
    case BlockSpec::Kind::sage_mean:
      b.params = init_layer_params(spec.layer, seed);
      break;
    case BlockSpec::Kind::rgcn:
      b.params = init_rgcn_params(spec.rel, seed);
      break;
    case BlockSpec::Kind::ecc:
      b.params = init_ecc_params(spec.ecc, arc_feature_dim, seed);
      break;
    case BlockSpec::Kind::gat:
      b.params = init_gat_params(spec.gat, seed);
      break;
    case BlockSpec::Kind::diffpool: {
      // Inner assignment layer: a GCN emitting one logit column per cluster.
      LayerConfig inner;
      inner.variant = LayerConfig::Variant::gcn;
      inner.in_dim = spec.pool_dim;
      inner.out_dim = spec.clusters;
      inner.activation = "identity";
      b.params = init_layer_params(inner, seed);
      break;
    }
    case BlockSpec::Kind::topk:
      b.params.add("p", glorot(spec.pool_dim, 1, seed));
      break;
    case BlockSpec::Kind::sagpool: {
      LayerConfig inner;
      inner.variant = LayerConfig::Variant::gcn;
      inner.in_dim = spec.pool_dim;
      inner.out_dim = 1;
      inner.activation = "identity";
      b.params = init_layer_params(inner, seed);
      break;
    }
    case BlockSpec::Kind::edgepool:
      b.params.add("w", glorot(2 * spec.pool_dim, 1, seed));
      b.params.add("b", Tensor::zeros({1, 1}));
      break;
  }
  return b;
}

bool Model::has_pooling() const {
  for (const Block& b : blocks)
    if (b.spec.is_pooling()) return true;
  return false;
}

namespace {

// One layer block application, optionally on a sampled neighborhood.
Tensor run_layer(const Block& b, const Graph& g, const Tensor& h,
                 std::uint64_t* sample_seed) {
  const NeighborhoodIndex* idx = nullptr;
  NeighborhoodIndex sampled;
  if (sample_seed && b.spec.fanout > 0) {
    sampled = sample_neighbors(g, b.spec.fanout, (*sample_seed)++);
    idx = &sampled;
  }
  switch (b.spec.kind) {
    case BlockSpec::Kind::generic:
    case BlockSpec::Kind::gcn:
    case BlockSpec::Kind::gin:
    case BlockSpec::Kind::sage_mean:
      return layer_forward(b.spec.layer, b.params, g, h, idx);
    case BlockSpec::Kind::rgcn:
      return rgcn_forward(b.spec.rel, b.params, g, h, idx);
    case BlockSpec::Kind::ecc:
      return ecc_forward(b.spec.ecc, b.params, g, h, idx);
    case BlockSpec::Kind::gat:
      return gat_forward(b.spec.gat, b.params, g, h, idx);
    default:
      throw usage_error("run_layer called on a pooling block");
  }
}

InnerLayer inner_gcn(const Block& b, int out_dim) {
  LayerConfig inner;
  inner.variant = LayerConfig::Variant::gcn;
  inner.in_dim = b.spec.pool_dim;
  inner.out_dim = out_dim;
  inner.activation = "identity";
  return [inner, &b](const Graph& g, const Tensor& h) {
    return gcn_forward(inner, b.params, g, h);
  };
}

void merge_aux(std::map<std::string, Tensor>& into,
               const std::map<std::string, Tensor>& from) {
  for (const auto& [k, v] : from) {
    auto it = into.find(k);
    if (it == into.end())
      into[k] = v;
    else
      it->second = add(it->second, v);
  }
}

}  // namespace

Tensor Model::node_forward(const Graph& g, const Tensor& h0, int num_blocks,
                           std::uint64_t* sample_seed) const {
  const int upto = num_blocks < 0 ? static_cast<int>(blocks.size()) : num_blocks;
  Tensor h = h0;
  for (int i = 0; i < upto; ++i) {
    if (blocks[i].spec.is_pooling())
      throw usage_error("node-level tasks cannot use pooling blocks");
    h = run_layer(blocks[i], g, h, sample_seed);
  }
  return h;
}

Model::Forward Model::graph_forward(const Graph& g, int num_blocks,
                                    std::uint64_t* sample_seed) const {
  const int upto = num_blocks < 0 ? static_cast<int>(blocks.size()) : num_blocks;
  Forward fw;
  Graph current = g;
  Tensor h = g.node_features;
  for (int i = 0; i < upto; ++i) {
    const Block& b = blocks[i];
    if (!b.spec.is_pooling()) {
      h = run_layer(b, current, h, sample_seed);
      continue;
    }
    switch (b.spec.kind) {
      case BlockSpec::Kind::diffpool: {
        if (i + 1 != upto)
          throw usage_error("diffpool must be the last block (dense coarse adjacency)");
        PoolOutput po = diffpool(inner_gcn(b, b.spec.clusters), current, h,
                                 b.spec.clusters);
        merge_aux(fw.aux_losses, po.aux_losses);
        h = po.h;
        // Readout sees the cluster states as one pooled graph.
        current = Graph{};
        current.num_nodes = po.num_nodes_out;
        current.node_features = h;
        current = build_graph(std::move(current));
        break;
      }
      case BlockSpec::Kind::topk: {
        PoolOutput po = topk_pool(h, current, b.params.at("p"), b.spec.ratio);
        merge_aux(fw.aux_losses, po.aux_losses);
        h = po.h;
        current = po.coarse_graph();
        break;
      }
      case BlockSpec::Kind::sagpool: {
        PoolOutput po = sagpool(inner_gcn(b, 1), current, h, b.spec.ratio);
        merge_aux(fw.aux_losses, po.aux_losses);
        h = po.h;
        current = po.coarse_graph();
        break;
      }
      case BlockSpec::Kind::edgepool: {
        PoolOutput po = edgepool(b.params.at("w"), b.params.at("b"), current, h);
        merge_aux(fw.aux_losses, po.aux_losses);
        h = po.h;
        current = po.coarse_graph();
        break;
      }
      default: break;
    }
  }
  fw.node_states = h;
  std::vector<int> to_graph(h.rows(), 0);
  fw.graph_embedding = readout(readout_cfg, readout_params, h, to_graph, 1);
  // A truncated stack (constructive stages) may be narrower than the full
  // head, so the head only applies to whole-stack forwards.
  fw.output = upto == static_cast<int>(blocks.size())
                  ? apply_head(fw.graph_embedding)
                  : fw.graph_embedding;
  return fw;
}

Model::Forward Model::batch_forward(const BatchedGraph& b, int num_blocks,
                                    std::uint64_t* sample_seed) const {
  if (has_pooling())
    throw usage_error("batched forward requires a pooling-free stack");
  const int upto = num_blocks < 0 ? static_cast<int>(blocks.size()) : num_blocks;
  Forward fw;
  fw.node_states = node_forward(b.graph, b.graph.node_features, num_blocks,
                                sample_seed);
  fw.graph_embedding = readout(readout_cfg, readout_params, fw.node_states,
                               b.node_to_graph, b.num_graphs);
  fw.output = upto == static_cast<int>(blocks.size())
                  ? apply_head(fw.graph_embedding)
                  : fw.graph_embedding;
  return fw;
}

Tensor Model::apply_head(const Tensor& x) const {
  if (head.items.empty()) return x;
  return add(matmul(x, head.at("W")), head.at("b"));
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> out;
  for (int i = 0; i < static_cast<int>(blocks.size()); ++i)
    for (auto& [n, t] : blocks[i].params.items)
      out.push_back({"block" + std::to_string(i) + "." + n, t});
  for (auto& [n, t] : readout_params.items) out.push_back({"readout." + n, t});
  for (auto& [n, t] : head.items) out.push_back({"head." + n, t});
  return out;
}

std::vector<ParamRef> Model::block_parameters(int i) {
  std::vector<ParamRef> out;
  for (auto& [n, t] : blocks[i].params.items)
    out.push_back({"block" + std::to_string(i) + "." + n, t});
  return out;
}

std::vector<ParamRef> Model::readout_head_parameters() {
  std::vector<ParamRef> out;
  for (auto& [n, t] : readout_params.items) out.push_back({"readout." + n, t});
  for (auto& [n, t] : head.items) out.push_back({"head." + n, t});
  return out;
}

// ------------------------------------------------------------- checkpointing

namespace {
constexpr char kMagic[8] = {'G', 'D', 'N', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_raw(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw usage_error("checkpoint truncated");
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw usage_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_raw<std::uint64_t>(out, params.size());
  for (const ParamRef& p : params) {
    write_raw<std::uint64_t>(out, p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto& shape = p.tensor.shape();
    write_raw<std::uint64_t>(out, shape.size());
    for (int d : shape) write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    const auto& data = p.tensor.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw usage_error("checkpoint write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw usage_error("not a checkpoint file (bad magic): " + path);
  const auto count = read_raw<std::uint64_t>(in);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<std::uint64_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto ndim = read_raw<std::uint64_t>(in);
    std::vector<int> shape;
    std::int64_t numel = 1;
    for (std::uint64_t d = 0; d < ndim; ++d) {
      shape.push_back(static_cast<int>(read_raw<std::uint64_t>(in)));
      numel *= shape.back();
    }
    std::vector<double> data(static_cast<std::size_t>(numel));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw usage_error("checkpoint truncated: " + path);
    out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(data)));
  }
  return out;
}

void assign_checkpoint(Model& m, const std::string& path) {
  auto stored = load_checkpoint(path);
  auto params = m.parameters();
  if (stored.size() != params.size())
    throw usage_error("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (stored[i].first != params[i].name)
      throw usage_error("checkpoint parameter name mismatch: expected " +
                        params[i].name + ", found " + stored[i].first);
    if (stored[i].second.shape() != params[i].tensor.shape())
      throw usage_error("checkpoint shape mismatch for " + params[i].name);
    params[i].tensor.data() = stored[i].second.data();
  }
}

}  // namespace gdn
