#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "topoclasp/autodiff.hpp"
#include "topoclasp/common.hpp"
#include "topoclasp/graph.hpp"
#include "topoclasp/rng.hpp"

namespace topoclasp {

// Linear layers store weights as (out x in); application is x * W^T + b.
struct GinLayerParams {
  ad::Tensor eps;  // 1x1, learnable, init 0
  ad::Tensor w1, b1, w2, b2;
};

struct ModelParams {
  int d_in = 0;      // node feature width
  int d_topo = 0;    // topological vector width
  int hidden = 0;
  int classes = 0;
  int proj_dim = 0;
  std::vector<GinLayerParams> gin;
  ad::Tensor topo_w1, topo_b1, topo_w2, topo_b2;
  ad::Tensor fusion_w, fusion_b;  // hidden x (2*hidden)
  ad::Tensor cls_w, cls_b;        // classes x hidden
  ad::Tensor proj_w;              // proj_dim x hidden, no bias

  // Canonical traversal order; checkpoints, the optimizer, and gradient
  // binding all rely on it.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (std::size_t k = 0; k < gin.size(); ++k) {
      std::string p = "gin" + std::to_string(k) + ".";
      fn(p + "eps", gin[k].eps);
      fn(p + "w1", gin[k].w1);
      fn(p + "b1", gin[k].b1);
      fn(p + "w2", gin[k].w2);
      fn(p + "b2", gin[k].b2);
    }
    fn("topo.w1", topo_w1);
    fn("topo.b1", topo_b1);
    fn("topo.w2", topo_w2);
    fn("topo.b2", topo_b2);
    fn("fusion.w", fusion_w);
    fn("fusion.b", fusion_b);
    fn("cls.w", cls_w);
    fn("cls.b", cls_b);
    fn("proj.w", proj_w);
  }

  static ModelParams init(int d_in, int d_topo, int hidden, int classes,
                          int proj_dim, int layers, Rng& rng) {
    if (d_in <= 0 || d_topo <= 0 || hidden <= 0 || classes <= 0 ||
        proj_dim <= 0 || layers <= 0)
      throw ConfigError("model dimensions must be positive");
    ModelParams p;
    p.d_in = d_in;
    p.d_topo = d_topo;
    p.hidden = hidden;
    p.classes = classes;
    p.proj_dim = proj_dim;
    p.gin.resize(static_cast<std::size_t>(layers));
    auto glorot = [&rng](int out, int in) {
      ad::Tensor w(out, in);
      double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      for (double& x : w.v) x = (2.0 * rng.uniform() - 1.0) * limit;
      return w;
    };
    for (int k = 0; k < layers; ++k) {
      int in = k == 0 ? d_in : hidden;
      auto& l = p.gin[static_cast<std::size_t>(k)];
      l.eps = ad::Tensor(1, 1);
      l.w1 = glorot(hidden, in);
      l.b1 = ad::Tensor(1, hidden);
      l.w2 = glorot(hidden, hidden);
      l.b2 = ad::Tensor(1, hidden);
    }
    p.topo_w1 = glorot(hidden, d_topo);
    p.topo_b1 = ad::Tensor(1, hidden);
    p.topo_w2 = glorot(hidden, hidden);
    p.topo_b2 = ad::Tensor(1, hidden);
    p.fusion_w = glorot(hidden, 2 * hidden);
    p.fusion_b = ad::Tensor(1, hidden);
    p.cls_w = glorot(classes, hidden);
    p.cls_b = ad::Tensor(1, classes);
    p.proj_w = glorot(proj_dim, hidden);
    return p;
  }

  int layers() const { return static_cast<int>(gin.size()); }
};

// Parameters registered as tape leaves, addressable by tensor identity.
struct BoundParams {
  std::vector<std::string> names;
  std::vector<ad::Tensor*> tensors;
  std::vector<ad::Tape::Ref> refs;
  std::unordered_map<const ad::Tensor*, ad::Tape::Ref> by_addr;

  ad::Tape::Ref ref(const ad::Tensor& t) const {
    auto it = by_addr.find(&t);
    if (it == by_addr.end()) throw ContractError("parameter not bound to tape");
    return it->second;
  }
};

inline BoundParams bind_params(ad::Tape& tape, ModelParams& params) {
  BoundParams bp;
  params.for_each([&](const std::string& name, ad::Tensor& t) {
    ad::Tape::Ref r = tape.input(t);
    bp.names.push_back(name);
    bp.tensors.push_back(&t);
    bp.refs.push_back(r);
    bp.by_addr.emplace(&t, r);
  });
  return bp;
}

inline ad::Tape::Ref linear(ad::Tape& tape, ad::Tape::Ref x, ad::Tape::Ref w,
                            ad::Tape::Ref b) {
  return tape.add(tape.matmul(x, w, false, true), b);
}

// ---------------------------------------------------------------------------
// Batching

struct Batch {
  ad::Tensor x;     // total_nodes x d_in
  ad::Tensor topo;  // num_graphs x d_topo
  std::vector<int> edge_src, edge_dst;  // directed, both orientations
  std::vector<int> node_graph;
  std::vector<int> labels;
  int num_graphs = 0;
};

inline Batch make_batch(const Dataset& ds,
                        const std::vector<std::vector<double>>& topo_rows,
                        const std::vector<int>& indices) {
  if (indices.empty()) throw ContractError("make_batch: empty index list");
  Batch b;
  b.num_graphs = static_cast<int>(indices.size());
  int total_nodes = 0;
  for (int gi : indices) {
    const Graph& g = ds.graphs[static_cast<std::size_t>(gi)];
    if (g.num_nodes <= 0) throw ContractError("make_batch: graph with no nodes");
    total_nodes += g.num_nodes;
  }
  int d_in = ds.feature_dim;
  int d_topo = static_cast<int>(topo_rows[static_cast<std::size_t>(indices[0])].size());
  b.x = ad::Tensor(total_nodes, d_in);
  b.topo = ad::Tensor(b.num_graphs, d_topo);
  b.node_graph.resize(static_cast<std::size_t>(total_nodes));
  int node_base = 0;
  for (int slot = 0; slot < b.num_graphs; ++slot) {
    int gi = indices[static_cast<std::size_t>(slot)];
    const Graph& g = ds.graphs[static_cast<std::size_t>(gi)];
    for (int v = 0; v < g.num_nodes; ++v) {
      b.node_graph[static_cast<std::size_t>(node_base + v)] = slot;
      for (int j = 0; j < d_in; ++j)
        b.x.at(node_base + v, j) =
            g.node_features[static_cast<std::size_t>(v) * d_in + j];
    }
    for (auto [u, v] : g.edges) {
      b.edge_src.push_back(node_base + u);
      b.edge_dst.push_back(node_base + v);
      b.edge_src.push_back(node_base + v);
      b.edge_dst.push_back(node_base + u);
    }
    const auto& row = topo_rows[static_cast<std::size_t>(gi)];
    for (int j = 0; j < d_topo; ++j) b.topo.at(slot, j) = row[static_cast<std::size_t>(j)];
    b.labels.push_back(g.label);
    node_base += g.num_nodes;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Forward passes

// h <- MLP((1 + eps) h + sum_{neighbors} h), three message-passing rounds by
// default, then mean pooling per graph.
inline ad::Tape::Ref gin_forward(ad::Tape& tape, const BoundParams& bp,
                                 const ModelParams& params, const Batch& batch,
                                 ad::Tape::Ref x_ref) {
  ad::Tape::Ref h = x_ref;
  int total_nodes = tape.val(x_ref).rows;
  for (const auto& l : params.gin) {
    ad::Tape::Ref gathered = tape.gather_rows(h, batch.edge_src);
    ad::Tape::Ref nbr = tape.scatter_add_rows(gathered, batch.edge_dst, total_nodes);
    ad::Tape::Ref self = tape.add(h, tape.scalar_mul(h, bp.ref(l.eps)));
    ad::Tape::Ref agg = tape.add(self, nbr);
    h = tape.relu(linear(tape, agg, bp.ref(l.w1), bp.ref(l.b1)));
    h = tape.relu(linear(tape, h, bp.ref(l.w2), bp.ref(l.b2)));
  }
  return tape.segment_mean(h, batch.node_graph, batch.num_graphs);
}

inline ad::Tape::Ref topo_forward(ad::Tape& tape, const BoundParams& bp,
                                  const ModelParams& params, ad::Tape::Ref topo_ref) {
  ad::Tape::Ref hid = tape.relu(linear(tape, topo_ref, bp.ref(params.topo_w1),
                                       bp.ref(params.topo_b1)));
  return linear(tape, hid, bp.ref(params.topo_w2), bp.ref(params.topo_b2));
}

struct FusedOut {
  ad::Tape::Ref f, logits, p;
};

// f = relu(W_fuse [z || u] + b); logits = W_cls f + b; p = l2norm(f W_proj^T).
inline FusedOut fuse_and_classify(ad::Tape& tape, const BoundParams& bp,
                                  const ModelParams& params, ad::Tape::Ref z,
                                  ad::Tape::Ref u) {
  ad::Tape::Ref cat = tape.concat_cols(z, u);
  ad::Tape::Ref f = tape.relu(linear(tape, cat, bp.ref(params.fusion_w),
                                     bp.ref(params.fusion_b)));
  ad::Tape::Ref logits = linear(tape, f, bp.ref(params.cls_w), bp.ref(params.cls_b));
  ad::Tape::Ref p = tape.l2_normalize_rows(tape.matmul(f, bp.ref(params.proj_w), false, true));
  return {f, logits, p};
}

// Single-view head for the topo-only / GIN-only ablations.
inline ad::Tape::Ref classify_single(ad::Tape& tape, const BoundParams& bp,
                                     const ModelParams& params, ad::Tape::Ref h) {
  return linear(tape, h, bp.ref(params.cls_w), bp.ref(params.cls_b));
}

// ---------------------------------------------------------------------------
// Checkpoints (raw little-endian doubles; round-trips bit-exactly)

inline constexpr char kCheckpointMagic[8] = {'T', 'C', 'L', 'C', 'K', 'P', 'T', '1'};

inline void save_checkpoint(const std::string& path, ModelParams& params) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw FormatError("cannot open checkpoint for writing: " + path);
  std::fwrite(kCheckpointMagic, 1, sizeof kCheckpointMagic, f);
  std::int32_t dims[6] = {params.d_in, params.d_topo, params.hidden,
                          params.classes, params.proj_dim, params.layers()};
  std::fwrite(dims, sizeof(std::int32_t), 6, f);
  bool ok = true;
  params.for_each([&](const std::string&, ad::Tensor& t) {
    std::int32_t shape[2] = {t.rows, t.cols};
    ok = ok && std::fwrite(shape, sizeof(std::int32_t), 2, f) == 2;
    ok = ok && std::fwrite(t.v.data(), sizeof(double), t.v.size(), f) == t.v.size();
  });
  if (std::fclose(f) != 0 || !ok)
    throw FormatError("checkpoint write failed: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw FormatError("cannot open checkpoint: " + path);
  char magic[8];
  if (std::fread(magic, 1, 8, f) != 8 ||
      std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    std::fclose(f);
    throw FormatError("bad checkpoint magic: " + path);
  }
  std::int32_t dims[6];
  if (std::fread(dims, sizeof(std::int32_t), 6, f) != 6) {
    std::fclose(f);
    throw FormatError("truncated checkpoint header: " + path);
  }
  Rng dummy(0);
  ModelParams p = ModelParams::init(dims[0], dims[1], dims[2], dims[3], dims[4],
                                    dims[5], dummy);
  bool ok = true;
  p.for_each([&](const std::string&, ad::Tensor& t) {
    std::int32_t shape[2];
    ok = ok && std::fread(shape, sizeof(std::int32_t), 2, f) == 2;
    ok = ok && shape[0] == t.rows && shape[1] == t.cols;
    if (ok) ok = std::fread(t.v.data(), sizeof(double), t.v.size(), f) == t.v.size();
  });
  std::fclose(f);
  if (!ok) throw FormatError("corrupt checkpoint payload: " + path);
  return p;
}

}  // namespace topoclasp
