#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topoclasp/autodiff.hpp"
#include "topoclasp/graph.hpp"
#include "topoclasp/model.hpp"
#include "topoclasp/rng.hpp"
#include "topoclasp/train.hpp"

namespace topoclasp {

// Fixed 3-graph batch (triangle, P4, star) with seeded random node features
// and topo vectors; small widths keep the finite-difference sweep fast while
// touching every parameter group.
inline Dataset gradcheck_dataset(Rng& rng) {
  Dataset ds;
  ds.name = "gradcheck-synthetic";
  ds.num_classes = 2;
  ds.feature_dim = 3;
  auto add = [&](int nodes, std::vector<std::pair<int, int>> edges, int label) {
    Graph g;
    g.num_nodes = nodes;
    g.edges = std::move(edges);
    g.label = label;
    g.feature_dim = 3;
    g.node_features.resize(static_cast<std::size_t>(nodes) * 3);
    for (double& x : g.node_features) x = rng.uniform();
    ds.graphs.push_back(std::move(g));
  };
  add(3, {{0, 1}, {0, 2}, {1, 2}}, 0);          // triangle
  add(4, {{0, 1}, {1, 2}, {2, 3}}, 1);          // path
  add(4, {{0, 1}, {0, 2}, {0, 3}}, 0);          // star
  return ds;
}

// Full-model gradient check: joint loss (cross-entropy + alpha * InfoNCE) in
// tcl mode, every parameter group probed coordinate-by-coordinate against
// central differences.
inline ad::GradCheckReport full_model_gradcheck(std::uint64_t seed,
                                                const std::string& contrast_on = "zu",
                                                double h = 1e-5, double tol = 1e-4) {
  Rng rng(seed);
  Dataset ds = gradcheck_dataset(rng);

  ExperimentConfig cfg;
  cfg.mode = "tcl";
  cfg.contrast_on = contrast_on;
  cfg.alpha = 0.1;
  cfg.tau = 0.5;
  cfg.hidden = 6;
  cfg.layers = 3;
  cfg.proj_dim = 4;

  const int d_topo = 8;
  std::vector<std::vector<double>> topo(ds.graphs.size(), std::vector<double>(d_topo));
  for (auto& row : topo)
    for (double& x : row) x = 2.0 * rng.uniform() - 1.0;

  ModelParams params = ModelParams::init(ds.feature_dim, d_topo, cfg.hidden,
                                         ds.num_classes, cfg.proj_dim, cfg.layers, rng);
  std::vector<int> all = {0, 1, 2};
  Batch batch = make_batch(ds, topo, all);

  auto loss_value = [&]() {
    ad::Tape tape;
    BoundParams bp = bind_params(tape, params);
    detail::BatchOut out =
        detail::forward_batch(tape, bp, params, batch, Mode::tcl, cfg, true);
    return tape.val(out.loss).v[0];
  };

  ad::Tape tape;
  BoundParams bp = bind_params(tape, params);
  detail::BatchOut out =
      detail::forward_batch(tape, bp, params, batch, Mode::tcl, cfg, true);
  tape.backward(out.loss);

  std::vector<ad::GradCheckGroup> groups;
  for (std::size_t i = 0; i < bp.tensors.size(); ++i)
    groups.push_back({bp.names[i], bp.tensors[i], tape.gradient(bp.refs[i])});
  return ad::grad_check(loss_value, groups, h, tol);
}

}  // namespace topoclasp
