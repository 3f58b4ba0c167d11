#pragma once

// Small two-class fixture used by the training/CLI tests: cycles with a
// pendant tail (class 0, one persistent loop) versus paths (class 1, tree).
// Separable by either view, so short training runs reach high accuracy.

#include <algorithm>
#include <cstdint>
#include <utility>

#include "topoclasp/graph.hpp"
#include "topoclasp/rng.hpp"

namespace synthetic {

inline topoclasp::Dataset two_class(int per_class, std::uint64_t seed) {
  topoclasp::Rng rng(seed);
  topoclasp::Dataset ds;
  ds.name = "SYNTH";
  ds.num_classes = 2;
  ds.feature_dim = 0;  // featureless: degree one-hots get substituted downstream
  for (int i = 0; i < per_class; ++i) {
    {
      int n = 5 + static_cast<int>(rng.below(5));  // cycle of 5..9 plus a tail node
      topoclasp::Graph g;
      g.num_nodes = n + 1;
      for (int v = 0; v < n; ++v) {
        int u = (v + 1) % n;
        g.edges.emplace_back(std::min(v, u), std::max(v, u));
      }
      g.edges.emplace_back(0, n);
      std::sort(g.edges.begin(), g.edges.end());
      g.label = 0;
      ds.graphs.push_back(std::move(g));
    }
    {
      int n = 6 + static_cast<int>(rng.below(5));  // path of 6..10 nodes
      topoclasp::Graph g;
      g.num_nodes = n;
      for (int v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
      g.label = 1;
      ds.graphs.push_back(std::move(g));
    }
  }
  return ds;
}

}  // namespace synthetic
