#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "topoclasp/common.hpp"
#include "topoclasp/graph.hpp"

namespace topoclasp {

// Clique-lifted sublevel filtration truncated at dimension 2. Simplex values
// follow the max-of-vertices rule, so face values never exceed coface values.
struct SimplicialFiltration {
  struct Vertex {
    int node;
    double value;
  };
  struct Edge {
    int u, v;  // u < v
    double value;
  };
  struct Triangle {
    int u, v, w;  // u < v < w
    double value;
  };
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  std::vector<Triangle> triangles;
  std::vector<double> thresholds;  // ascending; back() is the cap value

  double cap() const { return thresholds.back(); }
};

// Linear-interpolation quantiles of `values` at levels k/N, k = 1..N, with
// exact duplicates collapsed; the last threshold is always max(values).
inline std::vector<double> quantile_thresholds(std::vector<double> values, int n) {
  if (values.empty()) throw ContractError("quantile_thresholds: empty values");
  if (n < 1) throw ContractError("quantile_thresholds: need N >= 1");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(n);
  const std::size_t m = values.size();
  for (int k = 1; k <= n; ++k) {
    double pos = (static_cast<double>(k) / n) * static_cast<double>(m - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= m - 1) {
      out.push_back(values.back());
      continue;
    }
    double frac = pos - static_cast<double>(lo);
    out.push_back(values[lo] + frac * (values[lo + 1] - values[lo]));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// All 3-cliques of the graph, each as (u, v, w) with u < v < w.
inline std::vector<std::array<int, 3>> enumerate_triangles(const Graph& g) {
  auto adj = adjacency(g);
  std::vector<std::array<int, 3>> tris;
  for (auto [u, v] : g.edges) {
    // g.edges has u < v; common neighbors w > v avoid double counting.
    auto iu = std::upper_bound(adj[u].begin(), adj[u].end(), v);
    auto iv = std::upper_bound(adj[v].begin(), adj[v].end(), v);
    while (iu != adj[u].end() && iv != adj[v].end()) {
      if (*iu < *iv)
        ++iu;
      else if (*iv < *iu)
        ++iv;
      else {
        tris.push_back({u, v, *iu});
        ++iu;
        ++iv;
      }
    }
  }
  std::sort(tris.begin(), tris.end());
  return tris;
}

// Builds the clique-lifted sublevel filtration of `g` under `node_values`.
// Simplices whose value exceeds the last threshold are excluded.
inline SimplicialFiltration sublevel_filtration(const Graph& g,
                                                const std::vector<double>& node_values,
                                                const std::vector<double>& thresholds) {
  if (static_cast<int>(node_values.size()) != g.num_nodes)
    throw ContractError("sublevel_filtration: node_values size mismatch");
  if (thresholds.empty())
    throw ContractError("sublevel_filtration: empty thresholds");
  SimplicialFiltration filt;
  filt.thresholds = thresholds;
  const double cap = thresholds.back();
  for (int v = 0; v < g.num_nodes; ++v)
    if (node_values[v] <= cap) filt.vertices.push_back({v, node_values[v]});
  for (auto [u, v] : g.edges) {
    double val = std::max(node_values[u], node_values[v]);
    if (val <= cap) filt.edges.push_back({u, v, val});
  }
  for (const auto& t : enumerate_triangles(g)) {
    double val = std::max({node_values[t[0]], node_values[t[1]], node_values[t[2]]});
    if (val <= cap) filt.triangles.push_back({t[0], t[1], t[2], val});
  }
  return filt;
}

}  // namespace topoclasp
