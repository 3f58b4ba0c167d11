#pragma once

// Independent oracles for exercising the library: GF(2)-rank Betti numbers,
// a bottleneck-distance feasibility check, and seeded random graphs. These
// deliberately avoid the library's reduction/enumeration code paths.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "topoclasp/graph.hpp"
#include "topoclasp/persistence.hpp"
#include "topoclasp/rng.hpp"

namespace oracles {

// Rank over GF(2); columns are sorted row-index lists.
inline int gf2_rank(std::vector<std::vector<int>> cols) {
  std::vector<int> owner;  // owner[r] = column index currently holding pivot r
  std::vector<std::vector<int>> held;
  int rank = 0;
  for (auto& col : cols) {
    while (!col.empty()) {
      int low = col.back();
      if (static_cast<int>(owner.size()) <= low) owner.resize(low + 1, -1);
      if (owner[low] < 0) {
        owner[low] = static_cast<int>(held.size());
        held.push_back(col);
        ++rank;
        break;
      }
      const auto& other = held[static_cast<std::size_t>(owner[low])];
      std::vector<int> merged;
      std::set_symmetric_difference(col.begin(), col.end(), other.begin(),
                                    other.end(), std::back_inserter(merged));
      col = std::move(merged);
    }
  }
  return rank;
}

struct BettiPair {
  int b0 = 0, b1 = 0;
};

// Betti numbers of the sublevel clique complex at level alpha, computed from
// boundary-matrix ranks: beta0 = |V| - rank d1, beta1 = |E| - rank d1 - rank d2.
// Triangles come from a brute-force triple loop, not the library enumerator.
inline BettiPair betti_at(const topoclasp::Graph& g,
                          const std::vector<double>& vals, double alpha) {
  const int n = g.num_nodes;
  std::vector<char> vin(n, 0);
  int nv = 0;
  for (int v = 0; v < n; ++v)
    if (vals[static_cast<std::size_t>(v)] <= alpha) {
      vin[static_cast<std::size_t>(v)] = 1;
      ++nv;
    }
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  std::vector<std::pair<int, int>> eins;
  std::vector<std::vector<int>> d1;
  for (auto [u, v] : g.edges) {
    double val = std::max(vals[static_cast<std::size_t>(u)], vals[static_cast<std::size_t>(v)]);
    if (val <= alpha) {
      adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = 1;
      adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = 1;
      eins.emplace_back(u, v);
      d1.push_back({std::min(u, v), std::max(u, v)});
    }
  }
  auto edge_slot = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    for (std::size_t k = 0; k < eins.size(); ++k)
      if (eins[k].first == a && eins[k].second == b) return static_cast<int>(k);
    std::abort();  // triangle without its edge: impossible under the max rule
  };
  std::vector<std::vector<int>> d2;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        if (!adj[a][b] || !adj[a][c] || !adj[b][c]) continue;
        double val = std::max({vals[static_cast<std::size_t>(a)],
                               vals[static_cast<std::size_t>(b)],
                               vals[static_cast<std::size_t>(c)]});
        if (val > alpha) continue;
        std::vector<int> col = {edge_slot(a, b), edge_slot(a, c), edge_slot(b, c)};
        std::sort(col.begin(), col.end());
        d2.push_back(col);
      }
  int r1 = gf2_rank(d1);
  int r2 = gf2_rank(d2);
  BettiPair out;
  out.b0 = nv - r1;
  out.b1 = static_cast<int>(eins.size()) - r1 - r2;
  return out;
}

// True iff the bottleneck distance between two diagrams (restricted to one
// dimension) is <= eps: perfect matching where each point may match a point
// of the other diagram within L-infinity eps, or the diagonal if its half
// persistence is <= eps. Kuhn's algorithm on the augmented bipartite graph.
inline bool bottleneck_within(const topoclasp::PersistenceDiagram& a,
                              const topoclasp::PersistenceDiagram& b, int dim,
                              double eps) {
  auto pa = a.in_dim(dim);
  auto pb = b.in_dim(dim);
  int na = static_cast<int>(pa.size());
  int nb = static_cast<int>(pb.size());
  int total = na + nb;  // left: pa then nb diagonal slots; right: pb then na slots
  auto linf = [](const topoclasp::DiagramPoint& x, const topoclasp::DiagramPoint& y) {
    return std::max(std::abs(x.birth - y.birth), std::abs(x.death - y.death));
  };
  auto half_pers = [](const topoclasp::DiagramPoint& x) {
    return (x.death - x.birth) / 2.0;
  };
  std::vector<std::vector<int>> cand(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i)
    for (int j = 0; j < total; ++j) {
      bool ok;
      if (i < na && j < nb)
        ok = linf(pa[static_cast<std::size_t>(i)], pb[static_cast<std::size_t>(j)]) <= eps;
      else if (i < na)
        ok = half_pers(pa[static_cast<std::size_t>(i)]) <= eps;
      else if (j < nb)
        ok = half_pers(pb[static_cast<std::size_t>(j)]) <= eps;
      else
        ok = true;  // diagonal to diagonal
      if (ok) cand[static_cast<std::size_t>(i)].push_back(j);
    }
  std::vector<int> match_right(static_cast<std::size_t>(total), -1);
  std::vector<char> used;
  std::function<bool(int)> try_match = [&](int i) {
    for (int j : cand[static_cast<std::size_t>(i)]) {
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = 1;
      if (match_right[static_cast<std::size_t>(j)] < 0 ||
          try_match(match_right[static_cast<std::size_t>(j)])) {
        match_right[static_cast<std::size_t>(j)] = i;
        return true;
      }
    }
    return false;
  };
  int matched = 0;
  for (int i = 0; i < total; ++i) {
    used.assign(static_cast<std::size_t>(total), 0);
    if (try_match(i)) ++matched;
  }
  return matched == total;
}

inline topoclasp::Graph random_graph(topoclasp::Rng& rng, int n, double p) {
  topoclasp::Graph g;
  g.num_nodes = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) g.edges.emplace_back(i, j);
  return g;
}

inline std::vector<double> random_values(topoclasp::Rng& rng, int n) {
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (double& v : vals) v = rng.uniform();
  return vals;
}

}  // namespace oracles
