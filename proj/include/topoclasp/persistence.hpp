#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "topoclasp/common.hpp"
#include "topoclasp/filtration.hpp"

namespace topoclasp {

// Diagram point in homology dimension 0 or 1. Essential classes survive the
// whole filtration; their death is capped at the max threshold and they are
// kept even when birth equals the cap.
struct DiagramPoint {
  double birth;
  double death;
  int dim;
  bool essential;
};

struct PersistenceDiagram {
  std::vector<DiagramPoint> points;
  // Non-essential pairs with birth == death carry no information and are
  // dropped from `points`, but counted here per dimension.
  std::array<long, 2> zero_persistence{0, 0};
  double cap = 0.0;

  std::vector<DiagramPoint> in_dim(int dim) const {
    std::vector<DiagramPoint> out;
    for (const auto& p : points)
      if (p.dim == dim) out.push_back(p);
    return out;
  }
};

namespace detail {

// Total filtration order: by value, then vertices < edges < triangles, then
// lexicographic on the vertex tuple. The diagram is invariant to the tie
// order; the pairing is not, so it is pinned here.
struct OrderedSimplex {
  double value;
  int dim;
  std::array<int, 3> verts;  // unused slots hold -1

  bool operator<(const OrderedSimplex& o) const {
    if (value != o.value) return value < o.value;
    if (dim != o.dim) return dim < o.dim;
    return verts < o.verts;
  }
};

inline std::vector<OrderedSimplex> filtration_order(const SimplicialFiltration& filt) {
  std::vector<OrderedSimplex> order;
  order.reserve(filt.vertices.size() + filt.edges.size() + filt.triangles.size());
  for (const auto& v : filt.vertices)
    order.push_back({v.value, 0, {v.node, -1, -1}});
  for (const auto& e : filt.edges)
    order.push_back({e.value, 1, {e.u, e.v, -1}});
  for (const auto& t : filt.triangles)
    order.push_back({t.value, 2, {t.u, t.v, t.w}});
  std::sort(order.begin(), order.end());
  return order;
}

// Boundary columns as sorted row-index lists over GF(2). Throws if a face is
// missing or does not precede its coface.
inline std::vector<std::vector<int>> boundary_columns(
    const std::vector<OrderedSimplex>& order) {
  std::map<int, int> vertex_at;
  std::map<std::pair<int, int>, int> edge_at;
  std::vector<std::vector<int>> cols(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto& s = order[j];
    if (s.dim == 0) {
      vertex_at[s.verts[0]] = static_cast<int>(j);
    } else if (s.dim == 1) {
      for (int k = 0; k < 2; ++k) {
        auto it = vertex_at.find(s.verts[k]);
        if (it == vertex_at.end() || it->second >= static_cast<int>(j))
          throw ContractError("persistence: face-before-coface violated at an edge");
        cols[j].push_back(it->second);
      }
      edge_at[{s.verts[0], s.verts[1]}] = static_cast<int>(j);
    } else {
      const std::array<std::pair<int, int>, 3> faces = {
          std::pair<int, int>{s.verts[0], s.verts[1]},
          std::pair<int, int>{s.verts[0], s.verts[2]},
          std::pair<int, int>{s.verts[1], s.verts[2]}};
      for (const auto& f : faces) {
        auto it = edge_at.find(f);
        if (it == edge_at.end() || it->second >= static_cast<int>(j))
          throw ContractError("persistence: face-before-coface violated at a triangle");
        cols[j].push_back(it->second);
      }
    }
    std::sort(cols[j].begin(), cols[j].end());
  }
  return cols;
}

}  // namespace detail

// Standard persistence by GF(2) column reduction in filtration order. A
// column whose reduced pivot is row r pairs simplex r (birth) with the
// reducing simplex (death); unpaired vertices and edges become essential
// classes capped at the max threshold.
inline PersistenceDiagram reduce_boundary(const SimplicialFiltration& filt) {
  auto order = detail::filtration_order(filt);
  auto cols = detail::boundary_columns(order);
  const int m = static_cast<int>(order.size());

  std::vector<int> pivot_owner(m, -1);
  std::vector<char> paired(m, 0);
  std::vector<int> scratch;
  PersistenceDiagram dgm;
  dgm.cap = filt.cap();

  auto emit_pair = [&](int birth_idx, int death_idx) {
    int dim = order[birth_idx].dim;
    if (dim > 1) return;  // dim-2 pairs would need tetrahedra; never born here
    double b = order[birth_idx].value, d = order[death_idx].value;
    if (b == d)
      ++dgm.zero_persistence[dim];
    else
      dgm.points.push_back({b, d, dim, false});
  };

  for (int j = 0; j < m; ++j) {
    auto& col = cols[j];
    while (!col.empty()) {
      int pivot = col.back();
      int owner = pivot_owner[pivot];
      if (owner < 0) {
        pivot_owner[pivot] = j;
        paired[pivot] = 1;
        emit_pair(pivot, j);
        break;
      }
      scratch.clear();
      std::set_symmetric_difference(col.begin(), col.end(), cols[owner].begin(),
                                    cols[owner].end(), std::back_inserter(scratch));
      col.swap(scratch);
    }
  }
  // Creators (zeroed or empty columns) that were never killed are essential.
  for (int j = 0; j < m; ++j) {
    if (cols[j].empty() && !paired[j] && order[j].dim <= 1)
      dgm.points.push_back({order[j].value, dgm.cap, order[j].dim, true});
  }
  return dgm;
}

// Elder-rule union-find over vertices and edges in the same filtration
// order; fast path and cross-check for dimension 0.
inline PersistenceDiagram union_find_dim0(const SimplicialFiltration& filt) {
  auto order = detail::filtration_order(filt);
  PersistenceDiagram dgm;
  dgm.cap = filt.cap();

  std::map<int, int> slot_of_node;          // graph node -> union-find slot
  std::vector<int> parent;                  // union-find forest
  std::vector<int> creator;                 // slot -> order index of creating vertex
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto& s = order[j];
    if (s.dim == 0) {
      int slot = static_cast<int>(parent.size());
      parent.push_back(slot);
      creator.push_back(static_cast<int>(j));
      slot_of_node[s.verts[0]] = slot;
    } else if (s.dim == 1) {
      auto iu = slot_of_node.find(s.verts[0]);
      auto iv = slot_of_node.find(s.verts[1]);
      if (iu == slot_of_node.end() || iv == slot_of_node.end())
        throw ContractError("persistence: edge precedes an endpoint vertex");
      int ru = find(iu->second), rv = find(iv->second);
      if (ru == rv) continue;  // cycle-creating edge; dim-1 territory
      // Elder rule: the component created later dies.
      int elder = (creator[ru] < creator[rv]) ? ru : rv;
      int younger = (elder == ru) ? rv : ru;
      parent[younger] = elder;
      double b = order[creator[younger]].value, d = s.value;
      if (b == d)
        ++dgm.zero_persistence[0];
      else
        dgm.points.push_back({b, d, 0, false});
    }
  }
  for (std::size_t slot = 0; slot < parent.size(); ++slot)
    if (find(static_cast<int>(slot)) == static_cast<int>(slot))
      dgm.points.push_back({order[creator[slot]].value, dgm.cap, 0, true});
  return dgm;
}

// Entry j counts diagram points in `dim` with birth <= thresholds[j] < death,
// plus essential points with birth <= thresholds[j].
inline std::vector<int> betti_curve(const PersistenceDiagram& dgm, int dim,
                                    const std::vector<double>& thresholds) {
  std::vector<int> curve(thresholds.size(), 0);
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    double alpha = thresholds[j];
    for (const auto& p : dgm.points) {
      if (p.dim != dim || p.birth > alpha) continue;
      if (p.essential || alpha < p.death) ++curve[j];
    }
  }
  return curve;
}

// Dump format used by the `features` CLI: one line per point,
// "dim birth death essential_flag", 9 significant digits.
inline std::string format_diagram(const PersistenceDiagram& dgm) {
  std::string out;
  char buf[128];
  for (const auto& p : dgm.points) {
    std::snprintf(buf, sizeof(buf), "%d %.9g %.9g %d\n", p.dim, p.birth, p.death,
                  p.essential ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace topoclasp
