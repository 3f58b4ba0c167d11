#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "topoclasp/common.hpp"
#include "topoclasp/filtration.hpp"
#include "topoclasp/graph.hpp"
#include "topoclasp/persistence.hpp"
#include "topoclasp/spectral.hpp"

namespace topoclasp {

enum class FiltrationSource { hks, degree, closeness };

inline FiltrationSource parse_filtration_source(const std::string& s) {
  if (s == "hks") return FiltrationSource::hks;
  if (s == "degree") return FiltrationSource::degree;
  if (s == "closeness") return FiltrationSource::closeness;
  throw ConfigError("unknown filtration source: " + s);
}

inline const char* to_string(FiltrationSource s) {
  switch (s) {
    case FiltrationSource::hks: return "hks";
    case FiltrationSource::degree: return "degree";
    case FiltrationSource::closeness: return "closeness";
  }
  return "?";
}

struct VectorizeConfig {
  FiltrationSource source = FiltrationSource::hks;
  int num_scales = 10;      // HKS diffusion times; degree/closeness use 1 scale
  double t_min = 0.1;
  double t_max = 10.0;
  int num_thresholds = 10;  // quantile levels per scale

  int scales_used() const {
    return source == FiltrationSource::hks ? num_scales : 1;
  }
};

// Per (scale, dim) block: num_thresholds Betti samples followed by
// [total persistence, max persistence, point count]. Blocks are laid out
// scale-major, dim 0 before dim 1.
struct VectorLayout {
  int scales = 0;
  int thresholds = 0;
  static constexpr int kStats = 3;

  int block_len() const { return thresholds + kStats; }
  int length() const { return scales * 2 * block_len(); }
  int offset(int scale, int dim) const {
    return (scale * 2 + dim) * block_len();
  }

  std::vector<std::string> column_names(FiltrationSource source) const {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(length()));
    char buf[96];
    for (int s = 0; s < scales; ++s) {
      for (int d = 0; d < 2; ++d) {
        for (int k = 0; k < thresholds; ++k) {
          std::snprintf(buf, sizeof buf, "%s_s%d_d%d_betti%d", to_string(source), s, d, k);
          names.emplace_back(buf);
        }
        std::snprintf(buf, sizeof buf, "%s_s%d_d%d_total_pers", to_string(source), s, d);
        names.emplace_back(buf);
        std::snprintf(buf, sizeof buf, "%s_s%d_d%d_max_pers", to_string(source), s, d);
        names.emplace_back(buf);
        std::snprintf(buf, sizeof buf, "%s_s%d_d%d_count", to_string(source), s, d);
        names.emplace_back(buf);
      }
    }
    return names;
  }
};

inline VectorLayout layout_for(const VectorizeConfig& cfg) {
  return VectorLayout{cfg.scales_used(), cfg.num_thresholds};
}

// Node scalar fields feeding the sublevel filtration, one column per scale.
inline std::vector<std::vector<double>> filtration_values(
    const Graph& g, const VectorizeConfig& cfg) {
  std::vector<std::vector<double>> cols;
  switch (cfg.source) {
    case FiltrationSource::hks: {
      HksField field = hks(g, default_hks_times(cfg.num_scales, cfg.t_min, cfg.t_max));
      cols.resize(field.times.size());
      for (std::size_t s = 0; s < field.times.size(); ++s) {
        cols[s].resize(static_cast<std::size_t>(g.num_nodes));
        for (int v = 0; v < g.num_nodes; ++v)
          cols[s][static_cast<std::size_t>(v)] = field.values(v, static_cast<Eigen::Index>(s));
      }
      break;
    }
    case FiltrationSource::degree: {
      auto deg = degrees(g);
      cols.emplace_back(deg.begin(), deg.end());
      break;
    }
    case FiltrationSource::closeness:
      cols.push_back(closeness_centrality(g));
      break;
  }
  return cols;
}

// Fixed-length topological feature vector for one graph. Betti curves are
// sampled at the (deduplicated) quantile thresholds and padded by repeating
// the last sample so the layout stays rectangular.
inline std::vector<double> vectorize_graph(const Graph& g, const VectorizeConfig& cfg) {
  if (g.num_nodes <= 0) throw ContractError("vectorize_graph: empty graph");
  VectorLayout layout = layout_for(cfg);
  std::vector<double> out(static_cast<std::size_t>(layout.length()), 0.0);
  auto value_cols = filtration_values(g, cfg);
  for (int s = 0; s < layout.scales; ++s) {
    const auto& vals = value_cols[static_cast<std::size_t>(s)];
    auto thr = quantile_thresholds(vals, cfg.num_thresholds);
    auto filt = sublevel_filtration(g, vals, thr);
    PersistenceDiagram dgm = reduce_boundary(filt);
    for (int dim = 0; dim < 2; ++dim) {
      auto betti = betti_curve(dgm, dim, thr);
      double* block = out.data() + layout.offset(s, dim);
      for (int k = 0; k < cfg.num_thresholds; ++k) {
        std::size_t src = std::min(static_cast<std::size_t>(k), betti.size() - 1);
        block[k] = static_cast<double>(betti[src]);
      }
      double total = 0.0, max_pers = 0.0;
      int count = 0;
      for (const auto& p : dgm.points) {
        if (p.dim != dim) continue;
        double pers = p.death - p.birth;
        total += pers;
        max_pers = std::max(max_pers, pers);
        ++count;
      }
      block[cfg.num_thresholds + 0] = total;
      block[cfg.num_thresholds + 1] = max_pers;
      block[cfg.num_thresholds + 2] = static_cast<double>(count);
    }
  }
  return out;
}

inline std::vector<std::vector<double>> vectorize_dataset(
    const Dataset& ds, const VectorizeConfig& cfg, int jobs = 1) {
  std::vector<std::vector<double>> rows(ds.graphs.size());
  parallel_for(ds.graphs.size(), jobs, [&](std::size_t i) {
    rows[i] = vectorize_graph(ds.graphs[i], cfg);
  });
  return rows;
}

// Column z-scoring fitted on training rows only. Standard deviations are
// population (divide by n) and floored at 1e-8 so constant columns map to 0.
struct Standardizer {
  std::vector<double> mean, stddev;

  static Standardizer fit(const std::vector<std::vector<double>>& rows,
                          const std::vector<int>& indices) {
    if (indices.empty()) throw ContractError("standardizer: no rows to fit");
    std::size_t dim = rows[static_cast<std::size_t>(indices[0])].size();
    Standardizer s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 0.0);
    for (int idx : indices) {
      const auto& r = rows[static_cast<std::size_t>(idx)];
      if (r.size() != dim) throw ContractError("standardizer: ragged rows");
      for (std::size_t j = 0; j < dim; ++j) s.mean[j] += r[j];
    }
    for (double& m : s.mean) m /= static_cast<double>(indices.size());
    for (int idx : indices) {
      const auto& r = rows[static_cast<std::size_t>(idx)];
      for (std::size_t j = 0; j < dim; ++j) {
        double d = r[j] - s.mean[j];
        s.stddev[j] += d * d;
      }
    }
    for (double& v : s.stddev)
      v = std::max(std::sqrt(v / static_cast<double>(indices.size())), 1e-8);
    return s;
  }

  static Standardizer fit(const std::vector<std::vector<double>>& rows) {
    std::vector<int> all(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) all[i] = static_cast<int>(i);
    return fit(rows, all);
  }

  std::vector<double> apply(const std::vector<double>& row) const {
    if (row.size() != mean.size()) throw ContractError("standardizer: dim mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
      out[j] = (row[j] - mean[j]) / stddev[j];
    return out;
  }
};

}  // namespace topoclasp
