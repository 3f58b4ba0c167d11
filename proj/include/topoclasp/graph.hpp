#pragma once

#include <algorithm>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "topoclasp/common.hpp"

namespace topoclasp {

// Undirected, unweighted graph. Edges are stored once with u < v, sorted and
// deduplicated; node_features is row-major [num_nodes x feature_dim].
struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> node_features;
  int feature_dim = 0;
  int label = 0;

  double feature(int node, int k) const {
    return node_features[static_cast<std::size_t>(node) * feature_dim + k];
  }
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  int num_classes = 0;
  int feature_dim = 0;
};

inline std::vector<int> degrees(const Graph& g) {
  std::vector<int> deg(g.num_nodes, 0);
  for (auto [u, v] : g.edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

// Sorted neighbor lists.
inline std::vector<std::vector<int>> adjacency(const Graph& g) {
  std::vector<std::vector<int>> adj(g.num_nodes);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("missing file: " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad integer '" + s + "' in " + where);
  }
}

inline std::pair<long, long> parse_pair(const std::string& line,
                                        const std::string& where) {
  auto comma = line.find(',');
  if (comma == std::string::npos)
    throw FormatError("expected 'i, j' in " + where + ": '" + line + "'");
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return std::string();
    return s.substr(b, e - b + 1);
  };
  return {parse_int(trim(line.substr(0, comma)), where),
          parse_int(trim(line.substr(comma + 1)), where)};
}

}  // namespace detail

// Reads the TU flat-file format: <name>_A.txt (comma-separated 1-based global
// node-id pairs, each undirected edge listed in both orientations),
// <name>_graph_indicator.txt, <name>_graph_labels.txt, and optionally
// <name>_node_labels.txt. Labels are remapped to a dense 0-based range by
// sorted order; node labels are one-hot encoded. Self-loops and duplicate
// edges are dropped, reported once per dataset on stderr.
inline Dataset parse_tu_dataset(const std::filesystem::path& dir,
                                const std::string& name) {
  namespace fs = std::filesystem;
  fs::path base = dir / name;
  auto indicator_lines =
      detail::read_lines(fs::path(base.string() + "_graph_indicator.txt"));
  auto label_lines =
      detail::read_lines(fs::path(base.string() + "_graph_labels.txt"));
  auto edge_lines = detail::read_lines(fs::path(base.string() + "_A.txt"));

  const long num_nodes_total = static_cast<long>(indicator_lines.size());
  std::vector<int> node_graph(num_nodes_total);
  long num_graphs = 0;
  for (long i = 0; i < num_nodes_total; ++i) {
    long gid = detail::parse_int(indicator_lines[i], name + "_graph_indicator.txt");
    if (i == 0 && gid != 1)
      throw IntegrityError(name + ": graph indicator must start at 1");
    if (i > 0 && (gid < node_graph[i - 1] + 1 || gid > node_graph[i - 1] + 2))
      throw IntegrityError(name + ": non-consecutive graph indicator at node " +
                           std::to_string(i + 1));
    node_graph[i] = static_cast<int>(gid - 1);
    num_graphs = std::max(num_graphs, gid);
  }
  if (static_cast<long>(label_lines.size()) != num_graphs)
    throw IntegrityError(name + ": graph label count " +
                         std::to_string(label_lines.size()) +
                         " != graph count " + std::to_string(num_graphs));

  Dataset ds;
  ds.name = name;
  ds.graphs.resize(num_graphs);
  std::vector<int> node_offset(num_graphs, 0);  // first global node per graph
  for (long i = 0; i < num_nodes_total; ++i) {
    int g = node_graph[i];
    if (ds.graphs[g].num_nodes == 0) node_offset[g] = static_cast<int>(i);
    ++ds.graphs[g].num_nodes;
  }

  long dropped_self_loops = 0, dropped_duplicates = 0;
  std::vector<std::set<std::pair<int, int>>> edge_sets(num_graphs);
  for (const auto& line : edge_lines) {
    auto [a, b] = detail::parse_pair(line, name + "_A.txt");
    if (a < 1 || a > num_nodes_total || b < 1 || b > num_nodes_total)
      throw IntegrityError(name + ": node id out of range in edge '" + line + "'");
    if (a == b) {
      ++dropped_self_loops;
      continue;
    }
    int ga = node_graph[a - 1], gb = node_graph[b - 1];
    if (ga != gb)
      throw IntegrityError(name + ": edge '" + line + "' crosses graphs");
    int u = static_cast<int>(a - 1) - node_offset[ga];
    int v = static_cast<int>(b - 1) - node_offset[ga];
    if (u > v) std::swap(u, v);
    if (!edge_sets[ga].emplace(u, v).second) ++dropped_duplicates;
  }
  long total_edges = 0;
  for (long g = 0; g < num_graphs; ++g) {
    ds.graphs[g].edges.assign(edge_sets[g].begin(), edge_sets[g].end());
    total_edges += static_cast<long>(ds.graphs[g].edges.size());
  }
  // Every undirected edge appears in both orientations in _A.txt, so
  // total_edges duplicate insertions are expected; report anything beyond.
  if (dropped_self_loops > 0 || dropped_duplicates > total_edges) {
    std::fprintf(stderr, "[topoclasp] %s: dropped %ld self-loop(s), %ld extra duplicate edge line(s)\n",
                 name.c_str(), dropped_self_loops,
                 std::max(0L, dropped_duplicates - total_edges));
  }

  // Graph labels -> dense 0-based by sorted order.
  std::vector<long> raw_labels(num_graphs);
  std::set<long> distinct;
  for (long g = 0; g < num_graphs; ++g) {
    raw_labels[g] = detail::parse_int(label_lines[g], name + "_graph_labels.txt");
    distinct.insert(raw_labels[g]);
  }
  std::map<long, int> label_map;
  for (long v : distinct) label_map.emplace(v, static_cast<int>(label_map.size()));
  for (long g = 0; g < num_graphs; ++g)
    ds.graphs[g].label = label_map.at(raw_labels[g]);
  ds.num_classes = static_cast<int>(label_map.size());

  // Optional node labels, one-hot over the distinct sorted values.
  fs::path node_label_file(base.string() + "_node_labels.txt");
  if (fs::exists(node_label_file)) {
    auto node_label_lines = detail::read_lines(node_label_file);
    if (static_cast<long>(node_label_lines.size()) != num_nodes_total)
      throw IntegrityError(name + ": node label count != node count");
    std::vector<long> raw(num_nodes_total);
    std::set<long> vals;
    for (long i = 0; i < num_nodes_total; ++i) {
      raw[i] = detail::parse_int(node_label_lines[i], name + "_node_labels.txt");
      vals.insert(raw[i]);
    }
    std::map<long, int> nl_map;
    for (long v : vals) nl_map.emplace(v, static_cast<int>(nl_map.size()));
    ds.feature_dim = static_cast<int>(nl_map.size());
    for (long g = 0; g < num_graphs; ++g) {
      Graph& gr = ds.graphs[g];
      gr.feature_dim = ds.feature_dim;
      gr.node_features.assign(
          static_cast<std::size_t>(gr.num_nodes) * gr.feature_dim, 0.0);
      for (int v = 0; v < gr.num_nodes; ++v) {
        int k = nl_map.at(raw[node_offset[g] + v]);
        gr.node_features[static_cast<std::size_t>(v) * gr.feature_dim + k] = 1.0;
      }
    }
  }
  return ds;
}

// Writes a dataset back out in the TU flat-file format (each edge in both
// orientations). Node labels are emitted as the one-hot argmax when features
// are present. parse_tu_dataset(write_tu_dataset(ds)) round-trips exactly for
// datasets that came from parse_tu_dataset.
inline void write_tu_dataset(const Dataset& ds, const std::filesystem::path& dir,
                             const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path base = dir / name;
  std::ofstream a(fs::path(base.string() + "_A.txt"));
  std::ofstream ind(fs::path(base.string() + "_graph_indicator.txt"));
  std::ofstream gl(fs::path(base.string() + "_graph_labels.txt"));
  std::ofstream nl;
  if (ds.feature_dim > 0)
    nl.open(fs::path(base.string() + "_node_labels.txt"));
  int offset = 0;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& gr = ds.graphs[g];
    gl << gr.label << "\n";
    for (int v = 0; v < gr.num_nodes; ++v) {
      ind << (g + 1) << "\n";
      if (ds.feature_dim > 0) {
        int best = 0;
        for (int k = 1; k < gr.feature_dim; ++k)
          if (gr.feature(v, k) > gr.feature(v, best)) best = k;
        nl << best << "\n";
      }
    }
    for (auto [u, v] : gr.edges) {
      a << (offset + u + 1) << ", " << (offset + v + 1) << "\n";
      a << (offset + v + 1) << ", " << (offset + u + 1) << "\n";
    }
    offset += gr.num_nodes;
  }
}

// Replaces node features with a one-hot encoding of the node degree; the
// width is max degree over the whole dataset + 1 (a structural constant).
inline Dataset degree_features(Dataset ds) {
  int max_deg = 0;
  for (const Graph& g : ds.graphs)
    for (int d : degrees(g)) max_deg = std::max(max_deg, d);
  int width = max_deg + 1;
  ds.feature_dim = width;
  for (Graph& g : ds.graphs) {
    g.feature_dim = width;
    g.node_features.assign(static_cast<std::size_t>(g.num_nodes) * width, 0.0);
    auto deg = degrees(g);
    for (int v = 0; v < g.num_nodes; ++v)
      g.node_features[static_cast<std::size_t>(v) * width + deg[v]] = 1.0;
  }
  return ds;
}

// Component-local closeness: (n_v - 1) / sum of BFS distances within v's
// component of size n_v; isolated nodes get 0.
inline std::vector<double> closeness_centrality(const Graph& g) {
  auto adj = adjacency(g);
  std::vector<double> out(g.num_nodes, 0.0);
  std::vector<int> dist(g.num_nodes);
  for (int s = 0; s < g.num_nodes; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::deque<int> queue{s};
    long total = 0, reached = 0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      total += dist[u];
      ++reached;
      for (int w : adj[u])
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
    }
    out[s] = (reached > 1) ? static_cast<double>(reached - 1) / total : 0.0;
  }
  return out;
}

inline int num_connected_components(const Graph& g) {
  auto adj = adjacency(g);
  std::vector<char> seen(g.num_nodes, 0);
  int components = 0;
  for (int s = 0; s < g.num_nodes; ++s) {
    if (seen[s]) continue;
    ++components;
    std::deque<int> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int w : adj[u])
        if (!seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
    }
  }
  return components;
}

}  // namespace topoclasp
