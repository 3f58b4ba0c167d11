#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "topoclasp/filtration.hpp"

using namespace topoclasp;

TEST_CASE("quantile_thresholds closed forms") {
  SECTION("(1,2,3,4) with N=2 -> (2.5, 4)") {
    auto t = quantile_thresholds({1, 2, 3, 4}, 2);
    REQUIRE(t.size() == 2);
    CHECK(t[0] == Catch::Approx(2.5).margin(1e-15));
    CHECK(t[1] == 4.0);
  }
  SECTION("constant values collapse to one threshold") {
    auto t = quantile_thresholds({3.5, 3.5, 3.5, 3.5}, 7);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == 3.5);
  }
  SECTION("(0,10) with N=1 -> (10)") {
    auto t = quantile_thresholds({0, 10}, 1);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == 10.0);
  }
  SECTION("ascending, deduplicated, last is the max") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      auto vals = oracles::random_values(rng, 1 + static_cast<int>(rng.below(15)));
      auto t = quantile_thresholds(vals, 1 + static_cast<int>(rng.below(8)));
      REQUIRE(!t.empty());
      CHECK(t.back() == *std::max_element(vals.begin(), vals.end()));
      for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
      CHECK(t.front() >= *std::min_element(vals.begin(), vals.end()));
    }
  }
  SECTION("contract violations") {
    CHECK_THROWS_AS(quantile_thresholds({}, 3), ContractError);
    CHECK_THROWS_AS(quantile_thresholds({1.0}, 0), ContractError);
  }
}

TEST_CASE("enumerate_triangles") {
  SECTION("C4 has none") {
    Graph g;
    g.num_nodes = 4;
    g.edges = {{0, 1}, {0, 3}, {1, 2}, {2, 3}};
    CHECK(enumerate_triangles(g).empty());
  }
  SECTION("K4 has all four") {
    Graph g;
    g.num_nodes = 4;
    g.edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    auto tris = enumerate_triangles(g);
    std::vector<std::array<int, 3>> expect = {
        {0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    CHECK(tris == expect);
  }
  SECTION("matches the brute-force count on random graphs") {
    Rng rng(11);
    for (int trial = 0; trial < 15; ++trial) {
      Graph g = oracles::random_graph(rng, 12, 0.45);
      std::set<std::pair<int, int>> es(g.edges.begin(), g.edges.end());
      auto has = [&](int a, int b) {
        return es.count({std::min(a, b), std::max(a, b)}) > 0;
      };
      std::vector<std::array<int, 3>> brute;
      for (int u = 0; u < g.num_nodes; ++u)
        for (int v = u + 1; v < g.num_nodes; ++v)
          for (int w = v + 1; w < g.num_nodes; ++w)
            if (has(u, v) && has(u, w) && has(v, w)) brute.push_back({u, v, w});
      CHECK(enumerate_triangles(g) == brute);
    }
  }
}

TEST_CASE("sublevel_filtration assigns max-of-vertices values") {
  Graph tri;
  tri.num_nodes = 3;
  tri.edges = {{0, 1}, {0, 2}, {1, 2}};
  auto filt = sublevel_filtration(tri, {1, 2, 3}, {3});
  REQUIRE(filt.vertices.size() == 3);
  CHECK(filt.vertices[0].value == 1.0);
  CHECK(filt.vertices[1].value == 2.0);
  CHECK(filt.vertices[2].value == 3.0);
  REQUIRE(filt.edges.size() == 3);
  CHECK(filt.edges[0].value == 2.0);  // (0,1)
  CHECK(filt.edges[1].value == 3.0);  // (0,2)
  CHECK(filt.edges[2].value == 3.0);  // (1,2)
  REQUIRE(filt.triangles.size() == 1);
  CHECK(filt.triangles[0].value == 3.0);
  CHECK(filt.cap() == 3.0);
}

TEST_CASE("sublevel_filtration on a single node") {
  Graph g;
  g.num_nodes = 1;
  auto filt = sublevel_filtration(g, {0.25}, {0.5, 1.0});
  REQUIRE(filt.vertices.size() == 1);
  CHECK(filt.vertices[0].node == 0);
  CHECK(filt.vertices[0].value == 0.25);
  CHECK(filt.edges.empty());
  CHECK(filt.triangles.empty());
  CHECK(filt.cap() == 1.0);
}

TEST_CASE("cap excludes simplices above the last threshold") {
  Graph path;
  path.num_nodes = 3;
  path.edges = {{0, 1}, {1, 2}};
  auto filt = sublevel_filtration(path, {0, 1, 2}, {1});
  REQUIRE(filt.vertices.size() == 2);
  CHECK(filt.vertices[0].node == 0);
  CHECK(filt.vertices[1].node == 1);
  REQUIRE(filt.edges.size() == 1);
  CHECK(filt.edges[0].u == 0);
  CHECK(filt.edges[0].v == 1);
  CHECK(filt.edges[0].value == 1.0);
}

TEST_CASE("faces never arrive after cofaces") {
  Rng rng(19);
  for (int trial = 0; trial < 15; ++trial) {
    Graph g = oracles::random_graph(rng, 11, 0.45);
    auto vals = oracles::random_values(rng, g.num_nodes);
    auto thresholds = quantile_thresholds(vals, 5);
    auto filt = sublevel_filtration(g, vals, thresholds);

    // Quantile caps sit at the max value, so nothing is dropped here.
    CHECK(static_cast<int>(filt.vertices.size()) == g.num_nodes);
    CHECK(filt.edges.size() == g.edges.size());

    for (const auto& e : filt.edges) {
      CHECK(e.value == std::max(vals[static_cast<std::size_t>(e.u)],
                                vals[static_cast<std::size_t>(e.v)]));
      CHECK(e.value >= vals[static_cast<std::size_t>(e.u)]);
      CHECK(e.value >= vals[static_cast<std::size_t>(e.v)]);
    }
    std::map<std::pair<int, int>, double> edge_val;
    for (const auto& e : filt.edges) edge_val[{e.u, e.v}] = e.value;
    for (const auto& t : filt.triangles) {
      CHECK(t.value >= edge_val.at({t.u, t.v}));
      CHECK(t.value >= edge_val.at({t.u, t.w}));
      CHECK(t.value >= edge_val.at({t.v, t.w}));
      CHECK(t.value == std::max({vals[static_cast<std::size_t>(t.u)],
                                 vals[static_cast<std::size_t>(t.v)],
                                 vals[static_cast<std::size_t>(t.w)]}));
    }
  }
}

TEST_CASE("sublevel_filtration contract violations") {
  Graph g;
  g.num_nodes = 2;
  g.edges = {{0, 1}};
  CHECK_THROWS_AS(sublevel_filtration(g, {0.0}, {1.0}), ContractError);
  CHECK_THROWS_AS(sublevel_filtration(g, {0.0, 0.0}, {}), ContractError);
}
