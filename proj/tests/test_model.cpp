#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "topoclasp/model.hpp"

using namespace topoclasp;

namespace {

Graph make_graph(int n, std::vector<std::pair<int, int>> edges, int label,
                 std::vector<double> features, int d_in) {
  Graph g;
  g.num_nodes = n;
  g.edges = std::move(edges);
  std::sort(g.edges.begin(), g.edges.end());
  g.label = label;
  g.feature_dim = d_in;
  g.node_features = std::move(features);
  return g;
}

Dataset two_graph_ds() {
  Dataset ds;
  ds.name = "toy";
  ds.num_classes = 2;
  ds.feature_dim = 2;
  ds.graphs.push_back(make_graph(3, {{0, 1}, {1, 2}}, 0,
                                 {0.5, -0.2, 1.0, 0.3, -0.4, 0.8}, 2));
  ds.graphs.push_back(make_graph(2, {{0, 1}}, 1, {0.1, 0.9, -0.6, 0.4}, 2));
  return ds;
}

std::vector<std::vector<double>> flat_topo(const Dataset& ds, int d_topo, Rng& rng) {
  std::vector<std::vector<double>> rows(ds.graphs.size());
  for (auto& r : rows) {
    r.resize(static_cast<std::size_t>(d_topo));
    for (double& x : r) x = 2.0 * rng.uniform() - 1.0;
  }
  return rows;
}

struct ForwardOut {
  ad::Tensor z, u, logits, p;
};

ForwardOut run_forward(ModelParams& params, const Batch& batch) {
  ad::Tape tape;
  BoundParams bp = bind_params(tape, params);
  auto x = tape.input(batch.x);
  auto topo = tape.input(batch.topo);
  auto z = gin_forward(tape, bp, params, batch, x);
  auto u = topo_forward(tape, bp, params, topo);
  auto fused = fuse_and_classify(tape, bp, params, z, u);
  return {tape.val(z), tape.val(u), tape.val(fused.logits), tape.val(fused.p)};
}

}  // namespace

TEST_CASE("parameter initialization") {
  Rng rng(7);
  ModelParams p = ModelParams::init(5, 13, 8, 2, 4, 3, rng);
  CHECK(p.layers() == 3);
  CHECK(p.gin[0].w1.rows == 8);
  CHECK(p.gin[0].w1.cols == 5);
  CHECK(p.gin[1].w1.cols == 8);
  CHECK(p.fusion_w.rows == 8);
  CHECK(p.fusion_w.cols == 16);
  CHECK(p.cls_w.rows == 2);
  CHECK(p.proj_w.rows == 4);

  SECTION("weights respect the Glorot bound; biases and eps start at zero") {
    p.for_each([](const std::string& name, ad::Tensor& t) {
      if (name.find(".b") != std::string::npos || name.find("eps") != std::string::npos) {
        for (double x : t.v) CHECK(x == 0.0);
      } else {
        double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
        for (double x : t.v) {
          CHECK(x <= limit);
          CHECK(x >= -limit);
        }
      }
    });
  }
  SECTION("same seed reproduces, different seed does not") {
    Rng r1(42), r2(42), r3(43);
    ModelParams a = ModelParams::init(5, 13, 8, 2, 4, 3, r1);
    ModelParams b = ModelParams::init(5, 13, 8, 2, 4, 3, r2);
    ModelParams c = ModelParams::init(5, 13, 8, 2, 4, 3, r3);
    CHECK(a.gin[0].w1.v == b.gin[0].w1.v);
    CHECK(a.cls_w.v == b.cls_w.v);
    CHECK(a.gin[0].w1.v != c.gin[0].w1.v);
  }
  SECTION("non-positive dimensions rejected") {
    Rng r(0);
    CHECK_THROWS_AS(ModelParams::init(0, 1, 1, 1, 1, 1, r), ConfigError);
    CHECK_THROWS_AS(ModelParams::init(1, 1, 1, 1, 1, 0, r), ConfigError);
  }
}

TEST_CASE("for_each order is stable and addressable") {
  Rng rng(3);
  ModelParams p = ModelParams::init(2, 3, 4, 2, 2, 2, rng);
  std::vector<std::string> names;
  p.for_each([&](const std::string& n, ad::Tensor&) { names.push_back(n); });
  std::vector<std::string> expect = {
      "gin0.eps", "gin0.w1", "gin0.b1", "gin0.w2", "gin0.b2",
      "gin1.eps", "gin1.w1", "gin1.b1", "gin1.w2", "gin1.b2",
      "topo.w1",  "topo.b1", "topo.w2", "topo.b2",
      "fusion.w", "fusion.b", "cls.w",  "cls.b",   "proj.w"};
  CHECK(names == expect);

  ad::Tape tape;
  BoundParams bp = bind_params(tape, p);
  CHECK(bp.names == expect);
  CHECK(bp.ref(p.cls_w) == bp.refs[16]);
  ad::Tensor stranger(1, 1);
  CHECK_THROWS_AS(bp.ref(stranger), ContractError);
}

TEST_CASE("GIN on a single node with identity MLPs is a double relu") {
  Rng rng(11);
  ModelParams p = ModelParams::init(2, 3, 2, 2, 2, 1, rng);
  p.gin[0].w1.v = {1, 0, 0, 1};
  p.gin[0].w2.v = {1, 0, 0, 1};

  Dataset ds;
  ds.num_classes = 2;
  ds.feature_dim = 2;
  ds.graphs.push_back(make_graph(1, {}, 0, {0.7, -0.3}, 2));
  std::vector<std::vector<double>> topo = {{0.0, 0.0, 0.0}};
  Batch batch = make_batch(ds, topo, {0});

  ad::Tape tape;
  BoundParams bp = bind_params(tape, p);
  auto z = gin_forward(tape, bp, p, batch, tape.input(batch.x));
  CHECK(tape.val(z).at(0, 0) == 0.7);
  CHECK(tape.val(z).at(0, 1) == 0.0);
}

TEST_CASE("identical graphs in one batch produce identical rows") {
  Dataset ds = two_graph_ds();
  Rng rng(13);
  auto topo = flat_topo(ds, 4, rng);
  ModelParams p = ModelParams::init(2, 4, 6, 2, 3, 2, rng);
  Batch batch = make_batch(ds, topo, {0, 1, 0});
  auto out = run_forward(p, batch);
  for (int j = 0; j < out.z.cols; ++j)
    CHECK(out.z.at(0, j) == Catch::Approx(out.z.at(2, j)).margin(1e-13));
  for (int j = 0; j < out.logits.cols; ++j)
    CHECK(out.logits.at(0, j) == Catch::Approx(out.logits.at(2, j)).margin(1e-13));
}

TEST_CASE("gin_forward is invariant to node relabeling") {
  Rng rng(17);
  ModelParams p = ModelParams::init(2, 4, 6, 2, 3, 2, rng);

  Dataset ds;
  ds.num_classes = 2;
  ds.feature_dim = 2;
  // A 4-cycle with distinguishable features, then the same graph relabeled
  // by the permutation (0 1 2 3) -> (2 0 3 1).
  ds.graphs.push_back(make_graph(4, {{0, 1}, {0, 3}, {1, 2}, {2, 3}}, 0,
                                 {1, 0, 0, 1, 1, 1, 0.5, -0.5}, 2));
  ds.graphs.push_back(make_graph(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}}, 0,
                                 {0, 1, 0.5, -0.5, 1, 0, 1, 1}, 2));
  auto topo = flat_topo(ds, 4, rng);
  topo[1] = topo[0];
  Batch batch = make_batch(ds, topo, {0, 1});
  auto out = run_forward(p, batch);
  for (int j = 0; j < out.z.cols; ++j)
    CHECK(out.z.at(0, j) == Catch::Approx(out.z.at(1, j)).margin(1e-9));
  for (int j = 0; j < out.logits.cols; ++j)
    CHECK(out.logits.at(0, j) == Catch::Approx(out.logits.at(1, j)).margin(1e-9));
}

TEST_CASE("topo_forward") {
  Rng rng(19);
  ModelParams p = ModelParams::init(2, 4, 6, 2, 3, 1, rng);
  SECTION("zero input maps to zero with zero biases") {
    ad::Tape tape;
    BoundParams bp = bind_params(tape, p);
    auto u = topo_forward(tape, bp, p, tape.input(ad::Tensor(3, 4)));
    for (double x : tape.val(u).v) CHECK(x == 0.0);
  }
  SECTION("identical rows map identically") {
    ad::Tensor topo(2, 4);
    for (int j = 0; j < 4; ++j) {
      topo.at(0, j) = 0.3 * j - 0.5;
      topo.at(1, j) = 0.3 * j - 0.5;
    }
    ad::Tape tape;
    BoundParams bp = bind_params(tape, p);
    auto u = topo_forward(tape, bp, p, tape.input(topo));
    for (int j = 0; j < tape.val(u).cols; ++j)
      CHECK(tape.val(u).at(0, j) == tape.val(u).at(1, j));
  }
}

TEST_CASE("fusion head") {
  Dataset ds = two_graph_ds();
  Rng rng(23);
  auto topo = flat_topo(ds, 4, rng);
  Batch batch = make_batch(ds, topo, {0, 1});

  SECTION("projection rows are unit length") {
    ModelParams p = ModelParams::init(2, 4, 6, 2, 3, 2, rng);
    auto out = run_forward(p, batch);
    for (int i = 0; i < out.p.rows; ++i) {
      double sq = 0.0;
      for (int j = 0; j < out.p.cols; ++j) sq += out.p.at(i, j) * out.p.at(i, j);
      CHECK(std::sqrt(sq) == Catch::Approx(1.0).margin(1e-9));
    }
  }
  SECTION("zero classifier weights give uniform logits") {
    ModelParams p = ModelParams::init(2, 4, 6, 2, 3, 2, rng);
    std::fill(p.cls_w.v.begin(), p.cls_w.v.end(), 0.0);
    auto out = run_forward(p, batch);
    for (int i = 0; i < out.logits.rows; ++i)
      for (int j = 0; j < out.logits.cols; ++j) CHECK(out.logits.at(i, j) == 0.0);
  }
}

TEST_CASE("batch of one agrees with a stacked batch") {
  Dataset ds = two_graph_ds();
  Rng rng(29);
  auto topo = flat_topo(ds, 4, rng);
  ModelParams p = ModelParams::init(2, 4, 6, 2, 3, 2, rng);
  auto stacked = run_forward(p, make_batch(ds, topo, {0, 1}));
  auto solo0 = run_forward(p, make_batch(ds, topo, {0}));
  auto solo1 = run_forward(p, make_batch(ds, topo, {1}));
  for (int j = 0; j < stacked.logits.cols; ++j) {
    CHECK(stacked.logits.at(0, j) == Catch::Approx(solo0.logits.at(0, j)).margin(1e-12));
    CHECK(stacked.logits.at(1, j) == Catch::Approx(solo1.logits.at(0, j)).margin(1e-12));
  }
}

TEST_CASE("classify_single uses the shared classifier head") {
  Rng rng(31);
  ModelParams p = ModelParams::init(2, 4, 3, 2, 2, 1, rng);
  ad::Tape tape;
  BoundParams bp = bind_params(tape, p);
  ad::Tensor h(1, 3);
  h.v = {1.0, -2.0, 0.5};
  auto logits = classify_single(tape, bp, p, tape.input(h));
  for (int c = 0; c < 2; ++c) {
    double expect = p.cls_b.v[static_cast<std::size_t>(c)];
    for (int j = 0; j < 3; ++j) expect += h.v[static_cast<std::size_t>(j)] * p.cls_w.at(c, j);
    CHECK(tape.val(logits).at(0, c) == Catch::Approx(expect).margin(1e-15));
  }
}

TEST_CASE("make_batch layout and contracts") {
  Dataset ds = two_graph_ds();
  Rng rng(37);
  auto topo = flat_topo(ds, 4, rng);
  Batch b = make_batch(ds, topo, {1, 0});
  CHECK(b.num_graphs == 2);
  CHECK(b.x.rows == 5);
  CHECK(b.node_graph == std::vector<int>{0, 0, 1, 1, 1});
  CHECK(b.labels == std::vector<int>{1, 0});
  // Both orientations of each edge, offset by the graph's node base.
  CHECK(b.edge_src == std::vector<int>{0, 1, 2, 3, 3, 4});
  CHECK(b.edge_dst == std::vector<int>{1, 0, 3, 2, 4, 3});
  CHECK(b.x.at(0, 0) == 0.1);   // graph 1 first
  CHECK(b.x.at(2, 0) == 0.5);

  CHECK_THROWS_AS(make_batch(ds, topo, {}), ContractError);
  Dataset bad = ds;
  bad.graphs[0].num_nodes = 0;
  CHECK_THROWS_AS(make_batch(bad, topo, {0}), ContractError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(41);
  ModelParams p = ModelParams::init(3, 5, 4, 2, 2, 2, rng);
  // Make values non-trivial.
  p.gin[0].eps.v[0] = 0.125;
  p.cls_b.v[0] = -0.75;
  std::string path = "checkpoint_test.bin";
  save_checkpoint(path, p);
  ModelParams q = load_checkpoint(path);
  CHECK(q.d_in == 3);
  CHECK(q.layers() == 2);
  std::vector<double> pv, qv;
  p.for_each([&](const std::string&, ad::Tensor& t) {
    pv.insert(pv.end(), t.v.begin(), t.v.end());
  });
  q.for_each([&](const std::string&, ad::Tensor& t) {
    qv.insert(qv.end(), t.v.begin(), t.v.end());
  });
  CHECK(pv == qv);

  SECTION("bad magic rejected") {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f);
    std::fputs("NOTACKPT", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  SECTION("truncated payload rejected") {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f);
    std::fwrite(kCheckpointMagic, 1, 8, f);
    std::fclose(f);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  SECTION("missing file rejected") {
    CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint.bin"), FormatError);
  }
  std::remove(path.c_str());
}
