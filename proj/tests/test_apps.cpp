#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dagdiff/apps.hpp"
#include "dagdiff/error.hpp"
#include "dagdiff/synthetic.hpp"
#include "oracles.hpp"

using namespace dagdiff;

namespace {

MultiDagSet chain_graph(std::size_t n) {
  std::vector<Edge> fwd, bwd;
  for (VertexId i = 0; i + 1 < n; ++i) {
    fwd.push_back({i, i + 1});
    bwd.push_back({i + 1, i});
  }
  return MultiDagSet({Dag(n, fwd, Direction::PosX), Dag(n, bwd, Direction::NegX)});
}

// Two chains of length n: vertices [0,n) and [n,2n), no edges between them.
MultiDagSet two_chains(std::size_t n) {
  std::vector<Edge> fwd, bwd;
  for (VertexId base : {VertexId(0), VertexId(n)}) {
    for (VertexId i = 0; i + 1 < n; ++i) {
      fwd.push_back({base + i, base + i + 1});
      bwd.push_back({base + i + 1, base + i});
    }
  }
  return MultiDagSet({Dag(2 * n, fwd, Direction::PosX), Dag(2 * n, bwd, Direction::NegX)});
}

PipelineConfig gaussian(double bias) {
  PipelineConfig cfg;
  cfg.kernel = {KernelKind::EmbeddedGaussian, bias, 1e-12};
  return cfg;
}

// Fused result computed with dense per-direction operators.
FeatureMatrix dense_pipeline(const MultiDagSet& graph, const FeatureMatrix& pairwise,
                             const FeatureMatrix& u, const PipelineConfig& cfg) {
  std::vector<FeatureMatrix> hs;
  for (const Dag& d : graph.dags()) {
    hs.push_back(oracle::dense_propagate(d, compute_edge_weights(pairwise, d, cfg.kernel), u));
  }
  return fuse_directions(hs, cfg.fusion);
}

PairwiseEmbedding centre_tap(double scale) {
  std::vector<double> w(9, 0.0);
  w[4] = scale;
  return PairwiseEmbedding(1, 9, w, {0.0});
}

ImageBuffer banded_lightness(std::size_t h, std::size_t w, std::size_t split_row,
                             std::size_t split_col, double l0, double l1) {
  ImageBuffer l(h, w, 1);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) l.at(r, c, 0) = (r < split_row && c < split_col) ? l0 : l1;
  }
  return l;
}

}  // namespace

TEST_CASE("geometric features") {
  SUBCASE("chain along x") {
    std::vector<Vec3> pos;
    for (int i = 0; i < 6; ++i) pos.push_back({double(i), 0.0, 0.0});
    const PointCloud cloud(pos, std::vector<Vec3>(6, Vec3{0, 0, 1}), std::vector<Vec3>(6, Vec3{0.2, 0.4, 0.6}));
    const MultiDagSet graph = build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 1.5, 2});
    const FeatureMatrix f = geometric_pairwise_features(cloud, graph);
    CHECK(f.cols() == 9);
    CHECK(f(0, 0) == 1.0);
    CHECK(f(5, 0) == -1.0);
    for (VertexId i = 1; i < 5; ++i) CHECK(f(i, 0) == 0.0);
    CHECK(f(2, 5) == 1.0);
    CHECK(f(2, 7) == 0.4);
  }
  SUBCASE("isolated vertex") {
    const PointCloud cloud({{0, 0, 0}, {1, 0, 0}, {9, 9, 9}}, std::vector<Vec3>(3, Vec3{1, 0, 0}),
                           std::vector<Vec3>(3, Vec3{0, 0, 0}));
    const MultiDagSet graph = build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 2.0, 1});
    const FeatureMatrix f = geometric_pairwise_features(cloud, graph);
    for (int a = 0; a < 3; ++a) CHECK(f(2, a) == 0.0);
    CHECK(f(2, 3) == 1.0);
  }
  SUBCASE("translation") {
    synthetic::Rng rng(3);
    std::vector<Vec3> pos(50), dyadic(50);
    for (std::size_t i = 0; i < 50; ++i) {
      pos[i] = {rng.uniform(), rng.uniform(), rng.uniform()};
      for (int a = 0; a < 3; ++a) dyadic[i][a] = std::round(pos[i][a] * 64.0) / 64.0;
    }
    for (const bool exact : {false, true}) {
      const PointCloud cloud(exact ? dyadic : pos, std::vector<Vec3>(50, Vec3{0, 1, 0}), std::vector<Vec3>(50, Vec3{1, 1, 1}));
      const PointCloud moved = cloud.translated({50.0, 0.0, 0.0});
      const NeighborMode mode{NeighborSelection::Euclidean, 0.4, 6};
      const FeatureMatrix a = geometric_pairwise_features(cloud, build_pointcloud_dags(cloud, mode));
      const FeatureMatrix b = geometric_pairwise_features(moved, build_pointcloud_dags(moved, mode));
      if (exact) {
        CHECK(a == b);
      } else {
        CHECK(oracle::max_abs_diff(a, b) <= 1e-12);
      }
    }
  }
  SUBCASE("missing attributes") {
    const PointCloud bare({{0, 0, 0}, {1, 0, 0}});
    const MultiDagSet graph = build_pointcloud_dags(bare, {NeighborSelection::Euclidean, 2.0, 1});
    CHECK_THROWS_AS(geometric_pairwise_features(bare, graph), Error);
    const PointCloud no_color = bare.with_normals(std::vector<Vec3>(2, Vec3{0, 0, 1}));
    try {
      geometric_pairwise_features(no_color, graph);
      FAIL("colours not required");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingColors);
    }
  }
}

TEST_CASE("pairwise embedding") {
  const PairwiseEmbedding e = PairwiseEmbedding::random(8, 9, 42);
  for (double v : e.weights()) CHECK(std::abs(v) <= 0.1);
  for (double v : e.bias()) CHECK(std::abs(v) <= 0.1);
  CHECK(e == PairwiseEmbedding::random(8, 9, 42));
  CHECK(!(e == PairwiseEmbedding::random(8, 9, 43)));

  const PairwiseEmbedding small(2, 3, {1, 2, 3, 4, 5, 6}, {0.5, -1});
  const FeatureMatrix out = small.apply(FeatureMatrix(1, 3, {1, 0, -1}));
  CHECK(out(0, 0) == -1.5);
  CHECK(out(0, 1) == -3.0);
  CHECK_THROWS_AS(small.apply(FeatureMatrix(1, 2)), Error);
  CHECK_THROWS_AS(PairwiseEmbedding(2, 3, {1, 2}, {0, 0}), Error);

  const auto dir = std::filesystem::temp_directory_path() / "dagdiff_emb";
  std::filesystem::create_directories(dir);
  save_embedding(dir / "e.txt", e);
  CHECK(load_embedding(dir / "e.txt") == e);
  std::ifstream a(dir / "e.txt");
  std::stringstream first;
  first << a.rdbuf();
  save_embedding(dir / "f.txt", load_embedding(dir / "e.txt"));
  std::ifstream b(dir / "f.txt");
  std::stringstream second;
  second << b.rdbuf();
  CHECK(first.str() == second.str());
  CHECK(first.str().rfind("emb 8 9\n", 0) == 0);
}

TEST_CASE("lightness patches replicate edges") {
  ImageBuffer l(2, 2, 1);
  l.at(0, 0, 0) = 10;
  l.at(0, 1, 0) = 20;
  l.at(1, 0, 0) = 30;
  l.at(1, 1, 0) = 40;
  const FeatureMatrix p = lightness_patches(l);
  const std::vector<double> top_left{0.1, 0.1, 0.2, 0.1, 0.1, 0.2, 0.3, 0.3, 0.4};
  for (std::size_t k = 0; k < 9; ++k) CHECK(p(0, k) == top_left[k]);
  CHECK_THROWS_AS(lightness_patches(ImageBuffer(2, 2, 3)), Error);
}

TEST_CASE("keep mask") {
  for (std::size_t n : {1u, 10u, 257u, 1024u}) {
    for (double ratio : {0.01, 0.05, 0.2, 1.0}) {
      const auto keep = sample_keep_mask(n, ratio, 7);
      const auto count = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
      CHECK(count == std::max<std::size_t>(1, std::llround(ratio * double(n))));
      CHECK(keep == sample_keep_mask(n, ratio, 7));
    }
  }
  const auto none = sample_keep_mask(50, 0.0, 1);
  CHECK(std::none_of(none.begin(), none.end(), [](bool b) { return b; }));
  CHECK_THROWS_AS(sample_keep_mask(10, 1.5, 0), Error);
}

TEST_CASE("colorize identity and empty cases") {
  synthetic::Rng rng(9);
  ImageBuffer rgb(6, 7, 3);
  for (double& v : rgb.data()) v = rng.uniform();
  const ImageBuffer lab = rgb_to_lab(rgb);
  const PairwiseEmbedding zero(4, 9);  // x = 0, inner product weights vanish

  SUBCASE("all kept with zero weights") {
    const std::vector<bool> all(rgb.pixels(), true);
    const ColorizeResult out = colorize(lightness_of(lab), sparse_chroma(lab, all), zero, {});
    for (std::size_t p = 0; p < rgb.pixels(); ++p) {
      CHECK(std::abs(out.ab.data()[2 * p] - lab.data()[3 * p + 1]) <= 1e-12);
      CHECK(std::abs(out.ab.data()[2 * p + 1] - lab.data()[3 * p + 2]) <= 1e-12);
      CHECK(out.lab.data()[3 * p] == lab.data()[3 * p]);
    }
    const ImageBuffer back = out.rgb;
    for (std::size_t k = 0; k < rgb.data().size(); ++k) CHECK(std::abs(back.data()[k] - rgb.data()[k]) <= 1e-3);
  }
  SUBCASE("nothing kept") {
    const ColorizeResult out = colorize(lightness_of(lab), sparse_chroma(lab, std::vector<bool>(rgb.pixels(), false)),
                                        PairwiseEmbedding::random(8, 9, 1), {});
    for (double v : out.ab.data()) CHECK(v == 0.0);
  }
  SUBCASE("constant chroma stays constant") {
    ImageBuffer flat(6, 7, 3);
    for (std::size_t p = 0; p < flat.pixels(); ++p) {
      flat.data()[3 * p] = rng.uniform(20, 80);
      flat.data()[3 * p + 1] = 12.0;
      flat.data()[3 * p + 2] = -30.0;
    }
    const ColorizeResult out = colorize(lightness_of(flat), sparse_chroma(flat, std::vector<bool>(flat.pixels(), true)),
                                        PairwiseEmbedding::random(8, 9, 3), gaussian(-0.5));
    for (std::size_t p = 0; p < flat.pixels(); ++p) {
      CHECK(std::abs(out.ab.data()[2 * p] - 12.0) <= 1e-12);
      CHECK(std::abs(out.ab.data()[2 * p + 1] + 30.0) <= 1e-12);
    }
  }
  SUBCASE("shape mismatch") {
    SparseChroma hints{ImageBuffer(5, 7, 2), std::vector<bool>(35, false)};
    CHECK_THROWS_AS(colorize(lightness_of(lab), hints, zero, {}), Error);
  }
}

TEST_CASE("two-region fill from seed strokes") {
  // rows 0-3 dark, rows 4-7 light; lightness differs by 60
  const ImageBuffer light = banded_lightness(8, 12, 4, 12, 20.0, 80.0);
  SparseChroma hints{ImageBuffer(8, 12, 2), std::vector<bool>(96, false)};
  const std::array<std::array<double, 2>, 2> seed{{{40.0, 15.0}, {8.0, 30.0}}};
  for (std::size_t r = 0; r < 8; ++r) {
    hints.valid[r * 12] = true;
    hints.ab.at(r, 0, 0) = seed[r / 4][0];
    hints.ab.at(r, 0, 1) = seed[r / 4][1];
  }
  const PipelineConfig cfg = gaussian(0.0);
  const PairwiseEmbedding emb = centre_tap(10.0);
  const ColorizeResult out = colorize(light, hints, emb, cfg);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 12; ++c) {
      CHECK(std::abs(out.ab.at(r, c, 0) - seed[r / 4][0]) <= 1e-6);
      CHECK(std::abs(out.ab.at(r, c, 1) - seed[r / 4][1]) <= 1e-6);
    }
  }
  // dense-operator oracle on the same instance
  FeatureMatrix u(96, 2);
  for (std::size_t p = 0; p < 96; ++p) {
    if (!hints.valid[p]) continue;
    u(p, 0) = hints.ab.data()[2 * p] / 100.0;
    u(p, 1) = hints.ab.data()[2 * p + 1] / 100.0;
  }
  const FeatureMatrix dense = dense_pipeline(build_grid_dags({8, 12}), emb.apply(lightness_patches(light)), u, cfg);
  for (std::size_t p = 0; p < 96; ++p) {
    CHECK(std::abs(out.ab.data()[2 * p] - 100.0 * dense(p, 0)) <= 1e-9);
  }
}

TEST_CASE("two-region fill from single seeds on one row") {
  const ImageBuffer light = banded_lightness(1, 12, 1, 6, 20.0, 80.0);
  SparseChroma hints{ImageBuffer(1, 12, 2), std::vector<bool>(12, false)};
  hints.valid[0] = hints.valid[6] = true;
  hints.ab.at(0, 0, 0) = 40.0;
  hints.ab.at(0, 0, 1) = 15.0;
  hints.ab.at(0, 6, 0) = 8.0;
  hints.ab.at(0, 6, 1) = 30.0;
  const ColorizeResult out = colorize(light, hints, centre_tap(10.0), gaussian(0.0));
  for (std::size_t c = 0; c < 12; ++c) {
    CHECK(std::abs(out.ab.at(0, c, 0) - (c < 6 ? 40.0 : 8.0)) <= 1e-6);
    CHECK(std::abs(out.ab.at(0, c, 1) - (c < 6 ? 15.0 : 30.0)) <= 1e-6);
  }
}

TEST_CASE("scribble propagation") {
  SUBCASE("empty scribble") {
    const MultiDagSet g = chain_graph(8);
    synthetic::Rng rng(1);
    const auto out = scribble_propagate(g, synthetic::random_features(rng, 8, 3), std::vector<double>(8, 0.0), {});
    for (double v : out) CHECK(v == 0.0);
  }
  SUBCASE("disconnected components") {
    const MultiDagSet g = two_chains(10);
    synthetic::Rng rng(2);
    std::vector<double> s(20, 0.0);
    s[3] = 1.0;
    const auto out = scribble_propagate(g, synthetic::random_features(rng, 20, 4), s, gaussian(-0.2));
    for (std::size_t v = 10; v < 20; ++v) CHECK(out[v] == 0.0);
    CHECK(out[3] > 0.0);
  }
  SUBCASE("full-strength chain") {
    const MultiDagSet g = chain_graph(15);
    std::vector<double> s(15, 0.0);
    s[0] = 1.0;
    const FeatureMatrix same(15, 2, std::vector<double>(30, 0.25));
    const auto out = scribble_propagate(g, same, s, gaussian(0.0));
    for (double v : out) CHECK(v == 1.0);
  }
  SUBCASE("bounded output with nonnegative weights") {
    synthetic::Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const MultiDagSet g = build_grid_dags({1 + rng.index(8), 1 + rng.index(8)});
      const std::size_t n = g.num_vertices();
      std::vector<double> s(n);
      for (double& v : s) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
      const auto out = scribble_propagate(g, synthetic::random_features(rng, n, 3), s, gaussian(0.1));
      const FeatureMatrix raw = dense_pipeline(g, synthetic::random_features(rng, n, 3), FeatureMatrix(n, 1, s), gaussian(0.1));
      for (std::size_t v = 0; v < n; ++v) {
        CHECK(out[v] >= 0.0);
        CHECK(out[v] <= 1.0);
        CHECK(raw(v, 0) >= -1e-12);
        CHECK(raw(v, 0) <= 1.0 + 1e-12);
      }
    }
  }
  SUBCASE("image form") {
    const ImageBuffer light = banded_lightness(5, 6, 5, 3, 30.0, 70.0);
    ImageBuffer mask(5, 6, 1);
    const ImageBuffer none = scribble_propagate(light, mask, centre_tap(10.0), gaussian(0.0));
    for (double v : none.data()) CHECK(v == 0.0);
    for (std::size_t r = 0; r < 5; ++r) mask.at(r, 0, 0) = 1.0;
    const ImageBuffer soft = scribble_propagate(light, mask, centre_tap(10.0), gaussian(0.0));
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 6; ++c) {
        if (c < 3) CHECK(std::abs(soft.at(r, c, 0) - 1.0) <= 1e-12);
        else CHECK(soft.at(r, c, 0) <= 1e-6);
      }
    }
    CHECK_THROWS_AS(scribble_propagate(light, ImageBuffer(4, 6, 1), centre_tap(1.0), {}), Error);
  }
  SUBCASE("cloud form") {
    std::vector<Vec3> pos;
    for (int curve = 0; curve < 2; ++curve) {
      for (int i = 0; i < 8; ++i) pos.push_back({double(i), 50.0 * curve, 0.0});
    }
    const PointCloud cloud(pos, std::vector<Vec3>(16, Vec3{0, 0, 1}), std::vector<Vec3>(16, Vec3{0.5, 0.5, 0.5}));
    const MultiDagSet g = build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 1.5, 2});
    std::vector<double> s(16, 0.0);
    s[0] = 1.0;
    const auto out = scribble_propagate(cloud, g, s, PairwiseEmbedding::random(4, 9, 5), gaussian(-0.3));
    for (std::size_t v = 8; v < 16; ++v) CHECK(out[v] == 0.0);
    CHECK(out[1] > 0.0);
  }
}

TEST_CASE("label refinement") {
  SUBCASE("zero weights keep the labels") {
    synthetic::Rng rng(6);
    const MultiDagSet g = build_grid_dags({4, 5});
    const FeatureMatrix scores = synthetic::random_features(rng, 20, 3);
    const RefinedLabels out = refine_labels(scores, g, FeatureMatrix(20, 2), {});
    CHECK(out.labels == argmax_rows(scores));
  }
  SUBCASE("flipped vertex is restored") {
    const MultiDagSet g = chain_graph(10);
    const FeatureMatrix same(10, 2, std::vector<double>(20, 1.0));
    for (std::uint32_t majority : {0u, 1u}) {
      FeatureMatrix scores(10, 2);
      for (std::size_t v = 0; v < 10; ++v) scores(v, majority) = 1.0;
      scores(5, majority) = 0.0;
      scores(5, 1 - majority) = 1.0;
      const PipelineConfig cfg = gaussian(-0.4);  // g = 0.6
      const RefinedLabels out = refine_labels(scores, g, same, cfg);
      CHECK(out.labels == std::vector<std::uint32_t>(10, majority));
      CHECK(oracle::max_abs_diff(out.scores, dense_pipeline(g, same, scores, cfg)) <= 1e-15);
      // at g = 0.5 the flipped vertex sits exactly on the tie
      const RefinedLabels tie = refine_labels(scores, g, same, gaussian(-0.5));
      CHECK(tie.scores(5, 0) == 0.5);
      CHECK(tie.scores(5, 1) == 0.5);
    }
  }
  SUBCASE("no contamination across components") {
    const MultiDagSet g = two_chains(6);
    FeatureMatrix scores(12, 2);
    for (std::size_t v = 0; v < 12; ++v) scores(v, v < 6 ? 0 : 1) = 1.0;
    synthetic::Rng rng(8);
    const RefinedLabels out = refine_labels(scores, g, synthetic::random_features(rng, 12, 3), gaussian(0.0));
    for (std::size_t v = 0; v < 12; ++v) {
      CHECK(out.scores(v, v < 6 ? 1 : 0) == 0.0);
      CHECK(out.labels[v] == (v < 6 ? 0u : 1u));
    }
  }
  SUBCASE("score bounds") {
    synthetic::Rng rng(10);
    const MultiDagSet g = build_grid_dags({6, 6});
    const FeatureMatrix scores = synthetic::random_features(rng, 36, 4);
    const RefinedLabels out = refine_labels(scores, g, synthetic::random_features(rng, 36, 3), gaussian(0.2));
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t v = 0; v < 36; ++v) {
        lo = std::min(lo, scores(v, c));
        hi = std::max(hi, scores(v, c));
      }
      for (std::size_t v = 0; v < 36; ++v) {
        CHECK(out.scores(v, c) >= lo - 1e-12);
        CHECK(out.scores(v, c) <= hi + 1e-12);
      }
    }
  }
  SUBCASE("errors") {
    const MultiDagSet g = chain_graph(3);
    CHECK_THROWS_AS(refine_labels(FeatureMatrix(3, 1), g, FeatureMatrix(3, 1), {}), Error);
    CHECK_THROWS_AS(refine_labels(FeatureMatrix(4, 2), g, FeatureMatrix(3, 1), {}), Error);
  }
}

TEST_CASE("outputs follow a relabelling of the vertices") {
  synthetic::Rng rng(15);
  std::vector<Vec3> pos(60);
  for (auto& p : pos) p = {rng.uniform(), rng.uniform(), rng.uniform()};
  const PointCloud cloud(pos);
  const MultiDagSet g = build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 0.35, 5});
  std::vector<VertexId> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 59; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  std::vector<Dag> moved;
  for (const Dag& d : g.dags()) {
    std::vector<Edge> e;
    for (const Edge& x : d.edges()) e.push_back({perm[x.src], perm[x.dst]});
    moved.emplace_back(60, e, d.direction());
  }
  const MultiDagSet pg(moved);
  const FeatureMatrix pairwise = synthetic::random_features(rng, 60, 3);
  const FeatureMatrix scores = synthetic::random_features(rng, 60, 3);
  FeatureMatrix pp(60, 3), ps(60, 3);
  std::vector<double> s(60), sp(60);
  for (VertexId v = 0; v < 60; ++v) {
    for (std::size_t k = 0; k < 3; ++k) {
      pp(perm[v], k) = pairwise(v, k);
      ps(perm[v], k) = scores(v, k);
    }
    s[v] = rng.uniform() < 0.2 ? 1.0 : 0.0;
    sp[perm[v]] = s[v];
  }
  const PipelineConfig cfg = gaussian(-0.3);
  const RefinedLabels a = refine_labels(scores, g, pairwise, cfg);
  const RefinedLabels b = refine_labels(ps, pg, pp, cfg);
  const auto ma = scribble_propagate(g, pairwise, s, cfg);
  const auto mb = scribble_propagate(pg, pp, sp, cfg);
  for (VertexId v = 0; v < 60; ++v) {
    CHECK(a.labels[v] == b.labels[perm[v]]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(a.scores(v, k) - b.scores(perm[v], k)) <= 1e-12);
    CHECK(std::abs(ma[v] - mb[perm[v]]) <= 1e-12);
  }
}

TEST_CASE("training") {
  const ImageBuffer img = synthetic::two_region_image(16, 16);
  SUBCASE("zero learning rate") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.steps = 5;
    cfg.seed = 3;
    const TrainResult r = train_pairwise_embedding(std::span(&img, 1), cfg);
    CHECK(r.embedding == PairwiseEmbedding::random(8, 9, 3));
    REQUIRE(r.loss_trace.size() == 6);
    for (double l : r.loss_trace) CHECK(l == r.loss_trace.front());
  }
  SUBCASE("loss decreases") {
    // bias -0.7 keeps flat-region weight sums below 1 so kept pixels inject
    double best = INFINITY, initial = 0.0;
    for (double lr : {1e-2, 1e-1}) {
      TrainConfig cfg;
      cfg.kernel = {KernelKind::EmbeddedGaussian, -0.7, 1e-12};
      cfg.learning_rate = lr;
      cfg.steps = 200;
      cfg.keep_ratio = 0.02;
      const TrainResult r = train_pairwise_embedding(std::span(&img, 1), cfg);
      REQUIRE(r.loss_trace.size() == 201);
      for (double l : r.loss_trace) CHECK(std::isfinite(l));
      initial = r.loss_trace.front();
      best = std::min(best, r.loss_trace.back());
    }
    CHECK(best < initial);
  }
  SUBCASE("diverged loss reports the step") {
    ImageBuffer bad = img;
    bad.at(3, 3, 1) = NAN;
    TrainConfig cfg;
    cfg.steps = 3;
    try {
      train_pairwise_embedding(std::span(&bad, 1), cfg);
      FAIL("NaN accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DivergedLoss);
      CHECK(e.index() == std::optional<std::size_t>(0));
    }
  }
  SUBCASE("config validation") {
    TrainConfig cfg;
    cfg.steps = 0;
    CHECK_THROWS_AS(validate_train_config(cfg), Error);
    cfg = {};
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(validate_train_config(cfg), Error);
    cfg = {};
    cfg.keep_ratio = 0.0;
    CHECK_THROWS_AS(validate_train_config(cfg), Error);
    CHECK_THROWS_AS(train_pairwise_embedding({}, TrainConfig{}), Error);
  }
}

TEST_CASE("colorization gradient matches finite differences") {
  const ImageBuffer img = synthetic::two_region_image(16, 16);
  for (const KernelKind kind : {KernelKind::InnerProduct, KernelKind::EmbeddedGaussian}) {
    for (const FusionMode fusion : {FusionMode::Max, FusionMode::Mean}) {
      const ColorSample sample = make_color_sample(img, 0.05, 11);
      PipelineConfig cfg;
      cfg.kernel.kind = kind;
      cfg.fusion = fusion;
      PairwiseEmbedding emb = PairwiseEmbedding::random(8, 9, 2);
      const EmbeddingGradient g = colorization_gradient(emb, sample, cfg);
      CHECK(g.loss == colorization_loss(emb, sample, cfg));
      auto loss = [&] { return colorization_loss(emb, sample, cfg); };
      double worst = 0.0;
      for (std::size_t k = 0; k < emb.weights().size(); ++k) {
        worst = std::max(worst, oracle::rel_err(g.grad_weight[k], oracle::central_difference(loss, emb.weights()[k])));
      }
      for (std::size_t k = 0; k < emb.d_out(); ++k) {
        worst = std::max(worst, oracle::rel_err(g.grad_bias[k], oracle::central_difference(loss, emb.bias()[k])));
      }
      CHECK(worst <= 1e-4);
    }
  }
  PipelineConfig two;
  two.sweeps = 2;
  CHECK_THROWS_AS(colorization_loss(PairwiseEmbedding::random(8, 9, 1), make_color_sample(img, 0.05, 1), two), Error);
}
