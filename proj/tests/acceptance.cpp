// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "dagdiff/apps.hpp"
#include "dagdiff/diffusion.hpp"
#include "dagdiff/io.hpp"
#include "dagdiff/synthetic.hpp"
#include "oracles.hpp"

using namespace dagdiff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = o.passed && secs < limit_s;
  if (!ok) ++failures;
  fmt::print("[{:>2}] {} {:<28} {} | {:.2f}s (limit {:g}s)\n", id, ok ? "PASS" : "FAIL", name, o.detail,
             secs, limit_s);
  std::fflush(stdout);
}

double rel_diff(const FeatureMatrix& a, const FeatureMatrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    const double x = a.values()[k], y = b.values()[k];
    if (x == y) continue;
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300}));
  }
  return worst;
}

// Resample kernel instances whose raw weights sit near a kink of the
// stabilisation (|g| near 0 or an incoming sum near 1).
bool near_kink(const EdgeWeights& raw, const Dag& dag) {
  std::vector<double> s(dag.num_vertices(), 0.0);
  for (std::size_t k = 0; k < dag.num_edges(); ++k) {
    if (std::abs(raw[k]) < 1e-4) return true;
    s[dag.edges()[k].dst] += std::abs(raw[k]);
  }
  return std::any_of(s.begin(), s.end(), [](double v) { return std::abs(v - 1.0) < 1e-4; });
}

EdgeWeights raw_weights(const FeatureMatrix& x, const Dag& dag, const KernelConfig& cfg) {
  return cfg.kind == KernelKind::InnerProduct ? edge_weights_inner_product(x, dag, cfg)
                                              : edge_weights_embedded_gaussian(x, dag, cfg);
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DAG_DIFFUSE_BIN) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

int main() {
  fmt::print("dag-diffuse acceptance\n");

  criterion(1, "sequential/grouped", 10.0, [] {
    synthetic::Rng rng(101);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 1 + rng.index(64);
      const Dag dag = synthetic::random_dag(rng, n, rng.uniform(0.02, 0.3));
      const EdgeWeights w = synthetic::random_weights(rng, dag, -1.0, 1.0);
      const FeatureMatrix u = synthetic::random_features(rng, n, 1 + rng.index(8));
      worst = std::max(worst, rel_diff(propagate_sequential(dag, w, u),
                                       propagate_grouped(schedule_groups(dag), dag, w, u)));
    }
    return Outcome{worst <= 1e-12, fmt::format("max rel diff {:.3e} (tol 1e-12, 100 instances)", worst)};
  });

  criterion(2, "diffusion identity", 30.0, [] {
    synthetic::Rng rng(202);
    double row = 0.0, resid = 0.0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 1 + rng.index(50);
      const Dag dag = synthetic::random_dag(rng, n, rng.uniform(0.02, 0.3));
      const EdgeWeights w = synthetic::random_weights(rng, dag, -1.0, 1.0);
      const FeatureMatrix u = synthetic::random_features(rng, n, 1 + rng.index(4));
      const GroupSchedule sched = schedule_groups(dag);
      const GlobalLaplacian lap = assemble_laplacian(dag, sched, w);
      const FeatureMatrix h = propagate_grouped(sched, dag, w, u);
      for (Eigen::Index i = 0; i < lap.expanded.rows(); ++i) {
        row = std::max(row, std::abs(lap.expanded.row(i).sum() - 1.0));
        for (std::size_t c = 0; c < u.cols(); ++c) {
          double mu = 0.0;
          for (Eigen::Index j = 0; j < lap.expanded.cols(); ++j) mu += lap.expanded(i, j) * u(j, c);
          resid = std::max(resid, std::abs(h(i, c) - mu));
        }
      }
    }
    return Outcome{row <= 1e-12 && resid <= 1e-12,
                   fmt::format("max |rowsum-1| {:.3e}, max |H-MU| {:.3e} (tol 1e-12)", row, resid)};
  });

  criterion(3, "gradients vs finite diff", 120.0, [] {
    synthetic::Rng rng(303);
    double prop = 0.0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 2 + rng.index(11);
      const Dag dag = synthetic::random_dag(rng, n, 0.35);
      EdgeWeights w = synthetic::random_weights(rng, dag, -0.6, 0.6);
      FeatureMatrix u = synthetic::random_features(rng, n, 1 + rng.index(3));
      const FeatureMatrix r = synthetic::random_features(rng, n, u.cols());
      const GroupSchedule sched = schedule_groups(dag);
      const auto loss = [&] {
        const FeatureMatrix h = propagate_grouped(sched, dag, w, u);
        double s = 0.0;
        for (std::size_t k = 0; k < h.values().size(); ++k) s += h.values()[k] * r.values()[k];
        return s;
      };
      const PropagationGradient g = propagate_backward(sched, dag, w, u, propagate_grouped(sched, dag, w, u), r);
      for (std::size_t k = 0; k < u.values().size(); ++k) {
        prop = std::max(prop, oracle::rel_err(g.grad_u.values()[k], oracle::central_difference(loss, u.values()[k])));
      }
      for (std::size_t k = 0; k < w.values.size(); ++k) {
        prop = std::max(prop, oracle::rel_err(g.grad_w[k], oracle::central_difference(loss, w.values[k])));
      }
    }
    double kern[2] = {0.0, 0.0};
    for (int kind = 0; kind < 2; ++kind) {
      const KernelConfig cfg{kind == 0 ? KernelKind::InnerProduct : KernelKind::EmbeddedGaussian, -0.5, 1e-12};
      for (int t = 0; t < 100;) {
        const std::size_t n = 3 + rng.index(8);
        const Dag dag = synthetic::random_dag(rng, n, 0.4);
        FeatureMatrix x = synthetic::random_features(rng, n, 1 + rng.index(4), -0.8, 0.8);
        if (near_kink(raw_weights(x, dag, cfg), dag)) continue;
        ++t;
        std::vector<double> r(dag.num_edges());
        for (double& v : r) v = rng.uniform(-1.0, 1.0);
        KernelConfig c2 = cfg;
        const auto loss = [&] {
          const EdgeWeights g = compute_edge_weights(x, dag, c2);
          double s = 0.0;
          for (std::size_t k = 0; k < r.size(); ++k) s += g[k] * r[k];
          return s;
        };
        const KernelGradient kg = kernel_backward(x, dag, cfg, r);
        for (std::size_t k = 0; k < x.values().size(); ++k) {
          kern[kind] = std::max(kern[kind], oracle::rel_err(kg.grad_x.values()[k], oracle::central_difference(loss, x.values()[k])));
        }
        if (kind == 1) kern[kind] = std::max(kern[kind], oracle::rel_err(kg.grad_bias, oracle::central_difference(loss, c2.bias)));
      }
    }
    const ImageBuffer img = synthetic::two_region_image(16, 16);
    const ColorSample sample = make_color_sample(img, 0.05, 17);
    double chain = 0.0;
    for (const KernelKind kind : {KernelKind::InnerProduct, KernelKind::EmbeddedGaussian}) {
      PipelineConfig pc;
      pc.kernel.kind = kind;
      PairwiseEmbedding emb = PairwiseEmbedding::random(8, 9, 0);
      const EmbeddingGradient g = colorization_gradient(emb, sample, pc);
      const auto loss = [&] { return colorization_loss(emb, sample, pc); };
      for (std::size_t k = 0; k < emb.weights().size(); ++k) {
        chain = std::max(chain, oracle::rel_err(g.grad_weight[k], oracle::central_difference(loss, emb.weights()[k])));
      }
      for (std::size_t k = 0; k < emb.d_out(); ++k) {
        chain = std::max(chain, oracle::rel_err(g.grad_bias[k], oracle::central_difference(loss, emb.bias()[k])));
      }
    }
    const bool ok = prop <= 1e-5 && kern[0] <= 1e-5 && kern[1] <= 1e-5 && chain <= 1e-4;
    return Outcome{ok, fmt::format("propagate {:.2e}, prod {:.2e}, embed {:.2e} (tol 1e-5, 100 each); "
                                   "colorize chain 16x16 {:.2e} (tol 1e-4)",
                                   prop, kern[0], kern[1], chain)};
  });

  criterion(4, "maximum principle", 10.0, [] {
    synthetic::Rng rng(404);
    std::size_t violations = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 1 + rng.index(64);
      const Dag dag = synthetic::random_dag(rng, n, rng.uniform(0.02, 0.4));
      const EdgeWeights w = synthetic::random_weights(rng, dag, 0.0, 1.0);
      const FeatureMatrix u = synthetic::random_features(rng, n, 1 + rng.index(6));
      const FeatureMatrix h = propagate_grouped(schedule_groups(dag), dag, w, u);
      for (std::size_t c = 0; c < u.cols(); ++c) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t i = 0; i < n; ++i) {
          lo = std::min(lo, u(i, c));
          hi = std::max(hi, u(i, c));
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double excess = std::max(lo - h(i, c), h(i, c) - hi);
          worst = std::max(worst, excess);
          if (excess > 1e-12) ++violations;
        }
      }
    }
    return Outcome{violations == 0, fmt::format("{} violations, worst excess {:.3e} (tol 1e-12)", violations, worst)};
  });

  criterion(5, "grid columns are groups", 1.0, [] {
    std::size_t bad = 0;
    for (std::size_t h = 1; h <= 8; ++h) {
      for (std::size_t w = 1; w <= 8; ++w) {
        const MultiDagSet set = build_grid_dags({h, w});
        for (std::size_t d = 0; d < set.size(); ++d) {
          if (set.dag(d).direction() != Direction::PosX) continue;
          const GroupSchedule& s = set.schedule(d);
          bool ok = s.num_groups() == w;
          for (std::size_t p = 0; ok && p < s.num_groups(); ++p) {
            ok = s.group(p).size() == h;
            for (VertexId v : s.group(p)) ok = ok && v % w == p;
          }
          if (!ok) ++bad;
        }
      }
    }
    return Outcome{bad == 0, fmt::format("{} of 64 grids mismatched", bad)};
  });

  criterion(6, "O(T) step count", 10.0, [] {
    synthetic::Rng rng(606);
    std::size_t bad = 0;
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 1 + rng.index(50);
      const Dag dag = synthetic::random_dag(rng, n, rng.uniform(0.01, 0.25));
      const std::size_t longest = n <= 18 ? oracle::longest_path_enumerate(dag) : oracle::longest_path_relax(dag);
      PropagationStats stats;
      const GroupSchedule sched = schedule_groups(dag);
      propagate_grouped(sched, dag, synthetic::random_weights(rng, dag, 0.0, 1.0),
                        synthetic::random_features(rng, n, 2), &stats);
      if (stats.steps != longest + 1 || sched.num_groups() != longest + 1) ++bad;
    }
    return Outcome{bad == 0, fmt::format("{} of 200 DAGs with steps != longest path + 1", bad)};
  });

  criterion(7, "symmetry", 5.0, [] {
    synthetic::Rng rng(707);
    std::size_t violations = 0, builds = 0;
    for (std::size_t h = 1; h <= 6; ++h) {
      for (std::size_t w = 1; w <= 6; ++w, ++builds) violations += check_bidirectional_symmetry(build_grid_dags({h, w})).size();
    }
    for (int t = 0; t < 10; ++t, ++builds) {
      const std::size_t h = 6 + rng.index(10), w = 6 + rng.index(10), bh = 1 + rng.index(3), bw = 1 + rng.index(4);
      const std::size_t blocks_per_row = (w + bw - 1) / bw;
      std::vector<std::uint32_t> labels(h * w);
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          labels[r * w + c] = static_cast<std::uint32_t>((r / bh) * blocks_per_row + c / bw);
        }
      }
      violations += check_bidirectional_symmetry(build_superpixel_dags(SuperpixelMap(h, w, labels), t).dags).size();
    }
    for (int t = 0; t < 10; ++t, builds += 2) {
      std::vector<Vec3> pos(80);
      for (auto& p : pos) p = {rng.uniform(), rng.uniform(), rng.uniform()};
      const PointCloud cloud(pos);
      const PointCloud with_n = cloud.with_normals(estimate_normals(cloud, 8));
      violations += check_bidirectional_symmetry(build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 0.3, 6})).size();
      violations += check_bidirectional_symmetry(build_pointcloud_dags(with_n, {NeighborSelection::Tangent, 0.3, 6})).size();
    }
    std::size_t asym = 0;
    for (int t = 0; t < 10000; ++t) {
      const std::size_t c = 1 + rng.index(8);
      std::vector<double> a(c), b(c);
      for (std::size_t k = 0; k < c; ++k) {
        a[k] = rng.uniform(-2.0, 2.0);
        b[k] = rng.uniform(-2.0, 2.0);
      }
      for (const KernelKind kind : {KernelKind::InnerProduct, KernelKind::EmbeddedGaussian}) {
        const KernelConfig cfg{kind, -0.5, 1e-12};
        if (kernel_value(a, b, cfg) != kernel_value(b, a, cfg)) ++asym;
      }
    }
    return Outcome{violations == 0 && asym == 0,
                   fmt::format("{} symmetry violations over {} builds; {} asymmetric kernel pairs of 2x10^4", violations,
                               builds, asym)};
  });

  criterion(8, "path awareness", 5.0, [] {
    // two sinusoidal curves 5 units apart; neighbours only within a curve
    std::vector<Vec3> pos;
    for (int curve = 0; curve < 2; ++curve) {
      for (int i = 0; i < 60; ++i) {
        const double x = 0.1 * i;
        pos.push_back({x, 5.0 * curve + 0.5 * std::sin(x), 0.0});
      }
    }
    const std::size_t n = pos.size();
    const PointCloud cloud(pos, std::vector<Vec3>(n, Vec3{0, 0, 1}), std::vector<Vec3>(n, Vec3{0.5, 0.5, 0.5}));
    const MultiDagSet graph = build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 0.25, 2});
    std::size_t crossing = 0;
    for (const Dag& d : graph.dags()) {
      for (const Edge& e : d.edges()) crossing += (e.src < 60) != (e.dst < 60);
    }
    std::vector<double> scribble(n, 0.0);
    scribble[0] = 1.0;
    const auto soft = scribble_propagate(cloud, graph, scribble, PairwiseEmbedding::random(4, 9, 8),
                                         {KernelConfig{KernelKind::EmbeddedGaussian, -0.3, 1e-12}});
    double leak = 0.0;
    for (std::size_t v = 60; v < n; ++v) leak = std::max(leak, std::abs(soft[v]));

    // along-curve chain with g = 1: identical features, Gaussian bias 0
    const PointCloud curve(std::vector<Vec3>(pos.begin(), pos.begin() + 60));
    const MultiDagSet chain = build_pointcloud_dags(curve, {NeighborSelection::Euclidean, 0.25, 2});
    std::set<Edge> chain_pairs;
    for (const Dag& d : chain.dags()) {
      for (const Edge& e : d.edges()) chain_pairs.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
    }
    bool connected = true;
    for (VertexId i = 0; i + 1 < 60; ++i) connected = connected && chain_pairs.count({i, i + 1}) == 1;
    std::vector<double> end(60, 0.0);
    end[0] = 1.0;
    PipelineConfig ones;
    ones.kernel = {KernelKind::EmbeddedGaussian, 0.0, 1e-12};
    const auto filled = scribble_propagate(chain, FeatureMatrix(60, 3, std::vector<double>(180, 0.5)), end, ones);
    const double lowest = *std::min_element(filled.begin(), filled.end());
    return Outcome{crossing == 0 && leak == 0.0 && connected && lowest == 1.0,
                   fmt::format("{} crossing edges, leak {:g}; curve {}connected ({} pairs), min mask {:.17g}",
                               crossing, leak, connected ? "" : "not ", chain_pairs.size(), lowest)};
  });

  criterion(9, "tangent vs euclidean", 10.0, [] {
    synthetic::Rng rng(909);
    const std::size_t side = 12;
    const double radius = 1.0;
    const PointCloud cloud = synthetic::parallel_planes(rng, side, 0.4, 0.5 * radius, 0.01);
    const std::size_t n = cloud.size();
    std::size_t cross[2] = {0, 0}, mismatched[2] = {0, 0};
    for (int m = 0; m < 2; ++m) {
      const NeighborMode mode{m == 0 ? NeighborSelection::Euclidean : NeighborSelection::Tangent, radius, 6};
      std::set<Edge> expect;
      for (VertexId i = 0; i < n; ++i) {
        auto cand = oracle::brute_radius(cloud, i, radius);
        if (m == 1) {
          const Vec3 nrm = cloud.normals()[i];
          const Vec3 p = cloud.position(i);
          auto off = [&](VertexId j) {
            const Vec3 r = cloud.position(j);
            return std::abs((p[0] - r[0]) * nrm[0] + (p[1] - r[1]) * nrm[1] + (p[2] - r[2]) * nrm[2]);
          };
          std::sort(cand.begin(), cand.end(), [&](const Neighbor& a, const Neighbor& b) {
            const double oa = off(a.id), ob = off(b.id);
            if (oa != ob) return oa < ob;
            if (a.distance != b.distance) return a.distance < b.distance;
            return a.id < b.id;
          });
        }
        for (std::size_t k = 0; k < std::min<std::size_t>(6, cand.size()); ++k) {
          expect.insert({std::min(i, cand[k].id), std::max(i, cand[k].id)});
        }
      }
      std::set<Edge> got;
      const MultiDagSet built = build_pointcloud_dags(cloud, mode);
      for (const Dag& d : built.dags()) {
        for (const Edge& e : d.edges()) got.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
      }
      mismatched[m] = got == expect ? 0 : 1;
      for (const Edge& e : got) cross[m] += (e.src < side * side) != (e.dst < side * side);
    }
    return Outcome{cross[1] == 0 && cross[0] >= 1 && mismatched[0] == 0 && mismatched[1] == 0,
                   fmt::format("cross-plane edges: euclidean {}, tangent {}; brute-force mismatch {}/{}", cross[0],
                               cross[1], mismatched[0], mismatched[1])};
  });

  criterion(10, "color restoration", 180.0, [] {
    const ImageBuffer img = synthetic::two_region_image(32, 32);
    TrainConfig cfg;
    cfg.keep_ratio = 0.02;
    cfg.steps = 200;
    cfg.learning_rate = 0.1;
    cfg.kernel = {KernelKind::EmbeddedGaussian, -0.7, 1e-12};
    const TrainResult trained = train_pairwise_embedding(std::span(&img, 1), cfg);
    const double first = trained.loss_trace.front(), last = trained.loss_trace.back();
    PipelineConfig pc;
    pc.kernel = cfg.kernel;
    const ImageBuffer lab = rgb_to_lab(img);
    std::vector<double> mse;
    for (double ratio : {0.01, 0.05, 0.10, 0.20}) {
      double sum = 0.0;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto keep = sample_keep_mask(img.pixels(), ratio, 1000 + seed);
        const ColorizeResult out = colorize(lightness_of(lab), sparse_chroma(lab, keep), trained.embedding, pc);
        double e = 0.0;
        for (std::size_t p = 0; p < img.pixels(); ++p) {
          for (std::size_t c = 0; c < 2; ++c) {
            const double d = (out.ab.data()[2 * p + c] - lab.data()[3 * p + 1 + c]) / 100.0;
            e += d * d;
          }
        }
        sum += e / static_cast<double>(2 * img.pixels());
      }
      mse.push_back(sum / 5.0);
    }
    bool monotone = true;
    for (std::size_t k = 1; k < mse.size(); ++k) monotone = monotone && mse[k] <= mse[k - 1];
    return Outcome{last < first && monotone,
                   fmt::format("loss {:.6e} -> {:.6e}; mse at 1/5/10/20%: {:.5e} {:.5e} {:.5e} {:.5e}", first, last,
                               mse[0], mse[1], mse[2], mse[3])};
  });

  criterion(11, "determinism", 60.0, [] {
    const fs::path root = fs::temp_directory_path() / "dagdiff_acceptance";
    fs::remove_all(root);
    std::size_t differing = 0, compared = 0;
    bool runs_ok = run_cli("check --seed 7", root.parent_path() / "dagdiff_check_a.txt") == 0;
    runs_ok = run_cli("check --seed 7", root.parent_path() / "dagdiff_check_b.txt") == 0 && runs_ok;
    const bool reports_equal =
        slurp(root.parent_path() / "dagdiff_check_a.txt") == slurp(root.parent_path() / "dagdiff_check_b.txt");
    for (const char* run : {"a", "b"}) {
      const fs::path d = root / run;
      fs::create_directories(d);
      synthetic::Rng rng(11);
      write_pnm(d / "img.ppm", synthetic::two_region_image(12, 12));
      write_ply(d / "cloud.ply", synthetic::parallel_planes(rng, 6, 0.4, 0.5, 0.01));
      save_feature_matrix(d / "x.fm", synthetic::random_features(rng, 144, 3));
      save_feature_matrix(d / "u.fm", synthetic::random_features(rng, 144, 2));
      const std::vector<std::string> cmds = {
          "build-grid --height 12 --width 12 --out " + q(d / "grid"),
          "build-cloud --cloud " + q(d / "cloud.ply") + " --mode tangent --k 6 --out " + q(d / "cloud"),
          "edge-weights --graph " + q(d / "grid") + " --pairwise " + q(d / "x.fm") + " --kernel embed --out " +
              q(d / "w"),
          "propagate --graph " + q(d / "grid") + " --weights " + q(d / "w") + " --unary " + q(d / "u.fm") +
              " --sweeps 2 --out " + q(d / "h.fm"),
          "refine-labels --graph " + q(d / "grid") + " --scores " + q(d / "u.fm") + " --pairwise " + q(d / "x.fm") +
              " --labels-out " + q(d / "labels.txt") + " --out " + q(d / "r.fm"),
          "train --images " + q(d / "img.ppm") + " --steps 5 --kernel embed --bias -0.7 --trace " +
              q(d / "trace.txt") + " --out " + q(d / "emb.txt"),
          "colorize --image " + q(d / "img.ppm") + " --embedding " + q(d / "emb.txt") + " --keep-ratio 0.1 --out " +
              q(d / "color.ppm"),
      };
      for (const auto& c : cmds) runs_ok = run_cli(c, d / "log.txt") == 0 && runs_ok;
    }
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
      if (!e.is_regular_file()) continue;
      ++compared;
      const fs::path other = root / "b" / fs::relative(e.path(), root / "a");
      std::string x = slurp(e.path()), y = slurp(other);
      if (e.path().filename() == "log.txt" || e.path().filename() == "img.ppm") continue;
      if (x != y || !fs::exists(other)) ++differing;
    }
    return Outcome{runs_ok && reports_equal && differing == 0,
                   fmt::format("check reports {}; {} of {} serialized files differ", reports_equal ? "identical" : "differ",
                               differing, compared)};
  });

  fmt::print("{} of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
