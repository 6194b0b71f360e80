#include "dagdiff/check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "dagdiff/apps.hpp"
#include "dagdiff/builders.hpp"
#include "dagdiff/diffusion.hpp"
#include "dagdiff/kernels.hpp"
#include "dagdiff/propagate.hpp"
#include "dagdiff/synthetic.hpp"

namespace dagdiff {

namespace {

using synthetic::Rng;

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

double max_relative(const FeatureMatrix& a, const FeatureMatrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    worst = std::max(worst, relative_error(a.values()[k], b.values()[k]));
  }
  return worst;
}

// Longest path length in edges via |V| rounds of edge relaxation.
std::size_t longest_path_by_relaxation(const Dag& dag) {
  std::vector<std::size_t> len(dag.num_vertices(), 0);
  for (std::size_t round = 0; round < dag.num_vertices(); ++round) {
    bool changed = false;
    for (const Edge& e : dag.edges()) {
      if (len[e.src] + 1 > len[e.dst]) {
        len[e.dst] = len[e.src] + 1;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dag.num_vertices() == 0 ? 0 : *std::max_element(len.begin(), len.end());
}

CheckResult schedule_property(Rng& rng) {
  CheckResult r{"schedule_layering", true, 0.0, 0.0, 60};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 1 + rng.index(50), rng.uniform(0.0, 0.3));
    const GroupSchedule s = schedule_groups(dag);
    std::size_t violations = 0;
    for (const Edge& e : dag.edges()) violations += s.group_of(e.src) >= s.group_of(e.dst);
    std::size_t total = 0;
    for (const auto& g : s.groups()) total += g.size();
    violations += total != dag.num_vertices();
    violations += s.num_groups() != longest_path_by_relaxation(dag) + 1;
    violations += !(schedule_groups(dag) == s);
    r.value += static_cast<double>(violations);
  }
  r.passed = r.value == 0.0;
  return r;
}

CheckResult equivalence_property(Rng& rng) {
  CheckResult r{"grouped_equals_sequential", true, 0.0, 1e-12, 100};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 1 + rng.index(64), rng.uniform(0.0, 0.2));
    const EdgeWeights w = synthetic::random_weights(rng, dag, -1.0, 1.0);
    const FeatureMatrix u = synthetic::random_features(rng, dag.num_vertices(), 1 + rng.index(8));
    PropagationStats stats;
    const GroupSchedule s = schedule_groups(dag);
    const FeatureMatrix grouped = propagate_grouped(s, dag, w, u, &stats);
    r.value = std::max(r.value, max_relative(grouped, propagate_sequential(dag, w, u)));
    if (stats.steps != s.num_groups()) r.value = std::max(r.value, 1.0);
  }
  r.passed = r.value <= r.tolerance;
  return r;
}

CheckResult diffusion_property(Rng& rng) {
  CheckResult r{"diffusion_row_sums", true, 0.0, 1e-12, 50};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 1 + rng.index(50), rng.uniform(0.0, 0.25));
    const EdgeWeights w = synthetic::random_weights(rng, dag, -1.0, 1.0);
    const FeatureMatrix u = synthetic::random_features(rng, dag.num_vertices(), 3);
    const GroupSchedule s = schedule_groups(dag);
    const DiffusionReport rep =
        verify_diffusion(assemble_laplacian(dag, s, w), u, propagate_grouped(s, dag, w, u));
    r.value = std::max({r.value, rep.effective_row_sum, rep.identity_residual, rep.raw_row_sum,
                        rep.constant_residual});
  }
  r.passed = r.value <= r.tolerance;
  return r;
}

CheckResult maximum_principle_property(Rng& rng) {
  CheckResult r{"maximum_principle", true, 0.0, 1e-12, 100};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 1 + rng.index(64), rng.uniform(0.0, 0.3));
    const EdgeWeights w = synthetic::random_weights(rng, dag, 0.0, 1.0);
    const FeatureMatrix u = synthetic::random_features(rng, dag.num_vertices(), 1 + rng.index(4));
    const FeatureMatrix h = propagate_grouped(schedule_groups(dag), dag, w, u);
    for (std::size_t c = 0; c < u.cols(); ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t v = 0; v < u.rows(); ++v) {
        lo = std::min(lo, u(v, c));
        hi = std::max(hi, u(v, c));
      }
      for (std::size_t v = 0; v < u.rows(); ++v) {
        r.value = std::max({r.value, lo - h(v, c), h(v, c) - hi});
      }
    }
  }
  r.passed = r.value <= r.tolerance;
  return r;
}

CheckResult grid_column_property() {
  CheckResult r{"grid_columns_are_groups", true, 0.0, 0.0, 64};
  for (std::size_t h = 1; h <= 8; ++h) {
    for (std::size_t w = 1; w <= 8; ++w) {
      const MultiDagSet set = build_grid_dags({h, w});
      const GridSpec spec{h, w};
      const GroupSchedule& lr = set.schedule(set.index_of(Direction::PosX));
      bool ok = lr.num_groups() == w;
      for (std::size_t c = 0; ok && c < w; ++c) {
        std::vector<VertexId> column;
        for (std::size_t row = 0; row < h; ++row) column.push_back(spec.id(row, c));
        ok = lr.groups()[c] == column;
      }
      const GroupSchedule& tb = set.schedule(set.index_of(Direction::PosY));
      ok = ok && tb.num_groups() == h;
      r.value += ok ? 0.0 : 1.0;
    }
  }
  r.passed = r.value == 0.0;
  return r;
}

CheckResult builder_symmetry_property(Rng& rng) {
  CheckResult r{"builder_bidirectional_symmetry", true, 0.0, 0.0, 0};
  auto audit = [&](const MultiDagSet& set) {
    r.value += static_cast<double>(check_bidirectional_symmetry(set).size());
    ++r.instances;
  };
  for (int t = 0; t < 5; ++t) audit(build_grid_dags({1 + rng.index(10), 1 + rng.index(10)}));
  for (int t = 0; t < 5; ++t) {
    // Blocky random label maps: 3x3 cells with random labels, compacted.
    const std::size_t h = 6 + rng.index(10), w = 6 + rng.index(10);
    std::vector<std::uint32_t> cell(((h + 2) / 3) * ((w + 2) / 3));
    for (auto& l : cell) l = static_cast<std::uint32_t>(rng.index(6));
    std::vector<std::uint32_t> labels(h * w), remap(6, UINT32_MAX);
    std::uint32_t next = 0;
    for (std::size_t p = 0; p < h * w; ++p) {
      const std::uint32_t l = cell[(p / w) / 3 * ((w + 2) / 3) + (p % w) / 3];
      if (remap[l] == UINT32_MAX) remap[l] = next++;
      labels[p] = remap[l];
    }
    audit(build_superpixel_dags(SuperpixelMap(h, w, labels), rng.index(1000)).dags);
  }
  for (int t = 0; t < 5; ++t) {
    std::vector<Vec3> pos(40 + rng.index(40));
    for (Vec3& p : pos) p = {rng.uniform(), rng.uniform(), rng.uniform()};
    const PointCloud cloud(pos);
    audit(build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 0.4, 6}));
  }
  r.passed = r.value == 0.0;
  return r;
}

CheckResult kernel_symmetry_property(Rng& rng) {
  CheckResult r{"kernel_symmetry", true, 0.0, 0.0, 2000};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const FeatureMatrix x = synthetic::random_features(rng, 2, 1 + rng.index(8), -3.0, 3.0);
    const KernelConfig cfg{t % 2 == 0 ? KernelKind::InnerProduct : KernelKind::EmbeddedGaussian,
                           -0.5, 1e-12};
    r.value += kernel_value(x.row(0), x.row(1), cfg) != kernel_value(x.row(1), x.row(0), cfg);
  }
  r.passed = r.value == 0.0;
  return r;
}

// Random linear functional of the output and its finite-difference slope.
double central_difference(const std::function<double()>& loss, double& param, double step) {
  const double saved = param;
  param = saved + step;
  const double up = loss();
  param = saved - step;
  const double down = loss();
  param = saved;
  return (up - down) / (2.0 * step);
}

double dot(const FeatureMatrix& a, const FeatureMatrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) s += a.values()[k] * b.values()[k];
  return s;
}

CheckResult propagation_gradient_property(Rng& rng) {
  CheckResult r{"propagate_backward_fd", true, 0.0, 1e-5, 100};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 2 + rng.index(10), 0.4);
    EdgeWeights w = synthetic::random_weights(rng, dag, -1.0, 1.0);
    FeatureMatrix u = synthetic::random_features(rng, dag.num_vertices(), 3);
    const FeatureMatrix dir = synthetic::random_features(rng, dag.num_vertices(), 3);
    const GroupSchedule s = schedule_groups(dag);
    auto loss = [&] { return dot(propagate_grouped(s, dag, w, u), dir); };
    const PropagationGradient g = propagate_backward(s, dag, w, u, propagate_grouped(s, dag, w, u), dir);
    for (std::size_t k = 0; k < u.values().size(); ++k) {
      r.value = std::max(r.value, relative_error(g.grad_u.values()[k],
                                                 central_difference(loss, u.values()[k], 1e-6)));
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      r.value = std::max(r.value, relative_error(g.grad_w[k], central_difference(loss, w[k], 1e-6)));
    }
  }
  r.passed = r.value <= r.tolerance;
  return r;
}

bool near_kink(const FeatureMatrix& x, const Dag& dag, const KernelConfig& cfg) {
  const EdgeWeights raw = cfg.kind == KernelKind::InnerProduct
                              ? edge_weights_inner_product(x, dag, cfg)
                              : edge_weights_embedded_gaussian(x, dag, cfg);
  for (VertexId v = 0; v < dag.num_vertices(); ++v) {
    double s = 0.0;
    for (const auto& in : dag.predecessors(v)) {
      if (std::abs(raw[in.edge]) < 1e-4) return true;
      s += std::abs(raw[in.edge]);
    }
    if (std::abs(s - 1.0) < 1e-4) return true;
  }
  return false;
}

CheckResult kernel_gradient_property(Rng& rng, KernelKind kind) {
  CheckResult r{kind == KernelKind::InnerProduct ? "kernel_backward_fd_prod"
                                                 : "kernel_backward_fd_embed",
                true, 0.0, 1e-5, 100};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 6, 0.5);
    FeatureMatrix x = synthetic::random_features(rng, 6, 4, -0.6, 0.6);
    KernelConfig cfg{kind, -0.5, 1e-12};
    if (near_kink(x, dag, cfg)) {
      --t;
      continue;
    }
    std::vector<double> dir(dag.num_edges());
    for (double& d : dir) d = rng.uniform(-1.0, 1.0);
    auto loss = [&] {
      const EdgeWeights g = compute_edge_weights(x, dag, cfg);
      double s = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) s += g[k] * dir[k];
      return s;
    };
    const KernelGradient kg = kernel_backward(x, dag, cfg, dir);
    for (std::size_t k = 0; k < x.values().size(); ++k) {
      r.value = std::max(r.value, relative_error(kg.grad_x.values()[k],
                                                 central_difference(loss, x.values()[k], 1e-6)));
    }
    if (kind == KernelKind::EmbeddedGaussian) {
      r.value = std::max(r.value, relative_error(kg.grad_bias, central_difference(loss, cfg.bias, 1e-6)));
    }
  }
  r.passed = r.value <= r.tolerance;
  return r;
}

CheckResult linearity_property(Rng& rng) {
  CheckResult r{"propagation_linearity", true, 0.0, 1e-12, 50};
  for (std::size_t t = 0; t < r.instances; ++t) {
    const Dag dag = synthetic::random_dag(rng, 1 + rng.index(40), 0.2);
    const EdgeWeights w = synthetic::random_weights(rng, dag, -1.0, 1.0);
    const FeatureMatrix u1 = synthetic::random_features(rng, dag.num_vertices(), 2);
    const FeatureMatrix u2 = synthetic::random_features(rng, dag.num_vertices(), 2);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    FeatureMatrix mix(u1.rows(), 2);
    for (std::size_t k = 0; k < mix.values().size(); ++k) {
      mix.values()[k] = a * u1.values()[k] + b * u2.values()[k];
    }
    const FeatureMatrix h1 = propagate_sequential(dag, w, u1), h2 = propagate_sequential(dag, w, u2);
    FeatureMatrix expect(u1.rows(), 2);
    for (std::size_t k = 0; k < expect.values().size(); ++k) {
      expect.values()[k] = a * h1.values()[k] + b * h2.values()[k];
    }
    r.value = std::max(r.value, max_relative(propagate_sequential(dag, w, mix), expect));
  }
  r.passed = r.value <= r.tolerance;
  return r;
}

CheckResult isolation_property(Rng& rng) {
  CheckResult r{"component_isolation", true, 0.0, 0.0, 20};
  for (std::size_t t = 0; t < r.instances; ++t) {
    // Two chains along x, far apart in y, so no neighbour pair crosses.
    const std::size_t len = 3 + rng.index(10);
    std::vector<Vec3> pos;
    for (int curve = 0; curve < 2; ++curve) {
      for (std::size_t i = 0; i < len; ++i) {
        pos.push_back({static_cast<double>(i) + rng.uniform(-0.1, 0.1), 100.0 * curve, 0.0});
      }
    }
    const PointCloud cloud(pos);
    const MultiDagSet graph = build_pointcloud_dags(cloud, {NeighborSelection::Euclidean, 2.5, 2});
    std::vector<double> scribble(2 * len, 0.0);
    scribble[rng.index(len)] = 1.0;
    const FeatureMatrix pairwise = synthetic::random_features(rng, 2 * len, 3, 0.0, 1.0);
    const auto out = scribble_propagate(graph, pairwise, scribble, PipelineConfig{});
    for (std::size_t i = len; i < 2 * len; ++i) r.value += out[i] != 0.0;
  }
  r.passed = r.value == 0.0;
  return r;
}

}  // namespace

bool CheckReport::all_passed() const noexcept {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

std::string CheckReport::to_text() const {
  std::string text = fmt::format("dag-diffuse invariant check\nseed {}\n", seed);
  for (const CheckResult& r : results) {
    text += fmt::format("{:<32} {}  worst={:.6e}  tol={:.1e}  instances={}  stream={}\n",
                        r.name, r.passed ? "PASS" : "FAIL", r.value, r.tolerance, r.instances,
                        r.stream_seed);
  }
  const auto failed = std::count_if(results.begin(), results.end(),
                                    [](const CheckResult& r) { return !r.passed; });
  text += fmt::format("{} of {} properties passed\n", results.size() - static_cast<std::size_t>(failed),
                      results.size());
  return text;
}

CheckReport run_invariant_suite(std::uint64_t seed) {
  CheckReport report{seed, {}};
  // Each property draws from its own stream so adding one leaves the rest unchanged.
  std::uint64_t stream = 0;
  auto run = [&](auto&& property) {
    const std::uint64_t stream_seed = seed * 1000003ULL + ++stream;
    Rng rng(stream_seed);
    report.results.push_back(property(rng));
    report.results.back().stream_seed = stream_seed;
  };
  run(schedule_property);
  run(equivalence_property);
  run(diffusion_property);
  run(maximum_principle_property);
  run([](Rng&) { return grid_column_property(); });
  run(builder_symmetry_property);
  run(kernel_symmetry_property);
  run(propagation_gradient_property);
  run([](Rng& rng) { return kernel_gradient_property(rng, KernelKind::InnerProduct); });
  run([](Rng& rng) { return kernel_gradient_property(rng, KernelKind::EmbeddedGaussian); });
  run(linearity_property);
  run(isolation_property);
  return report;
}

}  // namespace dagdiff
