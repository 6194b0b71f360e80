#include "dagdiff/propagate.hpp"

#include <algorithm>
#include <string>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

void check_inputs(const Dag& dag, const EdgeWeights& w, const FeatureMatrix& u) {
  if (w.size() != dag.num_edges()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("{} weights for {} edges", w.size(), dag.num_edges()));
  }
  if (u.rows() != dag.num_vertices()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("{} unary rows for {} vertices", u.rows(), dag.num_vertices()));
  }
}

double incoming_sum(const Dag& dag, const EdgeWeights& w, VertexId v) {
  double d = 0.0;
  for (const auto& in : dag.predecessors(v)) d += w[in.edge];
  return d;
}

// One application of the recurrence at v; predecessors must be final in h.
void update_vertex(const Dag& dag, const EdgeWeights& w, const FeatureMatrix& u,
                   FeatureMatrix& h, VertexId v) {
  const auto preds = dag.predecessors(v);
  const double keep = 1.0 - incoming_sum(dag, w, v);
  auto out = h.row(v);
  const auto unary = u.row(v);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = keep * unary[c];
  for (const auto& in : preds) {
    const double g = w[in.edge];
    const auto src = h.row(in.src);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += g * src[c];
  }
}

// Predecessor-first depth-first order.
std::vector<VertexId> topological_order(const Dag& dag) {
  const std::size_t n = dag.num_vertices();
  std::vector<VertexId> order;
  order.reserve(n);
  std::vector<std::uint8_t> state(n, 0);
  std::vector<std::pair<VertexId, std::size_t>> stack;
  for (VertexId root = 0; root < n; ++root) {
    if (state[root] != 0) continue;
    stack.emplace_back(root, 0);
    state[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto preds = dag.predecessors(v);
      if (next == preds.size()) {
        state[v] = 2;
        order.push_back(v);
        stack.pop_back();
        continue;
      }
      const VertexId p = preds[next++].src;
      if (state[p] == 1) {
        throw Error(ErrorKind::CycleDetected, "cycle through vertex " + std::to_string(p), p);
      }
      if (state[p] == 0) {
        state[p] = 1;
        stack.emplace_back(p, 0);
      }
    }
  }
  return order;
}

}  // namespace

std::vector<double> compute_degree(const Dag& dag, const EdgeWeights& w) {
  if (w.size() != dag.num_edges()) {
    throw Error(ErrorKind::ShapeMismatch, "edge weights not aligned with dag edges");
  }
  std::vector<double> d(dag.num_vertices());
  for (VertexId v = 0; v < dag.num_vertices(); ++v) d[v] = incoming_sum(dag, w, v);
  return d;
}

FeatureMatrix propagate_sequential(const Dag& dag, const EdgeWeights& w, const FeatureMatrix& u) {
  check_inputs(dag, w, u);
  FeatureMatrix h(u.rows(), u.cols(), FeatureRole::Propagated);
  for (VertexId v : topological_order(dag)) update_vertex(dag, w, u, h, v);
  return h;
}

FeatureMatrix propagate_grouped(const GroupSchedule& schedule, const Dag& dag,
                                const EdgeWeights& w, const FeatureMatrix& u,
                                PropagationStats* stats, const StepObserver& observer) {
  check_inputs(dag, w, u);
  check_schedule(schedule, dag);
  FeatureMatrix h(u.rows(), u.cols(), FeatureRole::Propagated);
  for (std::size_t p = 0; p < schedule.num_groups(); ++p) {
    // Vertices of one group share no edge; each update reads earlier groups only.
    for (VertexId v : schedule.group(p)) update_vertex(dag, w, u, h, v);
    if (stats) ++stats->steps;
    if (observer) observer(p, h);
  }
  return h;
}

FusionMode parse_fusion(std::string_view text) {
  if (text == "max") return FusionMode::Max;
  if (text == "mean") return FusionMode::Mean;
  throw Error(ErrorKind::ParseError, "unknown fusion mode '" + std::string(text) + "'");
}

FeatureMatrix fuse_directions(std::span<const FeatureMatrix> hs, FusionMode mode) {
  if (hs.empty()) throw Error(ErrorKind::ShapeMismatch, "nothing to fuse");
  for (const FeatureMatrix& h : hs) {
    if (!h.same_shape(hs.front())) {
      throw Error(ErrorKind::ShapeMismatch, "direction results differ in shape");
    }
  }
  FeatureMatrix out = hs.front();
  out.set_role(FeatureRole::Propagated);
  auto acc = out.values();
  for (std::size_t d = 1; d < hs.size(); ++d) {
    const auto vals = hs[d].values();
    for (std::size_t k = 0; k < acc.size(); ++k) {
      acc[k] = mode == FusionMode::Max ? std::max(acc[k], vals[k]) : acc[k] + vals[k];
    }
  }
  if (mode == FusionMode::Mean) {
    const auto count = static_cast<double>(hs.size());
    for (double& v : acc) v /= count;
  }
  return out;
}

std::vector<FeatureMatrix> fuse_backward(std::span<const FeatureMatrix> hs, FusionMode mode,
                                         const FeatureMatrix& grad) {
  const FeatureMatrix fused = fuse_directions(hs, mode);
  if (!grad.same_shape(fused)) throw Error(ErrorKind::ShapeMismatch, "gradient shape");
  std::vector<FeatureMatrix> out;
  for (const FeatureMatrix& h : hs) out.emplace_back(h.rows(), h.cols(), FeatureRole::Gradient);
  const auto g = grad.values();
  if (mode == FusionMode::Mean) {
    const auto count = static_cast<double>(hs.size());
    for (auto& o : out) {
      auto vals = o.values();
      for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = g[k] / count;
    }
    return out;
  }
  const auto best = fused.values();
  for (std::size_t k = 0; k < best.size(); ++k) {
    for (std::size_t d = 0; d < hs.size(); ++d) {
      if (hs[d].values()[k] == best[k]) {
        out[d].values()[k] = g[k];
        break;
      }
    }
  }
  return out;
}

PropagationGradient propagate_backward(const GroupSchedule& schedule, const Dag& dag,
                                       const EdgeWeights& w, const FeatureMatrix& u,
                                       const FeatureMatrix& h, const FeatureMatrix& grad_h) {
  check_inputs(dag, w, u);
  check_schedule(schedule, dag);
  if (!h.same_shape(u) || !grad_h.same_shape(u)) {
    throw Error(ErrorKind::ShapeMismatch, "h and grad_h must match the unary shape");
  }
  PropagationGradient out{FeatureMatrix(u.rows(), u.cols(), FeatureRole::Gradient),
                          std::vector<double>(dag.num_edges(), 0.0)};
  FeatureMatrix adjoint = grad_h;  // accumulates d loss / d h
  for (std::size_t p = schedule.num_groups(); p-- > 0;) {
    for (VertexId v : schedule.group(p)) {
      const auto a = adjoint.row(v);
      const auto uv = u.row(v);
      const double keep = 1.0 - incoming_sum(dag, w, v);
      auto gu = out.grad_u.row(v);
      for (std::size_t c = 0; c < a.size(); ++c) gu[c] = keep * a[c];
      for (const auto& in : dag.predecessors(v)) {
        const auto hs = h.row(in.src);
        double gw = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) gw += a[c] * (hs[c] - uv[c]);
        out.grad_w[in.edge] = gw;
        const double g = w[in.edge];
        auto as = adjoint.row(in.src);
        for (std::size_t c = 0; c < a.size(); ++c) as[c] += g * a[c];
      }
    }
  }
  return out;
}

FeatureMatrix propagate_all(const MultiDagSet& set, std::span<const EdgeWeights> weights,
                            const FeatureMatrix& u, FusionMode mode, std::size_t sweeps) {
  if (weights.size() != set.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one weight vector per dag required");
  }
  if (sweeps == 0) throw Error(ErrorKind::InvalidArgument, "at least one sweep required");
  FeatureMatrix current = u;
  for (std::size_t s = 0; s < sweeps; ++s) {
    std::vector<FeatureMatrix> hs;
    hs.reserve(set.size());
    for (std::size_t d = 0; d < set.size(); ++d) {
      hs.push_back(propagate_grouped(set.schedule(d), set.dag(d), weights[d], current));
    }
    current = fuse_directions(hs, mode);
  }
  return current;
}

}  // namespace dagdiff
