#include "dagdiff/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

double norm_of(std::span<const double> v) {
  double sq = 0.0;
  for (double a : v) sq += a * a;
  return std::sqrt(sq);
}

double dot_normalized(std::span<const double> a, double scale_a, std::span<const double> b,
                      double scale_b) {
  double sum = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) sum += (a[f] / scale_a) * (b[f] / scale_b);
  return sum;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    const double d = a[f] - b[f];
    sum += d * d;
  }
  return sum;
}

void check_features(const FeatureMatrix& x, const Dag& dag) {
  if (x.rows() != dag.num_vertices()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("{} feature rows for a {}-vertex dag", x.rows(), dag.num_vertices()));
  }
}

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "prod" || text == "inner-product") return KernelKind::InnerProduct;
  if (text == "embed" || text == "gaussian") return KernelKind::EmbeddedGaussian;
  throw Error(ErrorKind::ParseError, "unknown kernel '" + std::string(text) + "'");
}

void validate_kernel_config(const KernelConfig& cfg) {
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    throw Error(ErrorKind::InvalidArgument, "kernel epsilon must be positive");
  }
  if (!std::isfinite(cfg.bias)) throw Error(ErrorKind::InvalidArgument, "kernel bias not finite");
}

double kernel_value(std::span<const double> a, std::span<const double> b,
                    const KernelConfig& cfg) {
  if (cfg.kind == KernelKind::InnerProduct) {
    return dot_normalized(a, std::max(norm_of(a), cfg.epsilon), b,
                          std::max(norm_of(b), cfg.epsilon));
  }
  return std::exp(-squared_distance(a, b)) + cfg.bias;
}

EdgeWeights edge_weights_inner_product(const FeatureMatrix& x, const Dag& dag,
                                       const KernelConfig& cfg) {
  check_features(x, dag);
  validate_kernel_config(cfg);
  std::vector<double> scale(x.rows());
  for (std::size_t v = 0; v < x.rows(); ++v) scale[v] = std::max(norm_of(x.row(v)), cfg.epsilon);
  EdgeWeights w;
  w.values.reserve(dag.num_edges());
  for (const Edge& e : dag.edges()) {
    w.values.push_back(dot_normalized(x.row(e.dst), scale[e.dst], x.row(e.src), scale[e.src]));
  }
  return w;
}

EdgeWeights edge_weights_embedded_gaussian(const FeatureMatrix& x, const Dag& dag,
                                           const KernelConfig& cfg) {
  check_features(x, dag);
  validate_kernel_config(cfg);
  EdgeWeights w;
  w.values.reserve(dag.num_edges());
  for (const Edge& e : dag.edges()) {
    w.values.push_back(std::exp(-squared_distance(x.row(e.dst), x.row(e.src))) + cfg.bias);
  }
  return w;
}

EdgeWeights stabilize_weights(const EdgeWeights& w, const Dag& dag) {
  if (w.size() != dag.num_edges()) {
    throw Error(ErrorKind::ShapeMismatch, "edge weights not aligned with dag edges");
  }
  EdgeWeights out = w;
  for (VertexId v = 0; v < dag.num_vertices(); ++v) {
    double total = 0.0;
    for (const auto& in : dag.predecessors(v)) total += std::abs(w[in.edge]);
    if (total > 1.0) {
      for (const auto& in : dag.predecessors(v)) out[in.edge] = w[in.edge] / total;
    }
  }
  return out;
}

EdgeWeights compute_edge_weights(const FeatureMatrix& x, const Dag& dag,
                                 const KernelConfig& cfg) {
  const EdgeWeights raw = cfg.kind == KernelKind::InnerProduct
                              ? edge_weights_inner_product(x, dag, cfg)
                              : edge_weights_embedded_gaussian(x, dag, cfg);
  return stabilize_weights(raw, dag);
}

KernelGradient kernel_backward(const FeatureMatrix& x, const Dag& dag, const KernelConfig& cfg,
                               std::span<const double> grad_g) {
  if (grad_g.size() != dag.num_edges()) {
    throw Error(ErrorKind::ShapeMismatch, "gradient not aligned with dag edges");
  }
  const EdgeWeights raw = cfg.kind == KernelKind::InnerProduct
                              ? edge_weights_inner_product(x, dag, cfg)
                              : edge_weights_embedded_gaussian(x, dag, cfg);

  // Adjoint of the raw kernel values through the per-vertex rescaling.
  std::vector<double> grad_raw(grad_g.begin(), grad_g.end());
  for (VertexId v = 0; v < dag.num_vertices(); ++v) {
    const auto preds = dag.predecessors(v);
    double total = 0.0;
    double weighted = 0.0;
    for (const auto& in : preds) {
      total += std::abs(raw[in.edge]);
      weighted += grad_g[in.edge] * raw[in.edge];
    }
    if (total <= 1.0) continue;
    for (const auto& in : preds) {
      grad_raw[in.edge] =
          grad_g[in.edge] / total - sign_of(raw[in.edge]) * weighted / (total * total);
    }
  }

  KernelGradient out{FeatureMatrix(x.rows(), x.cols(), FeatureRole::Gradient), 0.0};
  FeatureMatrix& gx = out.grad_x;
  const std::size_t c = x.cols();

  if (cfg.kind == KernelKind::InnerProduct) {
    std::vector<double> norm(x.rows());
    for (std::size_t v = 0; v < x.rows(); ++v) norm[v] = norm_of(x.row(v));
    auto scale = [&](VertexId v) { return std::max(norm[v], cfg.epsilon); };
    // d(xbar_a . xbar_b)/dx_a; on the floored branch xbar_a = x_a / epsilon.
    auto accumulate = [&](VertexId a, VertexId b, double r, double adj) {
      const double sa = scale(a), sb = scale(b);
      const bool floored = !(norm[a] > cfg.epsilon);
      for (std::size_t f = 0; f < c; ++f) {
        const double xa = x(a, f) / sa;
        const double xb = x(b, f) / sb;
        const double d = floored ? xb / sa : (xb - r * xa) / sa;
        gx(a, f) += adj * d;
      }
    };
    for (std::size_t k = 0; k < dag.num_edges(); ++k) {
      const Edge& e = dag.edges()[k];
      if (grad_raw[k] == 0.0) continue;
      accumulate(e.dst, e.src, raw[k], grad_raw[k]);
      accumulate(e.src, e.dst, raw[k], grad_raw[k]);
    }
  } else {
    for (std::size_t k = 0; k < dag.num_edges(); ++k) {
      const Edge& e = dag.edges()[k];
      out.grad_bias += grad_raw[k];
      const double response = std::exp(-squared_distance(x.row(e.dst), x.row(e.src)));
      for (std::size_t f = 0; f < c; ++f) {
        const double d = 2.0 * response * (x(e.dst, f) - x(e.src, f)) * grad_raw[k];
        gx(e.dst, f) -= d;
        gx(e.src, f) += d;
      }
    }
  }
  return out;
}

void write_edge_weights(std::ostream& out, const EdgeWeights& w) {
  std::string text;
  for (double g : w.values) text += fmt::format("{:.17g}\n", g);
  out << text;
}

EdgeWeights read_edge_weights(std::istream& in) {
  EdgeWeights w;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(value)) {
      throw Error(ErrorKind::ParseError, "malformed weight '" + token + "'", w.size());
    }
    w.values.push_back(value);
  }
  return w;
}

}  // namespace dagdiff
