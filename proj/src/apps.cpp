#include "dagdiff/apps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

// Chroma and lightness enter the propagation pipeline divided by this.
constexpr double kLabScale = 100.0;

void check_rows(const FeatureMatrix& m, std::size_t n, const char* what) {
  if (m.rows() != n) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("{} has {} rows, graph has {} vertices",
                                                      what, m.rows(), n));
  }
}

std::vector<EdgeWeights> weights_for(const MultiDagSet& graph, const FeatureMatrix& pairwise,
                                     const KernelConfig& kernel) {
  std::vector<EdgeWeights> out;
  out.reserve(graph.size());
  for (const Dag& dag : graph.dags()) out.push_back(compute_edge_weights(pairwise, dag, kernel));
  return out;
}

FeatureMatrix propagate_graph(const MultiDagSet& graph, const FeatureMatrix& pairwise,
                              const FeatureMatrix& unary, const PipelineConfig& cfg) {
  check_rows(pairwise, graph.num_vertices(), "pairwise features");
  check_rows(unary, graph.num_vertices(), "unary features");
  const auto weights = weights_for(graph, pairwise, cfg.kernel);
  return propagate_all(graph, weights, unary, cfg.fusion, cfg.sweeps);
}

std::uint64_t draw(std::mt19937_64& rng) { return rng(); }

// Forward pass of the colorization pipeline with everything the backward
// pass needs.
struct ColorForward {
  MultiDagSet graph;
  FeatureMatrix patches;
  FeatureMatrix pairwise;
  FeatureMatrix unary;
  std::vector<EdgeWeights> weights;
  std::vector<FeatureMatrix> hs;
  FeatureMatrix fused;
};

FeatureMatrix chroma_unary(const SparseChroma& hints) {
  const std::size_t n = hints.ab.pixels();
  if (hints.ab.channels() != 2 || hints.valid.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "chroma hints need two channels and one flag per pixel");
  }
  FeatureMatrix u(n, 2);
  for (std::size_t p = 0; p < n; ++p) {
    if (!hints.valid[p]) continue;
    u(p, 0) = hints.ab.data()[2 * p] / kLabScale;
    u(p, 1) = hints.ab.data()[2 * p + 1] / kLabScale;
  }
  return u;
}

ColorForward color_forward(const ImageBuffer& lightness, const FeatureMatrix& unary,
                           const PairwiseEmbedding& emb, const PipelineConfig& cfg) {
  ColorForward f{build_grid_dags({lightness.height(), lightness.width()}),
                 lightness_patches(lightness), {}, unary, {}, {}, {}};
  f.pairwise = emb.apply(f.patches);
  f.weights = weights_for(f.graph, f.pairwise, cfg.kernel);
  for (std::size_t d = 0; d < f.graph.size(); ++d) {
    f.hs.push_back(propagate_grouped(f.graph.schedule(d), f.graph.dag(d), f.weights[d], unary));
  }
  f.fused = fuse_directions(f.hs, cfg.fusion);
  return f;
}

void check_sample(const ColorSample& s) {
  if (s.lightness.channels() != 1 || s.true_ab.channels() != 2 ||
      s.true_ab.pixels() != s.lightness.pixels() || s.keep.size() != s.lightness.pixels() ||
      s.true_ab.height() != s.lightness.height()) {
    throw Error(ErrorKind::ShapeMismatch, "inconsistent colour sample");
  }
}

FeatureMatrix sample_unary(const ColorSample& s) {
  return chroma_unary({s.true_ab, s.keep});
}

std::size_t scored_entries(const ColorSample& s) {
  return 2 * static_cast<std::size_t>(std::count(s.keep.begin(), s.keep.end(), false));
}

double loss_of(const FeatureMatrix& fused, const ColorSample& s) {
  const std::size_t count = scored_entries(s);
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t p = 0; p < s.keep.size(); ++p) {
    if (s.keep[p]) continue;
    for (std::size_t ch = 0; ch < 2; ++ch) {
      const double d = fused(p, ch) - s.true_ab.data()[2 * p + ch] / kLabScale;
      sum += d * d;
    }
  }
  return sum / static_cast<double>(count);
}

void single_sweep_only(const PipelineConfig& cfg) {
  if (cfg.sweeps != 1) {
    throw Error(ErrorKind::InvalidArgument, "gradients are implemented for a single sweep");
  }
}

}  // namespace

FeatureMatrix geometric_pairwise_features(const PointCloud& cloud, const MultiDagSet& graph) {
  const auto normals = cloud.normals();
  const auto colors = cloud.colors();
  check_rows(FeatureMatrix(cloud.size(), 0), graph.num_vertices(), "point cloud");
  std::vector<std::set<VertexId>> nbrs(cloud.size());
  for (const Dag& dag : graph.dags()) {
    for (const Edge& e : dag.edges()) {
      nbrs[e.src].insert(e.dst);
      nbrs[e.dst].insert(e.src);
    }
  }
  FeatureMatrix out(cloud.size(), 9, FeatureRole::Pairwise);
  for (VertexId i = 0; i < cloud.size(); ++i) {
    auto row = out.row(i);
    const Vec3& p = cloud.position(i);
    if (!nbrs[i].empty()) {
      for (VertexId j : nbrs[i]) {
        const Vec3& q = cloud.position(j);
        for (int a = 0; a < 3; ++a) row[a] += q[a] - p[a];
      }
      for (int a = 0; a < 3; ++a) row[a] /= static_cast<double>(nbrs[i].size());
    }
    for (int a = 0; a < 3; ++a) {
      row[3 + a] = normals[i][a];
      row[6 + a] = colors[i][a];
    }
  }
  return out;
}

PairwiseEmbedding::PairwiseEmbedding(std::size_t d_out, std::size_t d_in)
    : PairwiseEmbedding(d_out, d_in, std::vector<double>(d_out * d_in, 0.0),
                        std::vector<double>(d_out, 0.0)) {}

PairwiseEmbedding::PairwiseEmbedding(std::size_t d_out, std::size_t d_in,
                                     std::vector<double> weight, std::vector<double> bias)
    : d_out_(d_out), d_in_(d_in), weight_(std::move(weight)), bias_(std::move(bias)) {
  if (d_out_ == 0 || d_in_ == 0 || weight_.size() != d_out_ * d_in_ || bias_.size() != d_out_) {
    throw Error(ErrorKind::ShapeMismatch, "embedding parameters do not match their dimensions");
  }
  for (double v : weight_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite embedding weight");
  }
  for (double v : bias_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite embedding bias");
  }
}

PairwiseEmbedding PairwiseEmbedding::random(std::size_t d_out, std::size_t d_in,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return (static_cast<double>(draw(rng) >> 11) * 0x1.0p-53) * 0.2 - 0.1; };
  std::vector<double> w(d_out * d_in), b(d_out);
  for (double& v : w) v = uniform();
  for (double& v : b) v = uniform();
  return PairwiseEmbedding(d_out, d_in, std::move(w), std::move(b));
}

FeatureMatrix PairwiseEmbedding::apply(const FeatureMatrix& inputs) const {
  if (inputs.cols() != d_in_) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("embedding expects {} inputs, got {}", d_in_, inputs.cols()));
  }
  FeatureMatrix out(inputs.rows(), d_out_, FeatureRole::Pairwise);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto in = inputs.row(r);
    auto o = out.row(r);
    for (std::size_t k = 0; k < d_out_; ++k) {
      double sum = bias_[k];
      for (std::size_t i = 0; i < d_in_; ++i) sum += weight_[k * d_in_ + i] * in[i];
      o[k] = sum;
    }
  }
  return out;
}

void save_embedding(const std::filesystem::path& path, const PairwiseEmbedding& emb) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  std::string text = fmt::format("emb {} {}\n", emb.d_out(), emb.d_in());
  for (std::size_t k = 0; k < emb.d_out(); ++k) {
    for (std::size_t i = 0; i < emb.d_in(); ++i) text += fmt::format("{:.17g} ", emb.weight(k, i));
    text += fmt::format("{:.17g}\n", emb.bias()[k]);
  }
  out << text;
}

PairwiseEmbedding load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::string magic;
  std::size_t d_out = 0, d_in = 0;
  if (!(in >> magic >> d_out >> d_in) || magic != "emb") {
    throw Error(ErrorKind::ParseError, path.string() + ": bad embedding header");
  }
  std::vector<double> w(d_out * d_in), b(d_out);
  for (std::size_t k = 0; k < d_out; ++k) {
    for (std::size_t i = 0; i < d_in; ++i) {
      if (!(in >> w[k * d_in + i])) throw Error(ErrorKind::ParseError, "embedding truncated");
    }
    if (!(in >> b[k])) throw Error(ErrorKind::ParseError, "embedding truncated");
  }
  return PairwiseEmbedding(d_out, d_in, std::move(w), std::move(b));
}

FeatureMatrix lightness_patches(const ImageBuffer& lightness) {
  if (lightness.channels() != 1) {
    throw Error(ErrorKind::ChannelMismatch, "lightness image must have one channel");
  }
  const auto h = static_cast<long>(lightness.height());
  const auto w = static_cast<long>(lightness.width());
  FeatureMatrix out(lightness.pixels(), 9);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      auto row = out.row(static_cast<std::size_t>(r * w + c));
      std::size_t tap = 0;
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = std::clamp(r + dr, 0L, h - 1);
          const long cc = std::clamp(c + dc, 0L, w - 1);
          row[tap++] = lightness.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), 0) /
                       kLabScale;
        }
      }
    }
  }
  return out;
}

std::vector<bool> sample_keep_mask(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "keep ratio must lie in [0,1]");
  }
  std::vector<bool> keep(n, false);
  if (n == 0 || ratio == 0.0) return keep;
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates on explicit draws keeps the choice platform independent.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(draw(rng) % (n - i));
    std::swap(order[i], order[j]);
    keep[order[i]] = true;
  }
  return keep;
}

SparseChroma sparse_chroma(const ImageBuffer& lab, const std::vector<bool>& keep) {
  if (lab.channels() != 3 || keep.size() != lab.pixels()) {
    throw Error(ErrorKind::ShapeMismatch, "need a Lab image and one keep flag per pixel");
  }
  SparseChroma out{ImageBuffer(lab.height(), lab.width(), 2), keep};
  for (std::size_t p = 0; p < lab.pixels(); ++p) {
    if (!keep[p]) continue;
    out.ab.data()[2 * p] = lab.data()[3 * p + 1];
    out.ab.data()[2 * p + 1] = lab.data()[3 * p + 2];
  }
  return out;
}

ImageBuffer lightness_of(const ImageBuffer& lab) {
  if (lab.channels() != 3) throw Error(ErrorKind::ChannelMismatch, "expected a Lab image");
  ImageBuffer out(lab.height(), lab.width(), 1);
  for (std::size_t p = 0; p < lab.pixels(); ++p) out.data()[p] = lab.data()[3 * p];
  return out;
}

ColorizeResult colorize(const ImageBuffer& lightness, const SparseChroma& hints,
                        const PairwiseEmbedding& emb, const PipelineConfig& cfg) {
  if (hints.ab.height() != lightness.height() || hints.ab.width() != lightness.width()) {
    throw Error(ErrorKind::ShapeMismatch, "chroma hints and lightness differ in size");
  }
  const FeatureMatrix unary = chroma_unary(hints);
  const MultiDagSet graph = build_grid_dags({lightness.height(), lightness.width()});
  const FeatureMatrix fused =
      propagate_graph(graph, emb.apply(lightness_patches(lightness)), unary, cfg);

  ColorizeResult out{ImageBuffer(lightness.height(), lightness.width(), 2),
                     ImageBuffer(lightness.height(), lightness.width(), 3), {}};
  for (std::size_t p = 0; p < lightness.pixels(); ++p) {
    out.ab.data()[2 * p] = fused(p, 0) * kLabScale;
    out.ab.data()[2 * p + 1] = fused(p, 1) * kLabScale;
    out.lab.data()[3 * p] = lightness.data()[p];
    out.lab.data()[3 * p + 1] = out.ab.data()[2 * p];
    out.lab.data()[3 * p + 2] = out.ab.data()[2 * p + 1];
  }
  out.rgb = lab_to_rgb(out.lab);
  return out;
}

std::vector<double> scribble_propagate(const MultiDagSet& graph, const FeatureMatrix& pairwise,
                                       std::span<const double> scribble,
                                       const PipelineConfig& cfg) {
  if (scribble.size() != graph.num_vertices()) {
    throw Error(ErrorKind::ShapeMismatch, "scribble mask does not cover the graph");
  }
  const FeatureMatrix unary(scribble.size(), 1, {scribble.begin(), scribble.end()});
  const FeatureMatrix fused = propagate_graph(graph, pairwise, unary, cfg);
  std::vector<double> out(scribble.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = std::clamp(fused(v, 0), 0.0, 1.0);
  return out;
}

ImageBuffer scribble_propagate(const ImageBuffer& lightness, const ImageBuffer& scribble,
                               const PairwiseEmbedding& emb, const PipelineConfig& cfg) {
  if (scribble.channels() != 1 || scribble.height() != lightness.height() ||
      scribble.width() != lightness.width()) {
    throw Error(ErrorKind::ShapeMismatch, "scribble must be a one-channel image of the same size");
  }
  const MultiDagSet graph = build_grid_dags({lightness.height(), lightness.width()});
  const auto soft =
      scribble_propagate(graph, emb.apply(lightness_patches(lightness)), scribble.data(), cfg);
  ImageBuffer out(lightness.height(), lightness.width(), 1);
  std::ranges::copy(soft, out.data().begin());
  return out;
}

std::vector<double> scribble_propagate(const PointCloud& cloud, const MultiDagSet& graph,
                                       std::span<const double> scribble,
                                       const PairwiseEmbedding& emb, const PipelineConfig& cfg) {
  return scribble_propagate(graph, emb.apply(geometric_pairwise_features(cloud, graph)), scribble,
                            cfg);
}

std::vector<std::uint32_t> argmax_rows(const FeatureMatrix& scores) {
  std::vector<std::uint32_t> labels(scores.rows(), 0);
  for (std::size_t v = 0; v < scores.rows(); ++v) {
    const auto row = scores.row(v);
    labels[v] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

RefinedLabels refine_labels(const FeatureMatrix& unary_scores, const MultiDagSet& graph,
                            const FeatureMatrix& pairwise, const PipelineConfig& cfg) {
  if (unary_scores.cols() < 2) {
    throw Error(ErrorKind::ShapeMismatch, "label refinement needs at least two classes");
  }
  RefinedLabels out{propagate_graph(graph, pairwise, unary_scores, cfg), {}};
  out.labels = argmax_rows(out.scores);
  return out;
}

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorKind::InvalidArgument, "learning rate must be finite and non-negative");
  }
  if (cfg.steps < 1) throw Error(ErrorKind::InvalidArgument, "at least one training step");
  if (!(cfg.keep_ratio > 0.0 && cfg.keep_ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "keep ratio must lie in (0,1]");
  }
  if (cfg.pairwise_channels == 0) {
    throw Error(ErrorKind::InvalidArgument, "pairwise channel count must be positive");
  }
  validate_kernel_config(cfg.kernel);
}

ColorSample make_color_sample(const ImageBuffer& rgb, double keep_ratio, std::uint64_t seed) {
  const ImageBuffer lab = rgb_to_lab(rgb);
  ColorSample s{lightness_of(lab), sample_keep_mask(lab.pixels(), keep_ratio, seed),
                ImageBuffer(lab.height(), lab.width(), 2)};
  for (std::size_t p = 0; p < lab.pixels(); ++p) {
    s.true_ab.data()[2 * p] = lab.data()[3 * p + 1];
    s.true_ab.data()[2 * p + 1] = lab.data()[3 * p + 2];
  }
  return s;
}

double colorization_loss(const PairwiseEmbedding& emb, const ColorSample& sample,
                         const PipelineConfig& cfg) {
  single_sweep_only(cfg);
  check_sample(sample);
  return loss_of(color_forward(sample.lightness, sample_unary(sample), emb, cfg).fused, sample);
}

EmbeddingGradient colorization_gradient(const PairwiseEmbedding& emb, const ColorSample& sample,
                                        const PipelineConfig& cfg) {
  single_sweep_only(cfg);
  check_sample(sample);
  const ColorForward f = color_forward(sample.lightness, sample_unary(sample), emb, cfg);
  EmbeddingGradient out{loss_of(f.fused, sample),
                        std::vector<double>(emb.weights().size(), 0.0),
                        std::vector<double>(emb.d_out(), 0.0)};
  const std::size_t count = scored_entries(sample);
  if (count == 0) return out;

  FeatureMatrix grad_fused(f.fused.rows(), f.fused.cols(), FeatureRole::Gradient);
  for (std::size_t p = 0; p < sample.keep.size(); ++p) {
    if (sample.keep[p]) continue;
    for (std::size_t ch = 0; ch < 2; ++ch) {
      const double d = f.fused(p, ch) - sample.true_ab.data()[2 * p + ch] / kLabScale;
      grad_fused(p, ch) = 2.0 * d / static_cast<double>(count);
    }
  }
  const auto grad_hs = fuse_backward(f.hs, cfg.fusion, grad_fused);

  FeatureMatrix grad_x(f.pairwise.rows(), f.pairwise.cols(), FeatureRole::Gradient);
  for (std::size_t d = 0; d < f.graph.size(); ++d) {
    const auto pg = propagate_backward(f.graph.schedule(d), f.graph.dag(d), f.weights[d], f.unary,
                                       f.hs[d], grad_hs[d]);
    const auto kg = kernel_backward(f.pairwise, f.graph.dag(d), cfg.kernel, pg.grad_w);
    auto acc = grad_x.values();
    const auto add = kg.grad_x.values();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += add[k];
  }

  for (std::size_t r = 0; r < grad_x.rows(); ++r) {
    const auto gx = grad_x.row(r);
    const auto in = f.patches.row(r);
    for (std::size_t k = 0; k < emb.d_out(); ++k) {
      out.grad_bias[k] += gx[k];
      for (std::size_t i = 0; i < emb.d_in(); ++i) out.grad_weight[k * emb.d_in() + i] += gx[k] * in[i];
    }
  }
  return out;
}

TrainResult train_pairwise_embedding(std::span<const ImageBuffer> images, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (images.empty()) throw Error(ErrorKind::InvalidArgument, "no training images");
  std::vector<ColorSample> batch;
  for (std::size_t k = 0; k < images.size(); ++k) {
    batch.push_back(make_color_sample(images[k], cfg.keep_ratio, cfg.seed + 1 + k));
  }
  const PipelineConfig pipe{cfg.kernel, cfg.fusion, 1};
  TrainResult result{PairwiseEmbedding::random(cfg.pairwise_channels, 9, cfg.seed), {}};
  PairwiseEmbedding& emb = result.embedding;
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (std::size_t step = 0; step <= cfg.steps; ++step) {
    double loss = 0.0;
    std::vector<double> gw(emb.weights().size(), 0.0), gb(emb.d_out(), 0.0);
    for (const ColorSample& s : batch) {
      if (step == cfg.steps) {
        loss += colorization_loss(emb, s, pipe) * scale;
        continue;
      }
      const EmbeddingGradient g = colorization_gradient(emb, s, pipe);
      loss += g.loss * scale;
      for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += g.grad_weight[k] * scale;
      for (std::size_t k = 0; k < gb.size(); ++k) gb[k] += g.grad_bias[k] * scale;
    }
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::DivergedLoss, fmt::format("loss became {} at step {}", loss, step),
                  step);
    }
    result.loss_trace.push_back(loss);
    if (step == cfg.steps) break;
    auto w = emb.weights();
    auto b = emb.bias();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * gw[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= cfg.learning_rate * gb[k];
  }
  return result;
}

}  // namespace dagdiff
