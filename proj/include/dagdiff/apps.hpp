#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dagdiff/builders.hpp"
#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/image.hpp"
#include "dagdiff/kernels.hpp"
#include "dagdiff/propagate.hpp"

namespace dagdiff {

/// Kernel, fusion and sweep count shared by the applications.
struct PipelineConfig {
  KernelConfig kernel{};
  FusionMode fusion = FusionMode::Max;
  std::size_t sweeps = 1;
};

/// Per vertex (dX, dY, dZ, nx, ny, nz, r, g, b): the mean displacement to its
/// graph neighbours (zero when it has none), its normal and its colour.
FeatureMatrix geometric_pairwise_features(const PointCloud& cloud, const MultiDagSet& graph);

/// Learnable affine map x = W v + b from d_in inputs to d_out pairwise
/// channels.
class PairwiseEmbedding {
 public:
  PairwiseEmbedding(std::size_t d_out, std::size_t d_in);
  PairwiseEmbedding(std::size_t d_out, std::size_t d_in, std::vector<double> weight,
                    std::vector<double> bias);

  /// Entries drawn uniformly from [-0.1, 0.1].
  static PairwiseEmbedding random(std::size_t d_out, std::size_t d_in, std::uint64_t seed);

  std::size_t d_out() const noexcept { return d_out_; }
  std::size_t d_in() const noexcept { return d_in_; }
  double& weight(std::size_t o, std::size_t i) noexcept { return weight_[o * d_in_ + i]; }
  double weight(std::size_t o, std::size_t i) const noexcept { return weight_[o * d_in_ + i]; }
  std::span<double> weights() noexcept { return weight_; }
  std::span<const double> weights() const noexcept { return weight_; }
  std::span<double> bias() noexcept { return bias_; }
  std::span<const double> bias() const noexcept { return bias_; }

  FeatureMatrix apply(const FeatureMatrix& inputs) const;

  friend bool operator==(const PairwiseEmbedding&, const PairwiseEmbedding&) = default;

 private:
  std::size_t d_out_, d_in_;
  std::vector<double> weight_;
  std::vector<double> bias_;
};

/// `emb <d_out> <d_in>`, then d_out lines of d_in weights followed by the bias.
void save_embedding(const std::filesystem::path& path, const PairwiseEmbedding& emb);
PairwiseEmbedding load_embedding(const std::filesystem::path& path);

/// 3x3 patches of a one-channel lightness image (L in [0,100]), scaled to
/// [0,1], edge-replicated; row-major taps, one row per pixel.
FeatureMatrix lightness_patches(const ImageBuffer& lightness);

/// Chroma hints: a two-channel (a, b) image plus a per-pixel validity mask.
struct SparseChroma {
  ImageBuffer ab;
  std::vector<bool> valid;
};

/// Exactly max(1, round(ratio * n)) of n positions chosen uniformly (ratio 0
/// keeps none).
std::vector<bool> sample_keep_mask(std::size_t n, double ratio, std::uint64_t seed);

/// Keeps the (a, b) channels of `lab` where `keep` is set.
SparseChroma sparse_chroma(const ImageBuffer& lab, const std::vector<bool>& keep);

/// Splits a Lab image into its lightness channel.
ImageBuffer lightness_of(const ImageBuffer& lab);

struct ColorizeResult {
  ImageBuffer ab;   // restored chroma, Lab units
  ImageBuffer lab;  // input lightness with restored chroma
  ImageBuffer rgb;
};

/// Propagates the chroma hints over the 4-direction grid DAGs of `lightness`
/// with affinities computed from embedded lightness patches.
ColorizeResult colorize(const ImageBuffer& lightness, const SparseChroma& hints,
                        const PairwiseEmbedding& emb, const PipelineConfig& cfg);

/// Graph form: unary = scribble mask, output clamped to [0,1].
std::vector<double> scribble_propagate(const MultiDagSet& graph, const FeatureMatrix& pairwise,
                                       std::span<const double> scribble,
                                       const PipelineConfig& cfg);
/// Image form: one-channel mask image in, one-channel soft mask out.
ImageBuffer scribble_propagate(const ImageBuffer& lightness, const ImageBuffer& scribble,
                               const PairwiseEmbedding& emb, const PipelineConfig& cfg);
/// Point-cloud form: pairwise features are the embedded geometric features.
std::vector<double> scribble_propagate(const PointCloud& cloud, const MultiDagSet& graph,
                                       std::span<const double> scribble,
                                       const PairwiseEmbedding& emb, const PipelineConfig& cfg);

struct RefinedLabels {
  FeatureMatrix scores;
  std::vector<std::uint32_t> labels;
};

/// Propagates per-class scores and takes the per-vertex argmax (first class
/// on ties).
RefinedLabels refine_labels(const FeatureMatrix& unary_scores, const MultiDagSet& graph,
                            const FeatureMatrix& pairwise, const PipelineConfig& cfg);

std::vector<std::uint32_t> argmax_rows(const FeatureMatrix& scores);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t steps = 200;
  double keep_ratio = 0.02;
  std::uint64_t seed = 0;
  KernelConfig kernel{};
  FusionMode fusion = FusionMode::Max;
  std::size_t pairwise_channels = 8;
};

void validate_train_config(const TrainConfig& cfg);

/// One training image reduced to what the loss needs.
struct ColorSample {
  ImageBuffer lightness;
  std::vector<bool> keep;
  ImageBuffer true_ab;
};

ColorSample make_color_sample(const ImageBuffer& rgb, double keep_ratio, std::uint64_t seed);

/// Mean squared error, in ab/100 units, over the pixels not kept.
double colorization_loss(const PairwiseEmbedding& emb, const ColorSample& sample,
                         const PipelineConfig& cfg);

struct EmbeddingGradient {
  double loss = 0.0;
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;
};

EmbeddingGradient colorization_gradient(const PairwiseEmbedding& emb, const ColorSample& sample,
                                        const PipelineConfig& cfg);

struct TrainResult {
  PairwiseEmbedding embedding;
  /// Batch loss before each update, plus the final loss: steps + 1 entries.
  std::vector<double> loss_trace;
};

/// Plain gradient descent on the mean colorization loss over `images` (RGB).
/// Throws DivergedLoss carrying the step index if the loss becomes
/// non-finite.
TrainResult train_pairwise_embedding(std::span<const ImageBuffer> images, const TrainConfig& cfg);

}  // namespace dagdiff
