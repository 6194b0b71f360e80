#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/graph.hpp"

namespace dagdiff {

enum class KernelKind { InnerProduct, EmbeddedGaussian };

struct KernelConfig {
  KernelKind kind = KernelKind::InnerProduct;
  /// Added to the Gaussian response; ignored by the inner product.
  double bias = -0.5;
  /// Floor on feature norms before normalisation.
  double epsilon = 1e-12;
};

void validate_kernel_config(const KernelConfig& cfg);

/// "prod" or "embed" (also "inner-product", "gaussian").
KernelKind parse_kernel_kind(std::string_view text);

/// One weight per edge of a Dag, in the Dag's edge order.
struct EdgeWeights {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t k) const noexcept { return values[k]; }
  double& operator[](std::size_t k) noexcept { return values[k]; }

  friend bool operator==(const EdgeWeights&, const EdgeWeights&) = default;
};

/// Cosine similarity of the endpoint features, x / max(|x|, epsilon).
EdgeWeights edge_weights_inner_product(const FeatureMatrix& x, const Dag& dag,
                                       const KernelConfig& cfg);

/// exp(-|x_i - x_j|^2) + bias.
EdgeWeights edge_weights_embedded_gaussian(const FeatureMatrix& x, const Dag& dag,
                                           const KernelConfig& cfg);

/// Kernel response for a single pair; symmetric in (a, b) bit for bit.
double kernel_value(std::span<const double> a, std::span<const double> b,
                    const KernelConfig& cfg);

/// Rescales each vertex's incoming weights by their absolute sum whenever
/// that sum exceeds 1, so that sum |g| <= 1 per vertex afterwards.
EdgeWeights stabilize_weights(const EdgeWeights& w, const Dag& dag);

/// Kernel dispatch followed by stabilisation.
EdgeWeights compute_edge_weights(const FeatureMatrix& x, const Dag& dag,
                                 const KernelConfig& cfg);

struct KernelGradient {
  FeatureMatrix grad_x;
  double grad_bias = 0.0;
};

/// Reverse mode through compute_edge_weights: `grad_g` is the adjoint of the
/// stabilised weights. Exactly at sum |g| == 1 the unscaled branch is used.
KernelGradient kernel_backward(const FeatureMatrix& x, const Dag& dag, const KernelConfig& cfg,
                               std::span<const double> grad_g);

/// One weight per line, 17 significant digits.
void write_edge_weights(std::ostream& out, const EdgeWeights& w);
EdgeWeights read_edge_weights(std::istream& in);

}  // namespace dagdiff
