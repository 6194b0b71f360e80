#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/graph.hpp"
#include "dagdiff/image.hpp"
#include "dagdiff/kernels.hpp"
#include "dagdiff/point_cloud.hpp"

namespace dagdiff::synthetic {

/// Seeded generator with platform-independent draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Random DAG: vertices are ranked by a random permutation and each forward
/// pair becomes an edge with probability `density`.
Dag random_dag(Rng& rng, std::size_t n, double density, Direction dir = Direction::PosX);

FeatureMatrix random_features(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                              double hi = 1.0);

/// Uniform raw weights in [lo, hi) followed by stabilisation.
EdgeWeights random_weights(Rng& rng, const Dag& dag, double lo, double hi);

/// Two horizontal bands of constant colour with distinct lightness.
ImageBuffer two_region_image(std::size_t height, std::size_t width);

/// Points on z = 0 and z = gap over a jittered square lattice with
/// Gaussian z-noise; normals are exactly (0, 0, 1).
PointCloud parallel_planes(Rng& rng, std::size_t side, double spacing, double gap,
                           double z_noise);

}  // namespace dagdiff::synthetic
