#include "dagdiff/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace dagdiff::synthetic {

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Dag random_dag(Rng& rng, std::size_t n, double density, Direction dir) {
  std::vector<VertexId> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(rank[i - 1], rank[rng.index(i)]);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < density) edges.push_back({rank[a], rank[b]});
    }
  }
  return Dag(n, std::move(edges), dir);
}

FeatureMatrix random_features(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  FeatureMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

EdgeWeights random_weights(Rng& rng, const Dag& dag, double lo, double hi) {
  EdgeWeights w;
  for (std::size_t k = 0; k < dag.num_edges(); ++k) w.values.push_back(rng.uniform(lo, hi));
  return stabilize_weights(w, dag);
}

ImageBuffer two_region_image(std::size_t height, std::size_t width) {
  ImageBuffer img(height, width, 3);
  for (std::size_t r = 0; r < height; ++r) {
    const bool top = r < height / 2;
    for (std::size_t c = 0; c < width; ++c) {
      // Dark red above, light teal below.
      img.at(r, c, 0) = top ? 0.55 : 0.35;
      img.at(r, c, 1) = top ? 0.10 : 0.85;
      img.at(r, c, 2) = top ? 0.12 : 0.80;
    }
  }
  return img;
}

PointCloud parallel_planes(Rng& rng, std::size_t side, double spacing, double gap,
                           double z_noise) {
  std::vector<Vec3> pos;
  for (int plane = 0; plane < 2; ++plane) {
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        pos.push_back({spacing * (static_cast<double>(i) + rng.uniform(-0.1, 0.1)),
                       spacing * (static_cast<double>(j) + rng.uniform(-0.1, 0.1)),
                       plane * gap + z_noise * rng.normal()});
      }
    }
  }
  std::vector<Vec3> normals(pos.size(), Vec3{0.0, 0.0, 1.0});
  return PointCloud(std::move(pos), std::move(normals));
}

}  // namespace dagdiff::synthetic
