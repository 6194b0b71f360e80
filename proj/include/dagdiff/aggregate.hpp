#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/graph.hpp"

namespace dagdiff {

/// c-channel feature map over an image; row r, column c is matrix row
/// r * width + c.
struct PixelFeatures {
  std::size_t height = 0;
  std::size_t width = 0;
  FeatureMatrix values;
};

struct Correspondence {
  std::uint32_t image = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  VertexId vertex = 0;
};

/// Pixel-to-vertex links over one or more images. A pixel maps to at most
/// one vertex per image; a vertex may collect pixels from many images.
class CorrespondenceMap {
 public:
  CorrespondenceMap() = default;
  explicit CorrespondenceMap(std::vector<Correspondence> entries);

  /// Entries sorted by (image, row, col).
  std::span<const Correspondence> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<Correspondence> entries_;
};

struct VertexAggregate {
  FeatureMatrix features;
  std::vector<bool> covered;
};

/// Mean of all pixel features linked to each vertex; uncovered vertices get
/// zeros and covered = false. `images[k]` is image id k.
VertexAggregate aggregate_pixels_to_vertices(std::span<const PixelFeatures> images,
                                             const CorrespondenceMap& corr,
                                             std::size_t n_vertices);

struct PixelProjection {
  PixelFeatures pixels;
  std::vector<bool> covered;
};

/// Copies each vertex feature onto the pixels of `image` linked to it.
PixelProjection project_vertices_to_pixels(const FeatureMatrix& vf, const CorrespondenceMap& corr,
                                           std::uint32_t image, std::size_t height,
                                           std::size_t width);

/// Lines of `<image_id> <pixel_row> <pixel_col> <vertex_id>`.
CorrespondenceMap read_correspondences(std::istream& in);
void write_correspondences(std::ostream& out, const CorrespondenceMap& corr);

}  // namespace dagdiff
