#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dagdiff/graph.hpp"
#include "dagdiff/point_cloud.hpp"

namespace dagdiff {

/// Pixel grid; vertex id = row * width + col.
struct GridSpec {
  std::size_t height = 1;
  std::size_t width = 1;

  VertexId id(std::size_t row, std::size_t col) const noexcept {
    return static_cast<VertexId>(row * width + col);
  }
  std::size_t size() const noexcept { return height * width; }
};

/// Four 3-way DAGs: +x (left to right), -x, +y (top to bottom), -y. In the
/// +x DAG pixel (r,c) is fed by (r-1,c-1), (r,c-1) and (r+1,c-1).
MultiDagSet build_grid_dags(const GridSpec& spec);

/// Row-major label image; labels must cover [0, S) without gaps.
class SuperpixelMap {
 public:
  SuperpixelMap(std::size_t height, std::size_t width, std::vector<std::uint32_t> labels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t num_superpixels() const noexcept { return count_; }
  std::uint32_t label(std::size_t row, std::size_t col) const noexcept {
    return labels_[row * width_ + col];
  }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }

 private:
  std::size_t height_, width_, count_ = 0;
  std::vector<std::uint32_t> labels_;
};

struct SuperpixelDags {
  MultiDagSet dags;
  /// (row, col) per superpixel, including any tie-breaking offset that was
  /// applied, i.e. the coordinates the edge orientation was decided with.
  std::vector<std::array<double, 2>> centroids;
};

/// Superpixels sharing a 4-connected boundary become neighbours. Each pair
/// goes to the horizontal axis when |dcol| >= |drow| of the centroid delta,
/// otherwise vertical, oriented by centroid order along that axis.
SuperpixelDags build_superpixel_dags(const SuperpixelMap& map, std::uint64_t jitter_seed);

enum class NeighborSelection { Euclidean, Tangent };

struct NeighborMode {
  NeighborSelection selection = NeighborSelection::Euclidean;
  double radius = 1.0;
  std::size_t k = 6;
};

/// Throws InvalidArgument unless radius > 0 and 1 <= k < cloud size.
void validate_mode(const NeighborMode& mode, std::size_t cloud_size);

/// Twice the median nearest-neighbour distance; the fallback radius.
double default_radius(const PointCloud& cloud);

/// Points strictly within mode.radius of `query`, nearest first (ties by id).
std::vector<Neighbor> knn_search(const PointCloud& cloud, VertexId query,
                                 const NeighborMode& mode);
std::vector<Neighbor> knn_search(const KdTree& index, const PointCloud& cloud, VertexId query,
                                 const NeighborMode& mode);

/// The k candidates closest to the tangent plane at `query`, i.e. smallest
/// |(P(query) - P(j)) . n(query)|; ties by Euclidean distance, then id.
std::vector<VertexId> tangent_select(const PointCloud& cloud, VertexId query,
                                     std::span<const Neighbor> candidates, std::size_t k);

/// Undirected k-neighbour relation, symmetrised with OR, as sorted (i<j) pairs.
std::vector<Edge> pointcloud_neighbor_pairs(const PointCloud& cloud, const NeighborMode& mode);

/// Six DAGs (+x,-x,+y,-y,+z,-z). Each neighbour pair is placed on the axis of
/// its largest displacement component (ties x, y, z) and oriented by
/// coordinate order along it.
MultiDagSet build_pointcloud_dags(const PointCloud& cloud, const NeighborMode& mode,
                                  std::uint64_t jitter_seed = 0);

/// PCA normals over the k nearest points (the point itself included), signed
/// so that z >= 0, then y >= 0, then x >= 0.
std::vector<Vec3> estimate_normals(const PointCloud& cloud, std::size_t k);

}  // namespace dagdiff
