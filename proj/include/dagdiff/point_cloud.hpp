#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dagdiff/graph.hpp"

namespace dagdiff {

using Vec3 = std::array<double, 3>;

/// Positions with optional unit normals and optional [0,1] colours.
class PointCloud {
 public:
  explicit PointCloud(std::vector<Vec3> positions,
                      std::optional<std::vector<Vec3>> normals = std::nullopt,
                      std::optional<std::vector<Vec3>> colors = std::nullopt);

  std::size_t size() const noexcept { return positions_.size(); }
  std::span<const Vec3> positions() const noexcept { return positions_; }
  const Vec3& position(VertexId i) const noexcept { return positions_[i]; }

  bool has_normals() const noexcept { return normals_.has_value(); }
  bool has_colors() const noexcept { return colors_.has_value(); }
  /// Throw MissingNormals / MissingColors when absent.
  std::span<const Vec3> normals() const;
  std::span<const Vec3> colors() const;

  PointCloud with_normals(std::vector<Vec3> normals) const;
  PointCloud translated(const Vec3& offset) const;

 private:
  std::vector<Vec3> positions_;
  std::optional<std::vector<Vec3>> normals_;
  std::optional<std::vector<Vec3>> colors_;
};

double distance(const Vec3& a, const Vec3& b) noexcept;

struct Neighbor {
  VertexId id;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact 3-d tree over a fixed set of points. Every distance it reports is
/// computed by `distance()`, so results agree bit for bit with a linear scan.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 8);

  /// All points with distance < radius, excluding `exclude` (pass size() to
  /// keep everything), sorted by distance then id.
  std::vector<Neighbor> radius_search(const Vec3& query, double radius,
                                      std::size_t exclude) const;
  /// The k nearest points (ties by id), excluding `exclude`.
  std::vector<Neighbor> nearest(const Vec3& query, std::size_t k, std::size_t exclude) const;

  std::size_t size() const noexcept { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;  // range into order_
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
    Vec3 lo{}, hi{};  // bounding box
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  static double box_distance(const Node& node, const Vec3& q) noexcept;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace dagdiff
