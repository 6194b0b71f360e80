#include "dagdiff/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

// Node pruning compares bounding-box distances against result distances that
// were rounded differently; this slack keeps pruning conservative.
constexpr double kPruneSlack = 1e-9;

bool closer(const Neighbor& a, const Neighbor& b) noexcept {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

}  // namespace

PointCloud::PointCloud(std::vector<Vec3> positions, std::optional<std::vector<Vec3>> normals,
                       std::optional<std::vector<Vec3>> colors)
    : positions_(std::move(positions)), normals_(std::move(normals)), colors_(std::move(colors)) {
  if (positions_.empty()) throw Error(ErrorKind::InvalidArgument, "point cloud is empty");
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    for (double v : positions_[i]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::InvalidArgument, "non-finite position at " + std::to_string(i), i);
      }
    }
  }
  if (normals_) {
    if (normals_->size() != positions_.size()) {
      throw Error(ErrorKind::ShapeMismatch, "normal count differs from point count");
    }
    for (std::size_t i = 0; i < normals_->size(); ++i) {
      const Vec3& n = (*normals_)[i];
      const double norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      if (!(std::abs(norm - 1.0) <= 1e-6)) {
        throw Error(ErrorKind::InvalidArgument, "normal " + std::to_string(i) + " is not unit", i);
      }
    }
  }
  if (colors_) {
    if (colors_->size() != positions_.size()) {
      throw Error(ErrorKind::ShapeMismatch, "colour count differs from point count");
    }
    for (std::size_t i = 0; i < colors_->size(); ++i) {
      for (double v : (*colors_)[i]) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw Error(ErrorKind::InvalidArgument,
                      "colour " + std::to_string(i) + " outside [0,1]", i);
        }
      }
    }
  }
}

std::span<const Vec3> PointCloud::normals() const {
  if (!normals_) throw Error(ErrorKind::MissingNormals, "point cloud has no normals");
  return *normals_;
}

std::span<const Vec3> PointCloud::colors() const {
  if (!colors_) throw Error(ErrorKind::MissingColors, "point cloud has no colours");
  return *colors_;
}

PointCloud PointCloud::with_normals(std::vector<Vec3> normals) const {
  return PointCloud(positions_, std::move(normals), colors_);
}

PointCloud PointCloud::translated(const Vec3& offset) const {
  std::vector<Vec3> moved = positions_;
  for (Vec3& p : moved) {
    for (int a = 0; a < 3; ++a) p[a] += offset[a];
  }
  return PointCloud(std::move(moved), normals_, colors_);
}

double distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  Node node{begin, end};
  node.lo = node.hi = points_[order_[begin]];
  for (std::uint32_t k = begin; k < end; ++k) {
    const Vec3& p = points_[order_[k]];
    for (int a = 0; a < 3; ++a) {
      node.lo[a] = std::min(node.lo[a], p[a]);
      node.hi[a] = std::max(node.hi[a], p[a]);
    }
  }
  const auto index = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return index;

  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (node.hi[a] - node.lo[a] > node.hi[axis] - node.lo[axis]) axis = a;
  }
  if (node.hi[axis] == node.lo[axis]) return index;  // all coincident
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis] ||
                            (points_[a][axis] == points_[b][axis] && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[index].axis = axis;
  nodes_[index].split = points_[order_[mid]][axis];
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

double KdTree::box_distance(const Node& node, const Vec3& q) noexcept {
  double sq = 0.0;
  for (int a = 0; a < 3; ++a) {
    double d = 0.0;
    if (q[a] < node.lo[a]) d = node.lo[a] - q[a];
    else if (q[a] > node.hi[a]) d = q[a] - node.hi[a];
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::vector<Neighbor> KdTree::radius_search(const Vec3& query, double radius,
                                            std::size_t exclude) const {
  std::vector<Neighbor> found;
  if (nodes_.empty()) return found;
  const double limit = radius * (1.0 + kPruneSlack);
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_distance(node, query) > limit) continue;
    if (node.left < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::uint32_t id = order_[k];
        if (id == exclude) continue;
        const double d = distance(query, points_[id]);
        if (d < radius) found.push_back({id, d});
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  std::sort(found.begin(), found.end(), closer);
  return found;
}

std::vector<Neighbor> KdTree::nearest(const Vec3& query, std::size_t k,
                                      std::size_t exclude) const {
  if (k == 0 || nodes_.empty()) return {};
  // Max-heap on (distance, id): the top is the current worst kept neighbour.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(closer);
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (heap.size() == k && box_distance(node, query) > heap.top().distance * (1.0 + kPruneSlack)) {
      continue;
    }
    if (node.left < 0) {
      for (std::uint32_t j = node.begin; j < node.end; ++j) {
        const std::uint32_t id = order_[j];
        if (id == exclude) continue;
        const Neighbor cand{id, distance(query, points_[id])};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (closer(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    // Visit the nearer child first (pushed last).
    const bool left_first = query[node.axis] < node.split;
    stack.push_back(left_first ? node.right : node.left);
    stack.push_back(left_first ? node.left : node.right);
  }
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace dagdiff
