#include "dagdiff/builders.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

constexpr int kJitterAttempts = 8;

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <std::size_t D>
int dominant_axis(const std::array<double, D>& a, const std::array<double, D>& b) {
  int axis = 0;
  for (int k = 1; k < static_cast<int>(D); ++k) {
    if (std::abs(b[k] - a[k]) > std::abs(b[axis] - a[axis])) axis = k;
  }
  return axis;
}

// Offsets coordinates that coincide with a neighbour's until every pair is
// separated along its dominant axis. Each offset component is drawn from
// (-step, step).
template <std::size_t D>
void separate_coincident(std::vector<std::array<double, D>>& coords,
                         std::span<const Edge> pairs, std::uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt <= kJitterAttempts; ++attempt) {
    std::vector<VertexId> stuck;
    for (const Edge& e : pairs) {
      const int axis = dominant_axis(coords[e.src], coords[e.dst]);
      if (coords[e.src][axis] == coords[e.dst][axis]) {
        stuck.push_back(e.src);
        stuck.push_back(e.dst);
      }
    }
    if (stuck.empty()) return;
    if (attempt == kJitterAttempts) break;
    std::sort(stuck.begin(), stuck.end());
    stuck.erase(std::unique(stuck.begin(), stuck.end()), stuck.end());
    for (VertexId v : stuck) {
      for (std::size_t k = 0; k < D; ++k) coords[v][k] += (2.0 * unit_uniform(rng) - 1.0) * step;
    }
  }
  throw Error(ErrorKind::DegenerateCentroids,
              "coincident coordinates survived " + std::to_string(kJitterAttempts) +
                  " jitter attempts");
}

// Places each pair on its dominant axis, oriented from the smaller to the
// larger coordinate in the positive DAG and mirrored in the negative one.
template <std::size_t D>
MultiDagSet axis_decompose(const std::vector<std::array<double, D>>& coords,
                           std::span<const Edge> pairs) {
  std::array<std::vector<Edge>, 2 * D> edges;
  for (const Edge& e : pairs) {
    const int axis = dominant_axis(coords[e.src], coords[e.dst]);
    VertexId lo = e.src, hi = e.dst;
    if (coords[hi][axis] < coords[lo][axis]) std::swap(lo, hi);
    edges[2 * axis].push_back({lo, hi});
    edges[2 * axis + 1].push_back({hi, lo});
  }
  std::vector<Dag> dags;
  for (std::size_t d = 0; d < 2 * D; ++d) {
    std::sort(edges[d].begin(), edges[d].end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.dst, a.src) < std::tie(b.dst, b.src); });
    dags.emplace_back(coords.size(), std::move(edges[d]), static_cast<Direction>(d));
  }
  return MultiDagSet(std::move(dags));
}

}  // namespace

MultiDagSet build_grid_dags(const GridSpec& spec) {
  if (spec.height == 0 || spec.width == 0) {
    throw Error(ErrorKind::InvalidArgument, "grid dimensions must be positive");
  }
  const auto h = static_cast<long>(spec.height);
  const auto w = static_cast<long>(spec.width);
  auto inside = [&](long r, long c) { return r >= 0 && r < h && c >= 0 && c < w; };
  auto id = [&](long r, long c) { return static_cast<VertexId>(r * w + c); };

  // (dr, dc) of the upstream column/row for each direction.
  struct Sweep {
    Direction dir;
    bool horizontal;
    long step;
  };
  constexpr Sweep sweeps[] = {{Direction::PosX, true, -1},
                              {Direction::NegX, true, +1},
                              {Direction::PosY, false, -1},
                              {Direction::NegY, false, +1}};
  std::vector<Dag> dags;
  for (const Sweep& s : sweeps) {
    std::vector<Edge> edges;
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        for (long lateral = -1; lateral <= 1; ++lateral) {
          const long pr = s.horizontal ? r + lateral : r + s.step;
          const long pc = s.horizontal ? c + s.step : c + lateral;
          if (inside(pr, pc)) edges.push_back({id(pr, pc), id(r, c)});
        }
      }
    }
    dags.emplace_back(spec.size(), std::move(edges), s.dir);
  }
  return MultiDagSet(std::move(dags));
}

SuperpixelMap::SuperpixelMap(std::size_t height, std::size_t width,
                             std::vector<std::uint32_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (height_ == 0 || width_ == 0 || labels_.size() != height_ * width_) {
    throw Error(ErrorKind::ShapeMismatch, "label map does not match its dimensions");
  }
  count_ = static_cast<std::size_t>(*std::max_element(labels_.begin(), labels_.end())) + 1;
  std::vector<bool> seen(count_, false);
  for (std::uint32_t l : labels_) seen[l] = true;
  for (std::size_t l = 0; l < count_; ++l) {
    if (!seen[l]) {
      throw Error(ErrorKind::InvalidArgument,
                  "superpixel label " + std::to_string(l) + " never occurs", l);
    }
  }
}

SuperpixelDags build_superpixel_dags(const SuperpixelMap& map, std::uint64_t jitter_seed) {
  const std::size_t s = map.num_superpixels();
  std::vector<std::array<double, 2>> centroids(s, {0.0, 0.0});
  std::vector<std::size_t> counts(s, 0);
  std::set<Edge> adjacent;
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      const std::uint32_t l = map.label(r, c);
      centroids[l][0] += static_cast<double>(r);
      centroids[l][1] += static_cast<double>(c);
      ++counts[l];
      auto link = [&](std::uint32_t other) {
        if (other != l) adjacent.insert({std::min(l, other), std::max(l, other)});
      };
      if (c + 1 < map.width()) link(map.label(r, c + 1));
      if (r + 1 < map.height()) link(map.label(r + 1, c));
    }
  }
  for (std::size_t l = 0; l < s; ++l) {
    centroids[l][0] /= static_cast<double>(counts[l]);
    centroids[l][1] /= static_cast<double>(counts[l]);
  }
  const std::vector<Edge> pairs(adjacent.begin(), adjacent.end());

  // Work in (col, row) order so the dominant-axis tie (|dcol| == |drow|)
  // resolves to the horizontal axis.
  std::vector<std::array<double, 2>> xy(s);
  for (std::size_t l = 0; l < s; ++l) xy[l] = {centroids[l][1], centroids[l][0]};
  separate_coincident(xy, pairs, jitter_seed, 0.1);
  for (std::size_t l = 0; l < s; ++l) centroids[l] = {xy[l][1], xy[l][0]};

  return {axis_decompose(xy, pairs), std::move(centroids)};
}

void validate_mode(const NeighborMode& mode, std::size_t cloud_size) {
  if (!(mode.radius > 0.0) || !std::isfinite(mode.radius)) {
    throw Error(ErrorKind::InvalidArgument, "neighbour radius must be positive");
  }
  if (mode.k < 1 || mode.k >= cloud_size) {
    throw Error(ErrorKind::InvalidArgument,
                "neighbour count k must satisfy 1 <= k < " + std::to_string(cloud_size));
  }
}

double default_radius(const PointCloud& cloud) {
  if (cloud.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two points");
  const KdTree index(cloud.positions());
  std::vector<double> nearest(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    nearest[i] = index.nearest(cloud.position(static_cast<VertexId>(i)), 1, i).front().distance;
  }
  const auto mid = nearest.begin() + static_cast<std::ptrdiff_t>((nearest.size() - 1) / 2);
  std::nth_element(nearest.begin(), mid, nearest.end());
  if (!(*mid > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "median nearest-neighbour distance is zero");
  }
  return 2.0 * *mid;
}

std::vector<Neighbor> knn_search(const PointCloud& cloud, VertexId query,
                                 const NeighborMode& mode) {
  return knn_search(KdTree(cloud.positions()), cloud, query, mode);
}

std::vector<Neighbor> knn_search(const KdTree& index, const PointCloud& cloud, VertexId query,
                                 const NeighborMode& mode) {
  if (query >= cloud.size()) {
    throw Error(ErrorKind::VertexOutOfRange, "query outside the cloud", query);
  }
  return index.radius_search(cloud.position(query), mode.radius, query);
}

std::vector<VertexId> tangent_select(const PointCloud& cloud, VertexId query,
                                     std::span<const Neighbor> candidates, std::size_t k) {
  const Vec3& n = cloud.normals()[query];
  const Vec3& p = cloud.position(query);
  struct Ranked {
    double offset;
    Neighbor nb;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(candidates.size());
  for (const Neighbor& c : candidates) {
    const Vec3& q = cloud.position(c.id);
    const double proj = (p[0] - q[0]) * n[0] + (p[1] - q[1]) * n[1] + (p[2] - q[2]) * n[2];
    ranked.push_back({std::abs(proj), c});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.offset != b.offset) return a.offset < b.offset;
    if (a.nb.distance != b.nb.distance) return a.nb.distance < b.nb.distance;
    return a.nb.id < b.nb.id;
  });
  std::vector<VertexId> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].nb.id);
  return out;
}

std::vector<Edge> pointcloud_neighbor_pairs(const PointCloud& cloud, const NeighborMode& mode) {
  validate_mode(mode, cloud.size());
  if (mode.selection == NeighborSelection::Tangent) (void)cloud.normals();
  const KdTree index(cloud.positions());
  std::set<Edge> pairs;
  for (VertexId i = 0; i < cloud.size(); ++i) {
    const auto candidates = knn_search(index, cloud, i, mode);
    std::vector<VertexId> chosen;
    if (mode.selection == NeighborSelection::Tangent) {
      chosen = tangent_select(cloud, i, candidates, mode.k);
    } else {
      for (std::size_t j = 0; j < std::min(mode.k, candidates.size()); ++j) {
        chosen.push_back(candidates[j].id);
      }
    }
    for (VertexId j : chosen) pairs.insert({std::min(i, j), std::max(i, j)});
  }
  return {pairs.begin(), pairs.end()};
}

MultiDagSet build_pointcloud_dags(const PointCloud& cloud, const NeighborMode& mode,
                                  std::uint64_t jitter_seed) {
  const std::vector<Edge> pairs = pointcloud_neighbor_pairs(cloud, mode);
  std::vector<Vec3> coords(cloud.positions().begin(), cloud.positions().end());
  separate_coincident(coords, pairs, jitter_seed, 1e-3 * mode.radius);
  return axis_decompose(coords, pairs);
}

std::vector<Vec3> estimate_normals(const PointCloud& cloud, std::size_t k) {
  if (cloud.size() < 3 || k < 3) {
    throw Error(ErrorKind::InvalidArgument, "normal estimation needs N >= 3 and k >= 3");
  }
  // Components this small are treated as zero when choosing the sign.
  constexpr double kSignTolerance = 1e-9;
  const KdTree index(cloud.positions());
  std::vector<Vec3> normals(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.nearest(cloud.position(static_cast<VertexId>(i)), k, cloud.size());
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const Neighbor& nb : nbrs) mean += Eigen::Vector3d(cloud.position(nb.id).data());
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Neighbor& nb : nbrs) {
      const Eigen::Vector3d d = Eigen::Vector3d(cloud.position(nb.id).data()) - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d eig = solver.eigenvalues();
    if (!(eig[2] > 0.0) || eig[1] <= 1e-12 * eig[2]) {
      throw Error(ErrorKind::DegenerateNeighborhood,
                  "neighbourhood of point " + std::to_string(i) + " is collinear", i);
    }
    Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();
    for (int a = 2; a >= 0; --a) {
      if (std::abs(n[a]) > kSignTolerance) {
        if (n[a] < 0.0) n = -n;
        break;
      }
    }
    normals[i] = {n[0], n[1], n[2]};
  }
  return normals;
}

}  // namespace dagdiff
