#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace dagdiff {

using VertexId = std::uint32_t;

/// `src` feeds `dst`: src is a predecessor of dst during propagation.
struct Edge {
  VertexId src = 0;
  VertexId dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Propagation direction. Grids use x for columns (left to right is PosX)
/// and y for rows (top to bottom is PosY).
enum class Direction : std::uint8_t { PosX, NegX, PosY, NegY, PosZ, NegZ };

std::string_view to_string(Direction d) noexcept;
Direction parse_direction(std::string_view text);
Direction opposite(Direction d) noexcept;
bool is_positive(Direction d) noexcept;
/// Filesystem-friendly short name: px, nx, py, ny, pz, nz.
std::string_view short_name(Direction d) noexcept;
/// Axis index 0, 1, 2 for x, y, z.
int axis_of(Direction d) noexcept;

/// Throws Error{EdgeOutOfRange | SelfLoop | DuplicateEdge | CycleDetected}.
/// CycleDetected carries one vertex lying on a directed cycle.
void validate_acyclic(std::size_t num_vertices, std::span<const Edge> edges);

/// Immutable directed acyclic graph. Edges keep their insertion order (the
/// edge index is what EdgeWeights align with); predecessor lists are sorted
/// by ascending source id.
class Dag {
 public:
  struct Incoming {
    VertexId src;
    std::uint32_t edge;
  };

  Dag(std::size_t num_vertices, std::vector<Edge> edges, Direction direction);

  std::size_t num_vertices() const noexcept { return num_vertices_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  Direction direction() const noexcept { return direction_; }

  std::span<const Incoming> predecessors(VertexId v) const noexcept {
    return {incoming_.data() + offsets_[v], incoming_.data() + offsets_[v + 1]};
  }

  friend bool operator==(const Dag& a, const Dag& b) {
    return a.num_vertices_ == b.num_vertices_ && a.direction_ == b.direction_ &&
           a.edges_ == b.edges_;
  }

 private:
  std::size_t num_vertices_;
  std::vector<Edge> edges_;
  Direction direction_;
  std::vector<std::size_t> offsets_;
  std::vector<Incoming> incoming_;
};

/// Wavefront grouping of a Dag: no edge inside a group, every edge goes from
/// an earlier group to a later one.
class GroupSchedule {
 public:
  GroupSchedule(std::vector<std::vector<VertexId>> groups, std::size_t num_vertices);

  std::size_t num_groups() const noexcept { return groups_.size(); }
  std::size_t num_vertices() const noexcept { return group_of_.size(); }
  std::span<const VertexId> group(std::size_t p) const noexcept { return groups_[p]; }
  const std::vector<std::vector<VertexId>>& groups() const noexcept { return groups_; }
  std::uint32_t group_of(VertexId v) const noexcept { return group_of_[v]; }

  friend bool operator==(const GroupSchedule&, const GroupSchedule&) = default;

 private:
  std::vector<std::vector<VertexId>> groups_;
  std::vector<std::uint32_t> group_of_;
};

/// Longest-path layering obtained by repeatedly peeling the current sources.
GroupSchedule schedule_groups(const Dag& dag);

/// Throws Error{ScheduleMismatch} unless `schedule` partitions the vertices of
/// `dag` and orders every edge strictly forward.
void check_schedule(const GroupSchedule& schedule, const Dag& dag);

/// One Dag per direction plus the matching schedules.
class MultiDagSet {
 public:
  MultiDagSet() = default;
  explicit MultiDagSet(std::vector<Dag> dags);

  std::size_t size() const noexcept { return dags_.size(); }
  std::size_t num_vertices() const noexcept;
  const std::vector<Dag>& dags() const noexcept { return dags_; }
  const std::vector<GroupSchedule>& schedules() const noexcept { return schedules_; }
  const Dag& dag(std::size_t i) const { return dags_.at(i); }
  const GroupSchedule& schedule(std::size_t i) const { return schedules_.at(i); }
  /// Index of the Dag tagged `d`, or size() when absent.
  std::size_t index_of(Direction d) const noexcept;

 private:
  std::vector<Dag> dags_;
  std::vector<GroupSchedule> schedules_;
};

struct SymmetryViolation {
  Direction direction;  // the Dag holding the unmirrored edge
  VertexId src;
  VertexId dst;

  friend bool operator==(const SymmetryViolation&, const SymmetryViolation&) = default;
};

/// Every edge (i,j) of a Dag must appear as (j,i) in the Dag tagged with the
/// opposite direction. Throws MismatchedVertexCounts or UnpairedDirection.
std::vector<SymmetryViolation> check_bidirectional_symmetry(const MultiDagSet& set);

/// Text format: `dag <N> <E> <tag>` then one `<src> <dst>` line per edge.
void write_dag(std::ostream& out, const Dag& dag);
Dag read_dag(std::istream& in);

}  // namespace dagdiff
