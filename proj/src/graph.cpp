#include "dagdiff/graph.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

constexpr std::array<std::string_view, 6> kTags = {"+x", "-x", "+y", "-y", "+z", "-z"};
constexpr std::array<std::string_view, 6> kShort = {"px", "nx", "py", "ny", "pz", "nz"};

// Predecessor CSR: offsets[v]..offsets[v+1] index into the incoming list.
void build_incoming(std::size_t n, std::span<const Edge> edges,
                    std::vector<std::size_t>& offsets,
                    std::vector<Dag::Incoming>& incoming) {
  offsets.assign(n + 1, 0);
  for (const Edge& e : edges) ++offsets[e.dst + 1];
  for (std::size_t v = 0; v < n; ++v) offsets[v + 1] += offsets[v];
  incoming.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    incoming[cursor[edges[k].dst]++] = {edges[k].src, static_cast<std::uint32_t>(k)};
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(incoming.begin() + static_cast<std::ptrdiff_t>(offsets[v]),
              incoming.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]),
              [](const Dag::Incoming& a, const Dag::Incoming& b) { return a.src < b.src; });
  }
}

}  // namespace

std::string_view to_string(Direction d) noexcept { return kTags[static_cast<int>(d)]; }

std::string_view short_name(Direction d) noexcept { return kShort[static_cast<int>(d)]; }

Direction parse_direction(std::string_view text) {
  for (std::size_t i = 0; i < kTags.size(); ++i) {
    if (text == kTags[i] || text == kShort[i]) return static_cast<Direction>(i);
  }
  if (text == "left-right") return Direction::PosX;
  if (text == "right-left") return Direction::NegX;
  if (text == "top-bottom") return Direction::PosY;
  if (text == "bottom-top") return Direction::NegY;
  throw Error(ErrorKind::ParseError, "unknown direction tag '" + std::string(text) + "'");
}

Direction opposite(Direction d) noexcept {
  return static_cast<Direction>(static_cast<int>(d) ^ 1);
}

bool is_positive(Direction d) noexcept { return (static_cast<int>(d) & 1) == 0; }

int axis_of(Direction d) noexcept { return static_cast<int>(d) / 2; }

void validate_acyclic(std::size_t num_vertices, std::span<const Edge> edges) {
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.src >= num_vertices || e.dst >= num_vertices) {
      throw Error(ErrorKind::EdgeOutOfRange,
                  "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                      " outside [0," + std::to_string(num_vertices) + ")",
                  k);
    }
    if (e.src == e.dst) {
      throw Error(ErrorKind::SelfLoop, "self-loop at vertex " + std::to_string(e.src), e.src);
    }
  }

  std::vector<std::size_t> offsets;
  std::vector<Dag::Incoming> incoming;
  build_incoming(num_vertices, edges, offsets, incoming);
  for (std::size_t v = 0; v < num_vertices; ++v) {
    for (std::size_t k = offsets[v] + 1; k < offsets[v + 1]; ++k) {
      if (incoming[k].src == incoming[k - 1].src) {
        throw Error(ErrorKind::DuplicateEdge,
                    "duplicate edge " + std::to_string(incoming[k].src) + "->" +
                        std::to_string(v),
                    incoming[k].edge);
      }
    }
  }

  // Iterative DFS over predecessor lists; a grey vertex reached again closes
  // a cycle through it.
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> colour(num_vertices, kWhite);
  std::vector<std::pair<VertexId, std::size_t>> stack;
  for (std::size_t root = 0; root < num_vertices; ++root) {
    if (colour[root] != kWhite) continue;
    stack.emplace_back(static_cast<VertexId>(root), offsets[root]);
    colour[root] = kGrey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == offsets[v + 1]) {
        colour[v] = kBlack;
        stack.pop_back();
        continue;
      }
      const VertexId w = incoming[next++].src;
      if (colour[w] == kGrey) {
        throw Error(ErrorKind::CycleDetected,
                    "directed cycle through vertex " + std::to_string(w), w);
      }
      if (colour[w] == kWhite) {
        colour[w] = kGrey;
        stack.emplace_back(w, offsets[w]);
      }
    }
  }
}

Dag::Dag(std::size_t num_vertices, std::vector<Edge> edges, Direction direction)
    : num_vertices_(num_vertices), edges_(std::move(edges)), direction_(direction) {
  validate_acyclic(num_vertices_, edges_);
  build_incoming(num_vertices_, edges_, offsets_, incoming_);
}

GroupSchedule::GroupSchedule(std::vector<std::vector<VertexId>> groups,
                             std::size_t num_vertices)
    : groups_(std::move(groups)), group_of_(num_vertices, UINT32_MAX) {
  for (std::size_t p = 0; p < groups_.size(); ++p) {
    for (VertexId v : groups_[p]) {
      if (v >= num_vertices || group_of_[v] != UINT32_MAX) {
        throw Error(ErrorKind::ScheduleMismatch,
                    "vertex " + std::to_string(v) + " missing from range or listed twice", v);
      }
      group_of_[v] = static_cast<std::uint32_t>(p);
    }
  }
  for (std::size_t v = 0; v < num_vertices; ++v) {
    if (group_of_[v] == UINT32_MAX) {
      throw Error(ErrorKind::ScheduleMismatch,
                  "vertex " + std::to_string(v) + " not assigned to a group", v);
    }
  }
}

GroupSchedule schedule_groups(const Dag& dag) {
  const std::size_t n = dag.num_vertices();
  std::vector<std::vector<VertexId>> successors(n);
  std::vector<std::size_t> pending(n, 0);
  for (const Edge& e : dag.edges()) {
    successors[e.src].push_back(e.dst);
    ++pending[e.dst];
  }

  std::vector<std::vector<VertexId>> groups;
  std::vector<VertexId> sources;
  for (VertexId v = 0; v < n; ++v) {
    if (pending[v] == 0) sources.push_back(v);
  }
  std::size_t collected = 0;
  while (!sources.empty()) {
    std::vector<VertexId> next;
    for (VertexId v : sources) {
      for (VertexId w : successors[v]) {
        if (--pending[w] == 0) next.push_back(w);
      }
    }
    collected += sources.size();
    std::sort(next.begin(), next.end());
    groups.push_back(std::move(sources));
    sources = std::move(next);
  }
  if (collected != n) {
    // Unreachable for a constructed Dag.
    throw Error(ErrorKind::CycleDetected, "source peeling stalled before covering all vertices");
  }
  return GroupSchedule(std::move(groups), n);
}

void check_schedule(const GroupSchedule& schedule, const Dag& dag) {
  if (schedule.num_vertices() != dag.num_vertices()) {
    throw Error(ErrorKind::ScheduleMismatch,
                "schedule covers " + std::to_string(schedule.num_vertices()) +
                    " vertices, dag has " + std::to_string(dag.num_vertices()));
  }
  for (std::size_t k = 0; k < dag.num_edges(); ++k) {
    const Edge& e = dag.edges()[k];
    if (schedule.group_of(e.src) >= schedule.group_of(e.dst)) {
      throw Error(ErrorKind::ScheduleMismatch,
                  "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                      " does not move to a later group",
                  k);
    }
  }
}

MultiDagSet::MultiDagSet(std::vector<Dag> dags) : dags_(std::move(dags)) {
  for (const Dag& d : dags_) {
    if (d.num_vertices() != dags_.front().num_vertices()) {
      throw Error(ErrorKind::MismatchedVertexCounts, "member dags disagree on vertex count");
    }
  }
  schedules_.reserve(dags_.size());
  for (const Dag& d : dags_) schedules_.push_back(schedule_groups(d));
}

std::size_t MultiDagSet::num_vertices() const noexcept {
  return dags_.empty() ? 0 : dags_.front().num_vertices();
}

std::size_t MultiDagSet::index_of(Direction d) const noexcept {
  for (std::size_t i = 0; i < dags_.size(); ++i) {
    if (dags_[i].direction() == d) return i;
  }
  return dags_.size();
}

std::vector<SymmetryViolation> check_bidirectional_symmetry(const MultiDagSet& set) {
  if (set.size() % 2 != 0) {
    throw Error(ErrorKind::UnpairedDirection, "odd number of dags in set");
  }
  std::vector<SymmetryViolation> report;
  for (const Dag& forward : set.dags()) {
    const std::size_t mate = set.index_of(opposite(forward.direction()));
    if (mate == set.size()) {
      throw Error(ErrorKind::UnpairedDirection,
                  "no dag tagged " + std::string(to_string(opposite(forward.direction()))));
    }
    const Dag& reverse = set.dag(mate);
    if (reverse.num_vertices() != forward.num_vertices()) {
      throw Error(ErrorKind::MismatchedVertexCounts, "paired dags disagree on vertex count");
    }
    std::set<Edge> mirrored;
    for (const Edge& e : reverse.edges()) mirrored.insert({e.dst, e.src});
    for (const Edge& e : forward.edges()) {
      if (!mirrored.contains(e)) report.push_back({forward.direction(), e.src, e.dst});
    }
  }
  return report;
}

void write_dag(std::ostream& out, const Dag& dag) {
  out << "dag " << dag.num_vertices() << ' ' << dag.num_edges() << ' '
      << to_string(dag.direction()) << '\n';
  for (const Edge& e : dag.edges()) out << e.src << ' ' << e.dst << '\n';
}

Dag read_dag(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty graph file");
  std::istringstream header(line);
  std::string magic, tag;
  std::size_t n = 0, m = 0;
  if (!(header >> magic >> n >> m >> tag) || magic != "dag") {
    throw Error(ErrorKind::ParseError, "bad graph header '" + line + "'");
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    long long src = -1, dst = -1;
    if (!(in >> src >> dst) || src < 0 || dst < 0) {
      throw Error(ErrorKind::ParseError, "bad edge line " + std::to_string(k + 2), k);
    }
    edges.push_back({static_cast<VertexId>(src), static_cast<VertexId>(dst)});
  }
  return Dag(n, std::move(edges), parse_direction(tag));
}

}  // namespace dagdiff
