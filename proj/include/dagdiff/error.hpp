#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dagdiff {

enum class ErrorKind {
  CycleDetected,
  SelfLoop,
  EdgeOutOfRange,
  DuplicateEdge,
  ScheduleMismatch,
  MismatchedVertexCounts,
  UnpairedDirection,
  DegenerateCentroids,
  MissingNormals,
  MissingColors,
  DegenerateNeighborhood,
  ShapeMismatch,
  VertexOutOfRange,
  PixelOutOfRange,
  ChannelMismatch,
  DivergedLoss,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-checkable kind plus an optional index
/// (offending vertex, edge, or training step depending on the kind).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace dagdiff
