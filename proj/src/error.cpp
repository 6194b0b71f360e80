#include "dagdiff/error.hpp"

namespace dagdiff {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::EdgeOutOfRange: return "EdgeOutOfRange";
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorKind::MismatchedVertexCounts: return "MismatchedVertexCounts";
    case ErrorKind::UnpairedDirection: return "UnpairedDirection";
    case ErrorKind::DegenerateCentroids: return "DegenerateCentroids";
    case ErrorKind::MissingNormals: return "MissingNormals";
    case ErrorKind::MissingColors: return "MissingColors";
    case ErrorKind::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::VertexOutOfRange: return "VertexOutOfRange";
    case ErrorKind::PixelOutOfRange: return "PixelOutOfRange";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      index_(index) {}

}  // namespace dagdiff
