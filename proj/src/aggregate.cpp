#include "dagdiff/aggregate.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

auto pixel_key(const Correspondence& c) { return std::tie(c.image, c.row, c.col); }

}  // namespace

CorrespondenceMap::CorrespondenceMap(std::vector<Correspondence> entries)
    : entries_(std::move(entries)) {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Correspondence& a, const Correspondence& b) {
                     return pixel_key(a) < pixel_key(b);
                   });
  for (std::size_t k = 1; k < entries_.size(); ++k) {
    if (pixel_key(entries_[k]) == pixel_key(entries_[k - 1])) {
      throw Error(ErrorKind::InvalidArgument,
                  fmt::format("pixel ({},{}) of image {} linked twice", entries_[k].row,
                              entries_[k].col, entries_[k].image),
                  k);
    }
  }
}

VertexAggregate aggregate_pixels_to_vertices(std::span<const PixelFeatures> images,
                                             const CorrespondenceMap& corr,
                                             std::size_t n_vertices) {
  std::size_t channels = images.empty() ? 0 : images.front().values.cols();
  for (const PixelFeatures& img : images) {
    if (img.values.cols() != channels || img.values.rows() != img.height * img.width) {
      throw Error(ErrorKind::ShapeMismatch, "pixel feature maps disagree in shape");
    }
  }
  VertexAggregate out{FeatureMatrix(n_vertices, channels), std::vector<bool>(n_vertices, false)};
  std::vector<std::size_t> count(n_vertices, 0);
  for (const Correspondence& c : corr.entries()) {
    if (c.vertex >= n_vertices) {
      throw Error(ErrorKind::VertexOutOfRange,
                  fmt::format("vertex {} outside [0,{})", c.vertex, n_vertices), c.vertex);
    }
    if (c.image >= images.size() || c.row >= images[c.image].height ||
        c.col >= images[c.image].width) {
      throw Error(ErrorKind::PixelOutOfRange,
                  fmt::format("pixel ({},{}) of image {} does not exist", c.row, c.col, c.image));
    }
    const PixelFeatures& img = images[c.image];
    const auto src = img.values.row(c.row * img.width + c.col);
    // Running mean: exact when every linked pixel carries the same value.
    auto dst = out.features.row(c.vertex);
    const double n = static_cast<double>(++count[c.vertex]);
    for (std::size_t k = 0; k < channels; ++k) dst[k] += (src[k] - dst[k]) / n;
    out.covered[c.vertex] = true;
  }
  return out;
}

PixelProjection project_vertices_to_pixels(const FeatureMatrix& vf, const CorrespondenceMap& corr,
                                           std::uint32_t image, std::size_t height,
                                           std::size_t width) {
  PixelProjection out{{height, width, FeatureMatrix(height * width, vf.cols())},
                      std::vector<bool>(height * width, false)};
  for (const Correspondence& c : corr.entries()) {
    if (c.image != image) continue;
    if (c.vertex >= vf.rows()) {
      throw Error(ErrorKind::VertexOutOfRange,
                  fmt::format("vertex {} outside [0,{})", c.vertex, vf.rows()), c.vertex);
    }
    if (c.row >= height || c.col >= width) {
      throw Error(ErrorKind::PixelOutOfRange,
                  fmt::format("pixel ({},{}) outside {}x{}", c.row, c.col, height, width));
    }
    const std::size_t p = c.row * width + c.col;
    std::ranges::copy(vf.row(c.vertex), out.pixels.values.row(p).begin());
    out.covered[p] = true;
  }
  return out;
}

CorrespondenceMap read_correspondences(std::istream& in) {
  std::vector<Correspondence> entries;
  long long image, row, col, vertex;
  while (in >> image >> row >> col >> vertex) {
    if (image < 0 || row < 0 || col < 0 || vertex < 0) {
      throw Error(ErrorKind::ParseError, "negative index in correspondence file", entries.size());
    }
    entries.push_back({static_cast<std::uint32_t>(image), static_cast<std::uint32_t>(row),
                       static_cast<std::uint32_t>(col), static_cast<VertexId>(vertex)});
  }
  if (!in.eof()) throw Error(ErrorKind::ParseError, "malformed correspondence line", entries.size());
  return CorrespondenceMap(std::move(entries));
}

void write_correspondences(std::ostream& out, const CorrespondenceMap& corr) {
  for (const Correspondence& c : corr.entries()) {
    out << c.image << ' ' << c.row << ' ' << c.col << ' ' << c.vertex << '\n';
  }
}

}  // namespace dagdiff
