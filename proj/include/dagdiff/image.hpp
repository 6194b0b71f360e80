#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dagdiff {

/// Interleaved height x width x channels image. RGB and mask buffers hold
/// values in [0,1]; Lab buffers hold L in [0,100] and a, b in roughly
/// [-128,128].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  double& at(std::size_t r, std::size_t c, std::size_t ch) noexcept {
    return data_[(r * width_ + c) * channels_ + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const noexcept {
    return data_[(r * width_ + c) * channels_ + ch];
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t height_ = 0, width_ = 0, channels_ = 0;
  std::vector<double> data_;
};

/// sRGB in [0,1] to CIE L*a*b* under D65. Throws ChannelMismatch unless the
/// input has 3 channels.
ImageBuffer rgb_to_lab(const ImageBuffer& rgb);
/// Inverse of rgb_to_lab, clamped to [0,1].
ImageBuffer lab_to_rgb(const ImageBuffer& lab);

std::array<double, 3> srgb_to_lab(const std::array<double, 3>& rgb);
std::array<double, 3> lab_to_srgb(const std::array<double, 3>& lab);

/// Binary P6 (3 channels) or P5 (1 channel), 8-bit.
ImageBuffer read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const ImageBuffer& img);

/// Raw integer samples of a P5 file (8- or 16-bit), e.g. superpixel labels.
struct GrayLevels {
  std::size_t height = 0, width = 0;
  std::vector<std::uint32_t> values;
};
GrayLevels read_pgm_levels(const std::filesystem::path& path);
void write_pgm_levels(const std::filesystem::path& path, const GrayLevels& levels);

}  // namespace dagdiff
