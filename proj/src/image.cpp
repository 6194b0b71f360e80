#include "dagdiff/image.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace {

// sRGB primaries to XYZ, D65 white point.
const Eigen::Matrix3d kRgbToXyz = (Eigen::Matrix3d() << 0.412453, 0.357580, 0.180423,
                                   0.212671, 0.715160, 0.072169,
                                   0.019334, 0.119193, 0.950227).finished();
const Eigen::Matrix3d kXyzToRgb = kRgbToXyz.inverse();
constexpr std::array<double, 3> kWhite = {0.95047, 1.0, 1.08883};

constexpr double kDelta = 6.0 / 29.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inverse(double f) {
  return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0);
}

std::string read_token(std::istream& in) {
  std::string token;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) return token;
      continue;
    }
    token += ch;
  }
  return token;
}

struct PnmHeader {
  int channels;
  std::size_t width, height;
  unsigned maxval;
};

PnmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  const std::string magic = read_token(in);
  PnmHeader h{};
  if (magic == "P6") h.channels = 3;
  else if (magic == "P5") h.channels = 1;
  else throw Error(ErrorKind::ParseError, path.string() + ": not a binary PPM/PGM file");
  try {
    h.width = std::stoul(read_token(in));
    h.height = std::stoul(read_token(in));
    h.maxval = static_cast<unsigned>(std::stoul(read_token(in)));
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, path.string() + ": malformed header");
  }
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 65535) {
    throw Error(ErrorKind::ParseError, path.string() + ": unsupported dimensions or maxval");
  }
  return h;
}

std::vector<std::uint32_t> read_samples(std::istream& in, std::size_t count, unsigned maxval,
                                        const std::filesystem::path& path) {
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(count * bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error(ErrorKind::ParseError, path.string() + ": truncated pixel data");
  }
  std::vector<std::uint32_t> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = bytes == 2 ? (std::uint32_t{raw[2 * k]} << 8) | raw[2 * k + 1] : raw[k];
  }
  return out;
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {}

std::array<double, 3> srgb_to_lab(const std::array<double, 3>& rgb) {
  const Eigen::Vector3d lin(srgb_to_linear(rgb[0]), srgb_to_linear(rgb[1]),
                            srgb_to_linear(rgb[2]));
  const Eigen::Vector3d xyz = kRgbToXyz * lin;
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_srgb(const std::array<double, 3>& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;
  const Eigen::Vector3d xyz(kWhite[0] * lab_f_inverse(fx), kWhite[1] * lab_f_inverse(fy),
                            kWhite[2] * lab_f_inverse(fz));
  const Eigen::Vector3d lin = kXyzToRgb * xyz;
  std::array<double, 3> rgb{};
  for (int k = 0; k < 3; ++k) rgb[k] = std::clamp(linear_to_srgb(std::max(lin[k], 0.0)), 0.0, 1.0);
  return rgb;
}

ImageBuffer rgb_to_lab(const ImageBuffer& rgb) {
  if (rgb.channels() != 3) throw Error(ErrorKind::ChannelMismatch, "rgb_to_lab needs 3 channels");
  ImageBuffer lab(rgb.height(), rgb.width(), 3);
  for (std::size_t r = 0; r < rgb.height(); ++r) {
    for (std::size_t c = 0; c < rgb.width(); ++c) {
      const auto v = srgb_to_lab({rgb.at(r, c, 0), rgb.at(r, c, 1), rgb.at(r, c, 2)});
      for (std::size_t k = 0; k < 3; ++k) lab.at(r, c, k) = v[k];
    }
  }
  return lab;
}

ImageBuffer lab_to_rgb(const ImageBuffer& lab) {
  if (lab.channels() != 3) throw Error(ErrorKind::ChannelMismatch, "lab_to_rgb needs 3 channels");
  ImageBuffer rgb(lab.height(), lab.width(), 3);
  for (std::size_t r = 0; r < lab.height(); ++r) {
    for (std::size_t c = 0; c < lab.width(); ++c) {
      const auto v = lab_to_srgb({lab.at(r, c, 0), lab.at(r, c, 1), lab.at(r, c, 2)});
      for (std::size_t k = 0; k < 3; ++k) rgb.at(r, c, k) = v[k];
    }
  }
  return rgb;
}

ImageBuffer read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const PnmHeader h = read_header(in, path);
  const auto samples = read_samples(in, h.width * h.height * static_cast<std::size_t>(h.channels),
                                    h.maxval, path);
  ImageBuffer img(h.height, h.width, static_cast<std::size_t>(h.channels));
  auto data = img.data();
  for (std::size_t k = 0; k < samples.size(); ++k) data[k] = samples[k] / double(h.maxval);
  return img;
}

void write_pnm(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorKind::ChannelMismatch, "PNM output needs 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << (img.channels() == 3 ? "P6" : "P5") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(img.data().size());
  for (std::size_t k = 0; k < bytes.size(); ++k) {
    bytes[k] = static_cast<unsigned char>(std::lround(std::clamp(img.data()[k], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GrayLevels read_pgm_levels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const PnmHeader h = read_header(in, path);
  if (h.channels != 1) throw Error(ErrorKind::ChannelMismatch, path.string() + ": expected P5");
  return {h.height, h.width, read_samples(in, h.width * h.height, h.maxval, path)};
}

void write_pgm_levels(const std::filesystem::path& path, const GrayLevels& levels) {
  const std::uint32_t top =
      levels.values.empty() ? 0 : *std::max_element(levels.values.begin(), levels.values.end());
  if (top > 65535) throw Error(ErrorKind::InvalidArgument, "levels exceed 16 bits");
  const bool wide = top > 255;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "P5\n" << levels.width << ' ' << levels.height << '\n' << (wide ? 65535 : 255) << '\n';
  std::vector<unsigned char> bytes;
  for (std::uint32_t v : levels.values) {
    if (wide) bytes.push_back(static_cast<unsigned char>(v >> 8));
    bytes.push_back(static_cast<unsigned char>(v & 0xff));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace dagdiff
