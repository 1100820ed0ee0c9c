#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vistalink {

/// Decoded photograph with intensities normalized to [0,1].
///
/// `pixels` is row-major and interleaved (`channels` values per pixel).
/// `gray` always holds the single-channel luma plane used by the detector;
/// for gray inputs it equals `pixels`.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> pixels;
  std::vector<float> gray;

  RasterImage() = default;
  RasterImage(int w, int h, int c);

  /// Builds an image from interleaved samples and derives the gray plane.
  static RasterImage from_pixels(int w, int h, int c, std::vector<float> values);
  static RasterImage from_gray(int w, int h, std::vector<float> values);

  float at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float gray_at(int x, int y) const { return gray[static_cast<std::size_t>(y) * width + x]; }

  /// Recomputes `gray` from `pixels` (luma 0.299/0.587/0.114 for RGB).
  void update_gray();
};

/// 8-bit-per-channel RGBA raster, the encoding target of renders.
struct RgbaImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  RgbaImage() = default;
  RgbaImage(int w, int h) : width(w), height(h), rgba(static_cast<std::size_t>(w) * h * 4, 0) {}

  std::uint8_t* px(int x, int y) { return &rgba[(static_cast<std::size_t>(y) * width + x) * 4]; }
  const std::uint8_t* px(int x, int y) const {
    return &rgba[(static_cast<std::size_t>(y) * width + x) * 4];
  }
};

enum class ImageFormat { Png, Pnm, Unknown };

/// Sniffs the magic bytes; PNG signature or binary P5/P6 header.
ImageFormat detect_format(std::span<const std::uint8_t> bytes);

RasterImage load_image(const std::filesystem::path& path);
RasterImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RgbaImage& image);
/// Quantizes to 8 bits (round to nearest) and encodes as gray or RGB PNG.
std::vector<std::uint8_t> encode_png(const RasterImage& image);
RgbaImage decode_png_rgba(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace vistalink
