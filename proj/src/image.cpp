#include "vistalink/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vistalink/error.hpp"

namespace vistalink {

namespace {

constexpr float kLumaR = 0.299f;
constexpr float kLumaG = 0.587f;
constexpr float kLumaB = 0.114f;

void check_dimensions(long w, long h) {
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::UnsupportedFormat, "image has zero dimension");
  }
  if (w > 65535 || h > 65535) {
    throw Error(ErrorCode::UnsupportedFormat, "image dimensions too large");
  }
}

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  RasterImage read() {
    if (bytes_.size() < 2 || bytes_[0] != 'P' || (bytes_[1] != '5' && bytes_[1] != '6')) {
      throw Error(ErrorCode::UnsupportedFormat, "not a binary PGM/PPM file");
    }
    const int channels = bytes_[1] == '5' ? 1 : 3;
    pos_ = 2;
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (maxval <= 0 || maxval > 65535) {
      throw Error(ErrorCode::UnsupportedFormat, "PNM maxval out of range");
    }
    check_dimensions(w, h);
    // Exactly one whitespace byte separates the header from the raster.
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::UnsupportedFormat, "malformed PNM header");
    }
    ++pos_;
    const std::size_t samples = static_cast<std::size_t>(w) * h * channels;
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    if (bytes_.size() - pos_ < samples * bytes_per_sample) {
      throw Error(ErrorCode::UnreadableFile, "truncated PNM raster");
    }
    std::vector<float> values(samples);
    const auto scale = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < samples; ++i) {
      unsigned v = bytes_[pos_];
      if (bytes_per_sample == 2) {
        v = (v << 8) | bytes_[pos_ + 1];
      }
      pos_ += bytes_per_sample;
      values[i] = std::min(1.0f, static_cast<float>(v) * scale);
    }
    return RasterImage::from_pixels(static_cast<int>(w), static_cast<int>(h), channels,
                                    std::move(values));
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int() {
    skip_space_and_comments();
    long v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw Error(ErrorCode::UnsupportedFormat, "PNM header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::UnsupportedFormat, "malformed PNM header");
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = "PNG decode failed: ";
    msg += image.message;
    throw Error(ErrorCode::UnreadableFile, msg);
  }
  check_dimensions(image.width, image.height);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = "PNG decode failed: ";
    msg += image.message;
    png_image_free(&image);
    throw Error(ErrorCode::UnreadableFile, msg);
  }
  std::vector<float> values(buffer.size());
  std::transform(buffer.begin(), buffer.end(), values.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return RasterImage::from_pixels(static_cast<int>(image.width), static_cast<int>(image.height),
                                  channels, std::move(values));
}

std::vector<std::uint8_t> write_png_memory(int w, int h, png_uint_32 format,
                                           const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::InvalidArgument, std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::InvalidArgument, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

RasterImage::RasterImage(int w, int h, int c)
    : width(w),
      height(h),
      channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, 0.0f),
      gray(static_cast<std::size_t>(w) * h, 0.0f) {}

RasterImage RasterImage::from_pixels(int w, int h, int c, std::vector<float> values) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "image has zero dimension");
  if (c != 1 && c != 3) throw Error(ErrorCode::InvalidArgument, "channels must be 1 or 3");
  if (values.size() != static_cast<std::size_t>(w) * h * c) {
    throw Error(ErrorCode::InvalidArgument, "pixel buffer size does not match dimensions");
  }
  RasterImage img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.pixels = std::move(values);
  for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
  img.update_gray();
  return img;
}

RasterImage RasterImage::from_gray(int w, int h, std::vector<float> values) {
  return from_pixels(w, h, 1, std::move(values));
}

void RasterImage::update_gray() {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (channels == 1) {
    gray = pixels;
    return;
  }
  gray.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = &pixels[i * 3];
    gray[i] = std::clamp(kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2], 0.0f, 1.0f);
  }
}

ImageFormat detect_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin())) {
    return ImageFormat::Png;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return ImageFormat::Pnm;
  }
  return ImageFormat::Unknown;
}

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (detect_format(bytes)) {
    case ImageFormat::Png: return decode_png(bytes);
    case ImageFormat::Pnm: return PnmReader(bytes).read();
    case ImageFormat::Unknown: break;
  }
  throw Error(ErrorCode::UnsupportedFormat, "unsupported image format (expected PNG, PGM or PPM)");
}

RasterImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), path.string());
  }
}

std::vector<std::uint8_t> encode_png(const RgbaImage& image) {
  return write_png_memory(image.width, image.height, PNG_FORMAT_RGBA, image.rgba.data());
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  std::vector<std::uint8_t> bytes(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), bytes.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
  });
  return write_png_memory(image.width, image.height,
                          image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY, bytes.data());
}

RgbaImage decode_png_rgba(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::UnreadableFile, std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  RgbaImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::UnreadableFile, std::string("PNG decode failed: ") + image.message);
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string(), path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::UnreadableFile, "read failed: " + path.string(), path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string(), path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::UnreadableFile, "write failed: " + path.string(), path.string());
}

}  // namespace vistalink
