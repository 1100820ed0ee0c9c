#include "vistalink/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <Eigen/Dense>

#include "vistalink/error.hpp"

namespace vistalink {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kImageBorder = 5;
constexpr int kMaxInterpSteps = 5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationSigmaFactor = 1.5;
constexpr double kOrientationRadiusFactor = 3.0 * kOrientationSigmaFactor;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr int kMinOctaveSize = 16;

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> d;

  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), d(static_cast<std::size_t>(w_) * h_, 0.0f) {}
  float& at(int x, int y) { return d[static_cast<std::size_t>(y) * w + x]; }
  float at(int x, int y) const { return d[static_cast<std::size_t>(y) * w + x]; }
};

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (float& v : k) v = static_cast<float>(v / sum);
  return k;
}

Plane gaussian_blur(const Plane& src, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  Plane tmp(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.0f;
      if (x >= radius && x < src.w - radius) {
        const float* row = &src.d[static_cast<std::size_t>(y) * src.w + x - radius];
        for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * row[k];
      } else {
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * src.at(reflect101(x + k, src.w), y);
        }
      }
      tmp.at(x, y) = acc;
    }
  }
  Plane out(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * tmp.at(x, reflect101(y + k, src.h));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Doubled pixel i is centered at original coordinate (i + 0.5) / 2.
Plane upsample2x(const RasterImage& img) {
  Plane out(img.width * 2, img.height * 2);
  for (int y = 0; y < out.h; ++y) {
    const double sy = y * 0.5 - 0.25;
    const int y0 = static_cast<int>(std::floor(sy));
    const float fy = static_cast<float>(sy - y0);
    const int ya = std::clamp(y0, 0, img.height - 1);
    const int yb = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < out.w; ++x) {
      const double sx = x * 0.5 - 0.25;
      const int x0 = static_cast<int>(std::floor(sx));
      const float fx = static_cast<float>(sx - x0);
      const int xa = std::clamp(x0, 0, img.width - 1);
      const int xb = std::clamp(x0 + 1, 0, img.width - 1);
      const float top = img.gray_at(xa, ya) * (1 - fx) + img.gray_at(xb, ya) * fx;
      const float bot = img.gray_at(xa, yb) * (1 - fx) + img.gray_at(xb, yb) * fx;
      out.at(x, y) = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

Plane decimate(const Plane& src) {
  Plane out(src.w / 2, src.h / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  }
  return out;
}

struct Pyramid {
  int scales = 0;
  std::vector<std::vector<Plane>> gauss;  // [octave][scales + 3]
  std::vector<std::vector<Plane>> dog;    // [octave][scales + 2]
};

Pyramid build_pyramid(const RasterImage& img, const ScaleSpaceParams& p, bool with_dog) {
  const int octaves = octave_count(img.width, img.height, p);
  const int S = p.scales_per_octave;
  const double k = std::pow(2.0, 1.0 / S);

  std::vector<double> incr(S + 3);
  incr[0] = p.base_sigma;
  for (int i = 1; i < S + 3; ++i) {
    const double prev = p.base_sigma * std::pow(k, i - 1);
    const double total = prev * k;
    incr[i] = std::sqrt(total * total - prev * prev);
  }

  Pyramid pyr;
  pyr.scales = S;
  pyr.gauss.resize(octaves);
  const double init_blur = 2.0 * p.assumed_blur;
  const double base_diff =
      std::sqrt(std::max(p.base_sigma * p.base_sigma - init_blur * init_blur, 0.01));
  for (int o = 0; o < octaves; ++o) {
    auto& level = pyr.gauss[o];
    level.reserve(S + 3);
    if (o == 0) {
      level.push_back(gaussian_blur(upsample2x(img), base_diff));
    } else {
      level.push_back(decimate(pyr.gauss[o - 1][S]));
    }
    for (int i = 1; i < S + 3; ++i) level.push_back(gaussian_blur(level[i - 1], incr[i]));
  }
  if (with_dog) {
    pyr.dog.resize(octaves);
    for (int o = 0; o < octaves; ++o) {
      for (int i = 0; i < S + 2; ++i) {
        const Plane& a = pyr.gauss[o][i];
        const Plane& b = pyr.gauss[o][i + 1];
        Plane d(a.w, a.h);
        for (std::size_t j = 0; j < d.d.size(); ++j) d.d[j] = b.d[j] - a.d[j];
        pyr.dog[o].push_back(std::move(d));
      }
    }
  }
  return pyr;
}

// Octave-grid coordinate <-> original image coordinate.
double octave_to_image(double c, int octave) { return (c * std::ldexp(1.0, octave) + 0.5) * 0.5; }
double image_to_octave(double x, int octave) { return (2.0 * x - 0.5) / std::ldexp(1.0, octave); }

struct Level {
  int octave = 0;
  int layer = 1;
  double scale = 0.0;  // sigma in octave-grid pixels
};

Level level_for(double sigma, const ScaleSpaceParams& p, int octaves) {
  const int S = p.scales_per_octave;
  const double t = std::log2(2.0 * sigma / p.base_sigma);
  const int k = static_cast<int>(std::lround(t * S));
  int o = static_cast<int>(std::floor(static_cast<double>(k - 1) / S));
  o = std::clamp(o, 0, octaves - 1);
  const int layer = std::clamp(k - o * S, 0, S + 2);
  return {o, layer, 2.0 * sigma / std::ldexp(1.0, o)};
}

bool is_extremum(const std::vector<Plane>& dog, int s, int x, int y, float v) {
  for (int ds = -1; ds <= 1; ++ds) {
    const Plane& pl = dog[s + ds];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (ds == 0 && dy == 0 && dx == 0) continue;
        const float n = pl.at(x + dx, y + dy);
        if (v > 0 ? n > v : n < v) return false;
      }
    }
  }
  return true;
}

struct Refined {
  double x = 0, y = 0, layer = 0;  // octave grid
  int xi = 0, yi = 0, si = 0;
  double response = 0;
};

bool refine_extremum(const std::vector<Plane>& dog, int S, const ScaleSpaceParams& p, int x, int y,
                     int s, Refined& out) {
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad;
  const Plane* prev = nullptr;
  const Plane* cur = nullptr;
  const Plane* next = nullptr;
  bool converged = false;
  for (int iter = 0; iter < kMaxInterpSteps; ++iter) {
    prev = &dog[s - 1];
    cur = &dog[s];
    next = &dog[s + 1];
    const double v2 = 2.0 * cur->at(x, y);
    grad << 0.5 * (cur->at(x + 1, y) - cur->at(x - 1, y)),
        0.5 * (cur->at(x, y + 1) - cur->at(x, y - 1)), 0.5 * (next->at(x, y) - prev->at(x, y));
    const double dxx = cur->at(x + 1, y) + cur->at(x - 1, y) - v2;
    const double dyy = cur->at(x, y + 1) + cur->at(x, y - 1) - v2;
    const double dss = next->at(x, y) + prev->at(x, y) - v2;
    const double dxy = 0.25 * (cur->at(x + 1, y + 1) - cur->at(x - 1, y + 1) -
                               cur->at(x + 1, y - 1) + cur->at(x - 1, y - 1));
    const double dxs =
        0.25 * (next->at(x + 1, y) - next->at(x - 1, y) - prev->at(x + 1, y) + prev->at(x - 1, y));
    const double dys =
        0.25 * (next->at(x, y + 1) - next->at(x, y - 1) - prev->at(x, y + 1) + prev->at(x, y - 1));
    Eigen::Matrix3d hess;
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    const auto lu = hess.fullPivLu();
    if (!lu.isInvertible()) return false;
    offset = -lu.solve(grad);
    if (std::abs(offset[0]) < 0.5 && std::abs(offset[1]) < 0.5 && std::abs(offset[2]) < 0.5) {
      converged = true;
      break;
    }
    if (!offset.allFinite() || offset.cwiseAbs().maxCoeff() > 1e6) return false;
    x += static_cast<int>(std::lround(offset[0]));
    y += static_cast<int>(std::lround(offset[1]));
    s += static_cast<int>(std::lround(offset[2]));
    if (s < 1 || s > S || x < kImageBorder || x >= cur->w - kImageBorder || y < kImageBorder ||
        y >= cur->h - kImageBorder) {
      return false;
    }
  }
  if (!converged) return false;

  const double response = cur->at(x, y) + 0.5 * grad.dot(offset);
  if (std::abs(response) < p.contrast_threshold) return false;

  const double v2 = 2.0 * cur->at(x, y);
  const double dxx = cur->at(x + 1, y) + cur->at(x - 1, y) - v2;
  const double dyy = cur->at(x, y + 1) + cur->at(x, y - 1) - v2;
  const double dxy = 0.25 * (cur->at(x + 1, y + 1) - cur->at(x - 1, y + 1) -
                             cur->at(x + 1, y - 1) + cur->at(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_ratio;
  if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return false;

  out.x = x + offset[0];
  out.y = y + offset[1];
  out.layer = s + offset[2];
  out.xi = x;
  out.yi = y;
  out.si = s;
  out.response = response;
  return true;
}

std::vector<double> dominant_orientations(const Plane& img, double cx, double cy, double scale,
                                          double peak_ratio) {
  const int xi = static_cast<int>(std::lround(cx));
  const int yi = static_cast<int>(std::lround(cy));
  const int radius = static_cast<int>(std::lround(kOrientationRadiusFactor * scale));
  const double sigma = kOrientationSigmaFactor * scale;
  const double expf_scale = -1.0 / (2.0 * sigma * sigma);
  std::array<double, kOrientationBins> raw{};
  for (int i = -radius; i <= radius; ++i) {
    const int y = yi + i;
    if (y <= 0 || y >= img.h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = xi + j;
      if (x <= 0 || x >= img.w - 1) continue;
      const double dx = img.at(x + 1, y) - img.at(x - 1, y);
      const double dy = img.at(x, y + 1) - img.at(x, y - 1);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      const double w = std::exp((i * i + j * j) * expf_scale);
      double angle = std::atan2(dy, dx);
      if (angle < 0) angle += kTwoPi;
      int bin = static_cast<int>(std::lround(kOrientationBins * angle / kTwoPi));
      if (bin >= kOrientationBins) bin -= kOrientationBins;
      raw[bin] += w * mag;
    }
  }
  std::array<double, kOrientationBins> hist{};
  constexpr int n = kOrientationBins;
  for (int i = 0; i < n; ++i) {
    hist[i] = (raw[(i + n - 2) % n] + raw[(i + 2) % n]) * (1.0 / 16) +
              (raw[(i + n - 1) % n] + raw[(i + 1) % n]) * (4.0 / 16) + raw[i] * (6.0 / 16);
  }
  const double max_val = *std::max_element(hist.begin(), hist.end());
  std::vector<double> result;
  if (max_val <= 0) return result;
  const double threshold = max_val * peak_ratio;
  for (int j = 0; j < n; ++j) {
    const double l = hist[(j + n - 1) % n];
    const double r = hist[(j + 1) % n];
    if (hist[j] > l && hist[j] > r && hist[j] >= threshold) {
      double bin = j + 0.5 * (l - r) / (l - 2 * hist[j] + r);
      if (bin < 0) bin += n;
      if (bin >= n) bin -= n;
      double angle = kTwoPi * bin / n;
      if (angle >= kTwoPi) angle -= kTwoPi;
      result.push_back(angle);
    }
  }
  return result;
}

// The histogram is padded by one cell on every side to absorb trilinear
// spill-over; orientation wrap is folded afterwards.
bool descriptor_histogram(const Plane& img, double cx, double cy, double scale, double ori,
                          std::array<float, 128>& out) {
  constexpr int d = kDescWidth;
  constexpr int n = kDescBins;
  const double hist_width = kDescScaleFactor * scale;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::sqrt(double(img.w) * img.w + double(img.h) * img.h)));
  if (cx + radius < 0 || cx - radius > img.w - 1 || cy + radius < 0 || cy - radius > img.h - 1) {
    throw Error(ErrorCode::InvalidArgument, "keypoint support window lies outside the image");
  }
  const double cos_t = std::cos(ori) / hist_width;
  const double sin_t = std::sin(ori) / hist_width;
  const double bins_per_rad = n / kTwoPi;
  const double exp_scale = -1.0 / (d * d * 0.5);
  const int xi = static_cast<int>(std::lround(cx));
  const int yi = static_cast<int>(std::lround(cy));

  std::vector<double> hist((d + 2) * (d + 2) * (n + 2), 0.0);
  for (int i = -radius; i <= radius; ++i) {
    const int y = yi + i;
    if (y <= 0 || y >= img.h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = xi + j;
      if (x <= 0 || x >= img.w - 1) continue;
      // Offset rotated into the keypoint frame, in histogram-cell units.
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      if (rbin <= -1 || rbin >= d || cbin <= -1 || cbin >= d) continue;
      const double dx = img.at(x + 1, y) - img.at(x - 1, y);
      const double dy = img.at(x, y + 1) - img.at(x, y - 1);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double angle = std::atan2(dy, dx) - ori;
      angle = std::fmod(angle, kTwoPi);
      if (angle < 0) angle += kTwoPi;
      double obin = angle * bins_per_rad;
      const double w = std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale) * mag;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0;
      const double fc = cbin - c0;
      const double fo = obin - o0;
      if (o0 < 0) o0 += n;
      if (o0 >= n) o0 -= n;

      const double v_r1 = w * fr, v_r0 = w - v_r1;
      const double v_rc11 = v_r1 * fc, v_rc10 = v_r1 - v_rc11;
      const double v_rc01 = v_r0 * fc, v_rc00 = v_r0 - v_rc01;
      const double v_rco111 = v_rc11 * fo, v_rco110 = v_rc11 - v_rco111;
      const double v_rco101 = v_rc10 * fo, v_rco100 = v_rc10 - v_rco101;
      const double v_rco011 = v_rc01 * fo, v_rco010 = v_rc01 - v_rco011;
      const double v_rco001 = v_rc00 * fo, v_rco000 = v_rc00 - v_rco001;

      const int idx = ((r0 + 1) * (d + 2) + c0 + 1) * (n + 2) + o0;
      hist[idx] += v_rco000;
      hist[idx + 1] += v_rco001;
      hist[idx + (n + 2)] += v_rco010;
      hist[idx + (n + 3)] += v_rco011;
      hist[idx + (d + 2) * (n + 2)] += v_rco100;
      hist[idx + (d + 2) * (n + 2) + 1] += v_rco101;
      hist[idx + (d + 3) * (n + 2)] += v_rco110;
      hist[idx + (d + 3) * (n + 2) + 1] += v_rco111;
    }
  }

  double norm2 = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const int idx = ((i + 1) * (d + 2) + (j + 1)) * (n + 2);
      hist[idx] += hist[idx + n];
      hist[idx + 1] += hist[idx + n + 1];
      for (int k = 0; k < n; ++k) {
        const double v = hist[idx + k];
        out[(i * d + j) * n + k] = static_cast<float>(v);
        norm2 += v * v;
      }
    }
  }
  return std::sqrt(norm2) > 1e-12;
}

std::vector<Keypoint> detect_in_pyramid(const Pyramid& pyr, const RasterImage& img,
                                        const ScaleSpaceParams& p) {
  const int S = pyr.scales;
  const double prefilter = 0.5 * p.contrast_threshold;
  std::vector<Keypoint> kps;
  for (int o = 0; o < static_cast<int>(pyr.dog.size()); ++o) {
    const auto& dog = pyr.dog[o];
    const int w = dog[0].w;
    const int h = dog[0].h;
    for (int s = 1; s <= S; ++s) {
      for (int y = kImageBorder; y < h - kImageBorder; ++y) {
        for (int x = kImageBorder; x < w - kImageBorder; ++x) {
          const float v = dog[s].at(x, y);
          if (std::abs(v) <= prefilter || !is_extremum(dog, s, x, y, v)) continue;
          Refined r;
          if (!refine_extremum(dog, S, p, x, y, s, r)) continue;
          Keypoint kp;
          kp.x = octave_to_image(r.x, o);
          kp.y = octave_to_image(r.y, o);
          if (kp.x < 0 || kp.y < 0 || kp.x >= img.width || kp.y >= img.height) continue;
          kp.sigma = p.base_sigma * std::pow(2.0, r.layer / S) * std::ldexp(1.0, o) * 0.5;
          kp.response = r.response;
          const double scale = p.base_sigma * std::pow(2.0, r.layer / S);
          for (double ori : dominant_orientations(pyr.gauss[o][r.si], r.x, r.y, scale,
                                                  p.orientation_peak_ratio)) {
            Keypoint oriented = kp;
            oriented.orientation = ori;
            kps.push_back(oriented);
          }
        }
      }
    }
  }
  std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    return std::tie(a.y, a.x, a.sigma, a.orientation) < std::tie(b.y, b.x, b.sigma, b.orientation);
  });
  kps.erase(std::unique(kps.begin(), kps.end(),
                        [](const Keypoint& a, const Keypoint& b) {
                          return a.x == b.x && a.y == b.y && a.sigma == b.sigma &&
                                 a.orientation == b.orientation;
                        }),
            kps.end());
  return kps;
}

FeatureSet describe_in_pyramid(const Pyramid& pyr, const std::vector<Keypoint>& kps,
                               const ScaleSpaceParams& p) {
  FeatureSet out;
  out.keypoints.reserve(kps.size());
  out.descriptors.reserve(kps.size());
  const int octaves = static_cast<int>(pyr.gauss.size());
  for (const Keypoint& kp : kps) {
    if (!(kp.sigma > 0)) throw Error(ErrorCode::InvalidArgument, "keypoint sigma must be positive");
    const Level lv = level_for(kp.sigma, p, octaves);
    const Plane& plane = pyr.gauss[lv.octave][lv.layer];
    std::array<float, 128> hist{};
    if (!descriptor_histogram(plane, image_to_octave(kp.x, lv.octave),
                              image_to_octave(kp.y, lv.octave), lv.scale, kp.orientation, hist)) {
      continue;
    }
    detail::finalize_descriptor(hist);
    out.keypoints.push_back(kp);
    out.descriptors.push_back(hist);
  }
  return out;
}

void check_input(const RasterImage& img, const ScaleSpaceParams& params) {
  params.validate();
  if (img.gray.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw Error(ErrorCode::InvalidArgument, "image has no grayscale plane");
  }
  if (std::min(img.width, img.height) < kMinOctaveSize) {
    throw Error(ErrorCode::ImageTooSmall, "image too small for one octave (min dimension 16)");
  }
}

}  // namespace

void ScaleSpaceParams::validate() const {
  if (!(base_sigma > 0)) throw Error(ErrorCode::InvalidArgument, "base_sigma must be > 0");
  if (scales_per_octave < 1) throw Error(ErrorCode::InvalidArgument, "scales_per_octave must be >= 1");
  if (!(contrast_threshold > 0)) throw Error(ErrorCode::InvalidArgument, "contrast_threshold must be > 0");
  if (!(edge_ratio > 1)) throw Error(ErrorCode::InvalidArgument, "edge_ratio must be > 1");
  if (num_octaves < 0) throw Error(ErrorCode::InvalidArgument, "num_octaves must be >= 0");
  if (!(assumed_blur >= 0)) throw Error(ErrorCode::InvalidArgument, "assumed_blur must be >= 0");
  if (!(orientation_peak_ratio > 0 && orientation_peak_ratio <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "orientation_peak_ratio must be in (0, 1]");
  }
}

int octave_count(int width, int height, const ScaleSpaceParams& params) {
  int m = 2 * std::min(width, height);
  int n = 0;
  while (m >= kMinOctaveSize) {
    ++n;
    m /= 2;
  }
  if (params.num_octaves > 0) n = std::min(n, params.num_octaves);
  return n;
}

std::vector<Keypoint> detect_keypoints(const RasterImage& img, const ScaleSpaceParams& params) {
  check_input(img, params);
  const Pyramid pyr = build_pyramid(img, params, true);
  return detect_in_pyramid(pyr, img, params);
}

FeatureSet compute_descriptors(const RasterImage& img, const std::vector<Keypoint>& kps,
                               const ScaleSpaceParams& params) {
  check_input(img, params);
  const Pyramid pyr = build_pyramid(img, params, false);
  return describe_in_pyramid(pyr, kps, params);
}

FeatureSet extract_features(const RasterImage& img, const ScaleSpaceParams& params) {
  check_input(img, params);
  const Pyramid pyr = build_pyramid(img, params, true);
  return describe_in_pyramid(pyr, detect_in_pyramid(pyr, img, params), params);
}

namespace detail {

bool raw_descriptor_histogram(const RasterImage& img, const Keypoint& kp,
                              const ScaleSpaceParams& params, std::array<float, 128>& hist) {
  check_input(img, params);
  const Pyramid pyr = build_pyramid(img, params, false);
  const Level lv = level_for(kp.sigma, params, static_cast<int>(pyr.gauss.size()));
  hist.fill(0.0f);
  return descriptor_histogram(pyr.gauss[lv.octave][lv.layer], image_to_octave(kp.x, lv.octave),
                              image_to_octave(kp.y, lv.octave), lv.scale, kp.orientation, hist);
}

void finalize_descriptor(std::array<float, 128>& hist, std::array<float, 128>* clamped) {
  double norm2 = 0.0;
  for (float v : hist) norm2 += double(v) * v;
  double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
  norm2 = 0.0;
  for (float& v : hist) {
    v = std::min(static_cast<float>(v * inv), kDescriptorClamp);
    norm2 += double(v) * v;
  }
  if (clamped) *clamped = hist;
  inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
  for (float& v : hist) v = static_cast<float>(v * inv);
}

}  // namespace detail

}  // namespace vistalink
