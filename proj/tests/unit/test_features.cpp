#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "support/synthetic.hpp"
#include "vistalink/error.hpp"
#include "vistalink/features.hpp"

using namespace vistalink;

namespace {

RasterImage blob_image(int w, int h, const std::vector<std::array<double, 3>>& blobs) {
  std::vector<float> v(static_cast<std::size_t>(w) * h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (const auto& [cx, cy, sig] : blobs) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        s += std::exp(-(dx * dx + dy * dy) / (2 * sig * sig));
      }
      v[static_cast<std::size_t>(y) * w + x] = static_cast<float>(std::min(1.0, s));
    }
  }
  return RasterImage::from_gray(w, h, std::move(v));
}

// Direct (non-separable) Gaussian blur with clamped borders; slow but independent.
std::vector<double> brute_blur(const RasterImage& img, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> out(img.gray.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0, wsum = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double w = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
          const int sx = std::clamp(x + dx, 0, img.width - 1), sy = std::clamp(y + dy, 0, img.height - 1);
          acc += w * img.gray_at(sx, sy);
          wsum += w;
        }
      }
      out[static_cast<std::size_t>(y) * img.width + x] = acc / wsum;
    }
  }
  return out;
}

RasterImage rotate90(const RasterImage& img) {
  // p = (x, y) maps to (H - y, x).
  const int w = img.height, h = img.width;
  std::vector<float> v(static_cast<std::size_t>(w) * h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) v[static_cast<std::size_t>(j) * w + i] = img.gray_at(j, img.height - 1 - i);
  }
  return RasterImage::from_gray(w, h, std::move(v));
}

RasterImage upsample2x_bilinear(const RasterImage& img) {
  const int w = img.width * 2, h = img.height * 2;
  std::vector<float> v(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = std::clamp((x + 0.5) / 2 - 0.5, 0.0, img.width - 1.0);
      const double sy = std::clamp((y + 0.5) / 2 - 0.5, 0.0, img.height - 1.0);
      const int x0 = std::min(static_cast<int>(sx), img.width - 2), y0 = std::min(static_cast<int>(sy), img.height - 2);
      const double fx = sx - x0, fy = sy - y0;
      const double top = img.gray_at(x0, y0) * (1 - fx) + img.gray_at(x0 + 1, y0) * fx;
      const double bot = img.gray_at(x0, y0 + 1) * (1 - fx) + img.gray_at(x0 + 1, y0 + 1) * fx;
      v[static_cast<std::size_t>(y) * w + x] = static_cast<float>(top * (1 - fy) + bot * fy);
    }
  }
  return RasterImage::from_gray(w, h, std::move(v));
}

double l2(const Descriptor& a, const Descriptor& b) {
  double s = 0;
  for (int i = 0; i < kDescriptorSize; ++i) s += (a[i] - b[i]) * double(a[i] - b[i]);
  return std::sqrt(s);
}

double norm(const Descriptor& d) {
  double s = 0;
  for (float v : d) s += double(v) * v;
  return std::sqrt(s);
}

}  // namespace

TEST(DetectKeypoints, ConstantImageHasNone) {
  const RasterImage img = RasterImage::from_gray(64, 64, std::vector<float>(64 * 64, 0.37f));
  EXPECT_TRUE(detect_keypoints(img).empty());
}

TEST(DetectKeypoints, GaussianBlobAtCenter) {
  const RasterImage img = blob_image(64, 64, {{32.0, 32.0, 4.0}});

  // Brute-force DoG over a ladder of scales: locate the strongest extremum.
  const double k = std::pow(2.0, 1.0 / 3.0);
  double best = 0;
  int bx = -1, by = -1;
  std::vector<double> prev = brute_blur(img, 1.6);
  for (double s = 1.6; s < 12; s *= k) {
    std::vector<double> next = brute_blur(img, s * k);
    for (int y = 8; y < 56; ++y) {
      for (int x = 8; x < 56; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * 64 + x;
        const double d = std::abs(next[i] - prev[i]);
        if (d > best) {
          best = d;
          bx = x;
          by = y;
        }
      }
    }
    prev = std::move(next);
  }
  ASSERT_NEAR(bx + 0.5, 32.0, 1.0);
  ASSERT_NEAR(by + 0.5, 32.0, 1.0);

  const auto kps = detect_keypoints(img);
  ASSERT_FALSE(kps.empty());
  double nearest = 1e9;
  for (const auto& kp : kps) nearest = std::min(nearest, std::hypot(kp.x - 32.0, kp.y - 32.0));
  EXPECT_LT(nearest, 2.0);
}

TEST(DetectKeypoints, StraightStepEdgeHasNone) {
  std::vector<float> v(64 * 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) v[y * 64 + x] = x < 32 ? 0.1f : 0.9f;
  }
  EXPECT_TRUE(detect_keypoints(RasterImage::from_gray(64, 64, std::move(v))).empty());
}

TEST(DetectKeypoints, TooSmallImage) {
  const RasterImage img = RasterImage::from_gray(15, 40, std::vector<float>(15 * 40, 0.5f));
  try {
    detect_keypoints(img);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
  EXPECT_NO_THROW(detect_keypoints(RasterImage::from_gray(16, 16, std::vector<float>(256, 0.5f))));
}

TEST(DetectKeypoints, ParameterValidation) {
  const RasterImage img = RasterImage::from_gray(32, 32, std::vector<float>(1024, 0.5f));
  ScaleSpaceParams p;
  p.edge_ratio = 1.0;
  EXPECT_THROW(detect_keypoints(img, p), Error);
  p = {};
  p.scales_per_octave = 0;
  EXPECT_THROW(detect_keypoints(img, p), Error);
  p = {};
  p.contrast_threshold = 0;
  EXPECT_THROW(detect_keypoints(img, p), Error);
}

TEST(DetectKeypoints, OctaveCountFollowsDoubledSize) {
  EXPECT_EQ(octave_count(64, 64, {}), 4);
  EXPECT_EQ(octave_count(16, 100, {}), 2);
  EXPECT_EQ(octave_count(512, 300, {}), 6);
  ScaleSpaceParams p;
  p.num_octaves = 2;
  EXPECT_EQ(octave_count(512, 512, p), 2);
}

TEST(DetectKeypoints, KeypointsInsideImageWithValidFields) {
  const RasterImage img = fixtures::textured_image(160, 120, 3);
  const auto kps = detect_keypoints(img);
  ASSERT_GT(kps.size(), 20u);
  for (const auto& kp : kps) {
    EXPECT_GE(kp.x, 0.0);
    EXPECT_LT(kp.x, 160.0);
    EXPECT_GE(kp.y, 0.0);
    EXPECT_LT(kp.y, 120.0);
    EXPECT_GT(kp.sigma, 0.0);
    EXPECT_GE(kp.orientation, 0.0);
    EXPECT_LT(kp.orientation, 2 * std::numbers::pi);
  }
}

TEST(ComputeDescriptors, EveryDescriptorHasUnitNorm) {
  const RasterImage img = fixtures::textured_image(200, 200, 5);
  const FeatureSet fs = extract_features(img);
  ASSERT_EQ(fs.keypoints.size(), fs.descriptors.size());
  ASSERT_FALSE(fs.descriptors.empty());
  for (const auto& d : fs.descriptors) {
    EXPECT_NEAR(norm(d), 1.0, 1e-6);
    for (float v : d) EXPECT_GE(v, 0.0f);
  }
}

TEST(ComputeDescriptors, RotationBy90Degrees) {
  const RasterImage img = fixtures::textured_image(128, 128, 21);
  const RasterImage rot = rotate90(img);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pos(40, 88), ang(0, 2 * std::numbers::pi), sig(2.0, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    Keypoint kp;
    kp.x = pos(rng);
    kp.y = pos(rng);
    kp.sigma = sig(rng);
    kp.orientation = ang(rng);
    Keypoint kr = kp;
    kr.x = 128 - kp.y;
    kr.y = kp.x;
    kr.orientation = std::fmod(kp.orientation + std::numbers::pi / 2, 2 * std::numbers::pi);
    const FeatureSet a = compute_descriptors(img, {kp});
    const FeatureSet b = compute_descriptors(rot, {kr});
    ASSERT_EQ(a.descriptors.size(), 1u);
    ASSERT_EQ(b.descriptors.size(), 1u);
    EXPECT_LT(l2(a.descriptors[0], b.descriptors[0]), 0.35) << "trial " << trial;
  }
}

TEST(ComputeDescriptors, ZeroGradientWindowIsDropped) {
  const RasterImage img = RasterImage::from_gray(64, 64, std::vector<float>(64 * 64, 0.5f));
  Keypoint kp{32, 32, 2.0, 0.0, 0.0};
  std::array<float, 128> hist{};
  EXPECT_FALSE(detail::raw_descriptor_histogram(img, kp, {}, hist));
  EXPECT_TRUE(compute_descriptors(img, {kp}).keypoints.empty());

  // Mixed input: only the zero-gradient keypoint goes.
  std::vector<float> v(64 * 64, 0.5f);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) v[y * 64 + x] = ((x / 3 + y / 3) % 2) ? 0.9f : 0.1f;
  }
  const RasterImage mixed = RasterImage::from_gray(64, 64, std::move(v));
  const FeatureSet fs = compute_descriptors(mixed, {Keypoint{10, 10, 2.0, 0.3, 0.0}, Keypoint{48, 48, 1.6, 0.0, 0.0}});
  ASSERT_EQ(fs.keypoints.size(), 1u);
  EXPECT_DOUBLE_EQ(fs.keypoints[0].x, 10.0);
}

TEST(ComputeDescriptors, WindowOutsideImageIsAnError) {
  const RasterImage img = fixtures::textured_image(64, 64, 1);
  try {
    compute_descriptors(img, {Keypoint{-500, -500, 2.0, 0.0, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(ComputeDescriptors, ClampThenRenormalize) {
  std::mt19937 rng(9);
  std::exponential_distribution<float> mag(1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<float, 128> h{};
    for (auto& v : h) v = mag(rng) * (trial % 3 == 0 ? 1.0f : 0.0f);
    h[trial % 128] += 20.0f;  // force a dominant bin so clamping bites
    std::array<float, 128> clamped{};
    detail::finalize_descriptor(h, &clamped);
    double n = 0;
    for (int i = 0; i < 128; ++i) {
      EXPECT_LE(clamped[i], kDescriptorClamp + 1e-7f);
      n += double(h[i]) * h[i];
    }
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  }
}

TEST(ExtractFeatures, DeterministicBitForBit) {
  const RasterImage img = fixtures::textured_image(180, 150, 8);
  const FeatureSet a = extract_features(img);
  const FeatureSet b = extract_features(img);
  ASSERT_EQ(a.keypoints.size(), b.keypoints.size());
  for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
    EXPECT_EQ(std::memcmp(&a.keypoints[i], &b.keypoints[i], sizeof(Keypoint)), 0);
    EXPECT_EQ(a.descriptors[i], b.descriptors[i]);
  }
}

TEST(ExtractFeatures, MatchesSeparateDetectAndDescribe) {
  const RasterImage img = fixtures::textured_image(100, 100, 12);
  const FeatureSet joint = extract_features(img);
  const FeatureSet split = compute_descriptors(img, detect_keypoints(img));
  ASSERT_EQ(joint.keypoints.size(), split.keypoints.size());
  for (std::size_t i = 0; i < joint.keypoints.size(); ++i) EXPECT_EQ(joint.descriptors[i], split.descriptors[i]);
}

TEST(ExtractFeatures, ScaleCovarianceOnBlobGrid) {
  std::vector<std::array<double, 3>> blobs;
  for (int gy = 0; gy < 4; ++gy) {
    for (int gx = 0; gx < 4; ++gx) blobs.push_back({24.0 + 37 * gx, 24.0 + 37 * gy, (gx + gy) % 2 ? 3.0 : 4.0});
  }
  const RasterImage img = blob_image(160, 160, blobs);
  const RasterImage up = upsample2x_bilinear(img);
  const auto ka = detect_keypoints(img);
  const auto kb = detect_keypoints(up);
  int compared = 0;
  for (const auto& [cx, cy, sig] : blobs) {
    const Keypoint* a = nullptr;
    const Keypoint* b = nullptr;
    double da = 4, db = 8;
    for (const auto& k : ka) {
      const double d = std::hypot(k.x - cx, k.y - cy);
      if (d < da) { da = d; a = &k; }
    }
    for (const auto& k : kb) {
      const double d = std::hypot(k.x - 2 * cx, k.y - 2 * cy);
      if (d < db) { db = d; b = &k; }
    }
    if (!a || !b) continue;
    ++compared;
    EXPECT_LT(std::hypot(b->x - 2 * a->x, b->y - 2 * a->y), 3.0);
  }
  EXPECT_GE(compared, 12);
}
