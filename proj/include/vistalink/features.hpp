#pragma once

#include <array>
#include <vector>

#include "vistalink/image.hpp"

namespace vistalink {

struct ScaleSpaceParams {
  double base_sigma = 1.6;
  int scales_per_octave = 3;
  /// 0 derives the count from the image size (coarsest octave keeps min dimension >= 16).
  int num_octaves = 0;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
  /// Blur already present in the input, before the 2x upsampling.
  double assumed_blur = 0.5;
  /// Secondary orientation peaks at or above this fraction of the max spawn extra keypoints.
  double orientation_peak_ratio = 0.8;

  void validate() const;
};

/// Interest point in original-image pixel coordinates.
///
/// Pixel (i, j) covers [i, i+1) x [j, j+1); its center is at (i + 0.5, j + 0.5).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
  /// Radians in [0, 2pi), measured from +x toward +y (image rows grow downward).
  double orientation = 0.0;
  /// Refined DoG value at the extremum; informational.
  double response = 0.0;
};

inline constexpr int kDescriptorSize = 128;
using Descriptor = std::array<float, kDescriptorSize>;

/// Keypoints and their descriptors, index-aligned.
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
};

/// Descriptor magnitude ceiling applied before the final renormalization.
inline constexpr float kDescriptorClamp = 0.2f;

/// Difference-of-Gaussians extrema, sub-pixel refined, contrast/edge filtered
/// and assigned one or more dominant orientations.
std::vector<Keypoint> detect_keypoints(const RasterImage& img, const ScaleSpaceParams& params = {});

/// One descriptor per keypoint whose gradient window carries any energy.
/// Keypoints with an all-zero histogram are dropped from the returned set.
FeatureSet compute_descriptors(const RasterImage& img, const std::vector<Keypoint>& kps,
                               const ScaleSpaceParams& params = {});

/// Detection and description sharing one pyramid.
FeatureSet extract_features(const RasterImage& img, const ScaleSpaceParams& params = {});

/// Number of octaves the pyramid will have for an image of the given size.
int octave_count(int width, int height, const ScaleSpaceParams& params);

namespace detail {

/// Unnormalized 4x4x8 histogram before clamping, exposed for invariant tests.
/// Returns false when the window carries no gradient energy.
bool raw_descriptor_histogram(const RasterImage& img, const Keypoint& kp,
                              const ScaleSpaceParams& params, std::array<float, 128>& hist);

/// Normalize, clamp at kDescriptorClamp, renormalize. Returns the clamped,
/// pre-renormalization vector through `clamped` when non-null.
void finalize_descriptor(std::array<float, 128>& hist, std::array<float, 128>* clamped = nullptr);

}  // namespace detail

}  // namespace vistalink
