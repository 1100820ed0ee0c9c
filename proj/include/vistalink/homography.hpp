#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vistalink/config.hpp"
#include "vistalink/error.hpp"

namespace vistalink {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// A point seen in two images: `a` in the source frame, `b` in the destination frame.
struct Correspondence {
  Point2 a;
  Point2 b;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Invertible 3x3 projective transform.
///
/// Stored normalized: h22 = 1 when that entry is non-negligible, otherwise
/// unit Frobenius norm with a positive leading nonzero entry.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  /// Normalizes and validates; throws InvariantViolation when singular.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);
  /// Row-major entries, as stored in the interchange document.
  static Homography from_row_major(std::span<const double> values);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  std::array<double, 9> row_major() const;

  Homography inverse() const;
  /// (this * rhs)(p) = this(rhs(p)).
  Homography operator*(const Homography& rhs) const;

  /// Largest absolute elementwise difference between normalized matrices.
  double max_abs_diff(const Homography& other) const;

 private:
  Eigen::Matrix3d m_;
};

/// Four ordered pixel-coordinate points outlining a corresponding region.
struct Quad {
  std::array<Point2, 4> pts;

  /// Throws DegenerateQuadError on a collinear triple or a self-intersecting outline.
  void validate(const std::string& name = "quad") const;

  friend bool operator==(const Quad&, const Quad&) = default;
};

class DegenerateQuadError : public Error {
 public:
  DegenerateQuadError(const std::string& quad_name, std::vector<int> point_indices,
                      const std::string& message)
      : Error(ErrorCode::DegenerateQuad, message, quad_name), points_(std::move(point_indices)) {}

  const std::vector<int>& points() const noexcept { return points_; }

 private:
  std::vector<int> points_;
};

/// Homography with H * src[i] == dst[i] for all four corners (normalized DLT).
Homography estimate_exact(const Quad& src, const Quad& dst);

/// Normalized DLT least-squares fit over >= 4 correspondences (a -> b).
Homography fit_homography(std::span<const Correspondence> pairs);

struct RobustEstimate {
  Homography homography;
  /// Indices into the input; repeated correspondences appear once (first occurrence).
  std::vector<std::size_t> inliers;
};

/// RANSAC over minimal samples with adaptive iteration count, then an
/// iterated least-squares refit on the consensus set. Every returned inlier
/// has forward reprojection error <= cfg.ransac_reproj_threshold under the
/// returned homography, and the homography equals fit_homography over them.
RobustEstimate estimate_robust(std::span<const Correspondence> pairs, const MatchConfig& cfg);

/// Homogeneous multiply followed by perspective divide.
Point2 warp_point(const Homography& h, Point2 p);

/// Euclidean distance between h(a) and b; +inf when a maps to infinity.
double reprojection_error(const Homography& h, const Correspondence& c);

}  // namespace vistalink
