#include "vistalink/homography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace vistalink {

namespace {

constexpr double kMinTriangleArea = 1e-6;
constexpr double kMinDeterminant = 1e-12;
constexpr double kInfinityW = 1e-12;
constexpr int kRefitRounds = 20;

Eigen::Matrix3d normalize_matrix(const Eigen::Matrix3d& m) {
  const double frob = m.norm();
  if (!(frob > 0) || !m.allFinite()) {
    throw Error(ErrorCode::InvariantViolation, "homography matrix is zero or non-finite");
  }
  if (std::abs(m(2, 2)) > 1e-10 * frob) return m / m(2, 2);
  Eigen::Matrix3d n = m / frob;
  for (int i = 0; i < 9; ++i) {
    const double v = n(i / 3, i % 3);
    if (v != 0.0) {
      if (v < 0) n = -n;
      break;
    }
  }
  return n;
}

// Similarity that moves the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d conditioning(std::span<const Point2> pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean = 0;
  for (const auto& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= static_cast<double>(pts.size());
  if (!(mean > 0)) throw Error(ErrorCode::EstimationFailed, "all points coincide");
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

Eigen::Matrix3d solve_dlt(std::span<const Point2> src, std::span<const Point2> dst) {
  const Eigen::Matrix3d ts = conditioning(src);
  const Eigen::Matrix3d td = conditioning(dst);
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::Matrix<double, Eigen::Dynamic, 9> a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d q = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const double x = p[0], y = p[1], u = q[0], v = q[1];
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::Matrix<double, 9, 1> h;
  if (a.rows() < 9) {
    // 8x9 minimal system: pad to square so the full V carries the null vector.
    Eigen::Matrix<double, 9, 9> sq = Eigen::Matrix<double, 9, 9>::Zero();
    sq.topRows(a.rows()) = a;
    Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(sq, Eigen::ComputeFullV);
    h = svd.matrixV().col(8);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    h = svd.matrixV().col(8);
  }
  Eigen::Matrix3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  return td.inverse() * hn * ts;
}

double triangle_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return (v > 0) - (v < 0);
}

bool segments_cross(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  return orientation(p1, p2, q1) != orientation(p1, p2, q2) &&
         orientation(q1, q2, p1) != orientation(q1, q2, p2);
}

bool sample_degenerate(std::span<const Point2> pts) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[i] == pts[j]) return true;
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        if (triangle_area(pts[i], pts[j], pts[k]) <= kMinTriangleArea) return true;
      }
    }
  }
  return false;
}

std::string format_point(const Point2& p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

std::vector<std::size_t> collect_inliers(const Homography& h, std::span<const Correspondence> pairs,
                                         std::span<const std::size_t> candidates, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t idx : candidates) {
    if (reprojection_error(h, pairs[idx]) <= threshold) out.push_back(idx);
  }
  return out;
}

Homography fit_subset(std::span<const Correspondence> pairs, std::span<const std::size_t> idx) {
  std::vector<Correspondence> subset;
  subset.reserve(idx.size());
  for (std::size_t i : idx) subset.push_back(pairs[i]);
  return fit_homography(subset);
}

}  // namespace

void MatchConfig::validate() const {
  if (!(ratio_threshold > 0 && ratio_threshold < 1)) {
    throw Error(ErrorCode::InvalidArgument, "ratio_threshold must be in (0, 1)");
  }
  if (min_inliers_auto_link < 4) throw Error(ErrorCode::InvalidArgument, "min_inliers_auto_link must be >= 4");
  if (!(ransac_reproj_threshold > 0)) throw Error(ErrorCode::InvalidArgument, "ransac_reproj_threshold must be > 0");
  if (!(ransac_confidence > 0 && ransac_confidence < 1)) {
    throw Error(ErrorCode::InvalidArgument, "ransac_confidence must be in (0, 1)");
  }
  if (ransac_max_iters < 1) throw Error(ErrorCode::InvalidArgument, "ransac_max_iters must be >= 1");
  if (!(single_candidate_max_distance > 0)) {
    throw Error(ErrorCode::InvalidArgument, "single_candidate_max_distance must be > 0");
  }
}

Homography::Homography(const Eigen::Matrix3d& m) : m_(normalize_matrix(m)) {
  if (!(std::abs(m_.determinant()) > kMinDeterminant)) {
    throw Error(ErrorCode::InvariantViolation, "homography is singular");
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Homography Homography::from_row_major(std::span<const double> values) {
  if (values.size() != 9) throw Error(ErrorCode::InvalidArgument, "homography needs 9 entries");
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = values[i];
  return Homography(m);
}

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> out{};
  for (int i = 0; i < 9; ++i) out[i] = m_(i / 3, i % 3);
  return out;
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Homography Homography::operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

double Homography::max_abs_diff(const Homography& other) const {
  return (m_ - other.m_).cwiseAbs().maxCoeff();
}

void Quad::validate(const std::string& name) const {
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y)) {
      throw DegenerateQuadError(name, {i}, name + ": point " + std::to_string(i) + " is not finite");
    }
  }
  static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    if (triangle_area(pts[t[0]], pts[t[1]], pts[t[2]]) <= kMinTriangleArea) {
      throw DegenerateQuadError(
          name, {t[0], t[1], t[2]},
          name + ": points " + std::to_string(t[0]) + ", " + std::to_string(t[1]) + ", " +
              std::to_string(t[2]) + " are collinear " + format_point(pts[t[0]]) + " " +
              format_point(pts[t[1]]) + " " + format_point(pts[t[2]]));
    }
  }
  if (segments_cross(pts[0], pts[1], pts[2], pts[3])) {
    throw DegenerateQuadError(name, {0, 1, 2, 3},
                              name + ": edges 0-1 and 2-3 intersect (self-intersecting outline)");
  }
  if (segments_cross(pts[1], pts[2], pts[3], pts[0])) {
    throw DegenerateQuadError(name, {1, 2, 3, 0},
                              name + ": edges 1-2 and 3-0 intersect (self-intersecting outline)");
  }
}

Homography estimate_exact(const Quad& src, const Quad& dst) {
  src.validate("src");
  dst.validate("dst");
  return Homography(solve_dlt(src.pts, dst.pts));
}

Homography fit_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) {
    throw Error(ErrorCode::EstimationFailed, "at least 4 correspondences are required");
  }
  std::vector<Point2> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& c : pairs) {
    src.push_back(c.a);
    dst.push_back(c.b);
  }
  try {
    return Homography(solve_dlt(src, dst));
  } catch (const Error& e) {
    throw Error(ErrorCode::EstimationFailed, std::string("homography fit failed: ") + e.what());
  }
}

RobustEstimate estimate_robust(std::span<const Correspondence> pairs, const MatchConfig& cfg) {
  cfg.validate();
  if (pairs.size() < 4) {
    throw Error(ErrorCode::EstimationFailed, "at least 4 correspondences are required");
  }

  // Repeated correspondences take part once, under their first index.
  std::vector<std::size_t> unique;
  {
    std::map<std::tuple<double, double, double, double>, std::size_t> seen;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& c = pairs[i];
      if (seen.emplace(std::make_tuple(c.a.x, c.a.y, c.b.x, c.b.y), i).second) unique.push_back(i);
    }
  }
  const std::size_t n = unique.size();
  if (n < 4) throw Error(ErrorCode::EstimationFailed, "fewer than 4 distinct correspondences");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double log_fail = std::log(1.0 - cfg.ransac_confidence);

  std::vector<std::size_t> best;
  long long needed = cfg.ransac_max_iters;
  long long degenerate_budget = 10LL * cfg.ransac_max_iters;
  for (long long iter = 0; iter < needed;) {
    std::array<std::size_t, 4> s{};
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        s[k] = pick(rng);
        fresh = std::find(s.begin(), s.begin() + k, s[k]) == s.begin() + k;
      } while (!fresh);
    }
    std::array<Point2, 4> src, dst;
    for (int k = 0; k < 4; ++k) {
      src[k] = pairs[unique[s[k]]].a;
      dst[k] = pairs[unique[s[k]]].b;
    }
    if (sample_degenerate(src) || sample_degenerate(dst)) {
      if (--degenerate_budget <= 0) break;
      continue;
    }
    ++iter;
    Homography model;
    try {
      model = Homography(solve_dlt(src, dst));
    } catch (const Error&) {
      continue;
    }
    auto inliers = collect_inliers(model, pairs, unique, cfg.ransac_reproj_threshold);
    if (inliers.size() > best.size()) {
      best = std::move(inliers);
      const double ratio = static_cast<double>(best.size()) / static_cast<double>(n);
      const double p_good = std::pow(ratio, 4);
      if (p_good >= 1.0) {
        needed = std::min<long long>(needed, iter);
      } else {
        const double est = log_fail / std::log(1.0 - p_good);
        if (std::isfinite(est)) {
          needed = std::min<long long>(cfg.ransac_max_iters,
                                       std::max<long long>(iter, static_cast<long long>(std::ceil(est))));
        }
      }
    }
  }
  if (best.size() < 4) {
    throw Error(ErrorCode::EstimationFailed, "no model with at least 4 inliers was found");
  }

  // Alternate refit / re-classification until the consensus set is stable.
  std::vector<std::size_t> current = best;
  for (int round = 0; round < kRefitRounds; ++round) {
    Homography h;
    try {
      h = fit_subset(pairs, current);
    } catch (const Error&) {
      break;
    }
    auto next = collect_inliers(h, pairs, unique, cfg.ransac_reproj_threshold);
    if (next == current || next.size() < 4) break;
    current = std::move(next);
  }
  // Enforce the bound under the final fit by dropping the worst offender.
  while (current.size() >= 4) {
    Homography h;
    try {
      h = fit_subset(pairs, current);
    } catch (const Error&) {
      break;
    }
    std::size_t worst = 0;
    double worst_err = -1;
    for (std::size_t i = 0; i < current.size(); ++i) {
      const double e = reprojection_error(h, pairs[current[i]]);
      if (e > worst_err) {
        worst_err = e;
        worst = i;
      }
    }
    if (worst_err <= cfg.ransac_reproj_threshold) return {h, current};
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  throw Error(ErrorCode::EstimationFailed, "least-squares refit did not retain 4 inliers");
}

Point2 warp_point(const Homography& h, Point2 p) {
  const auto& m = h.matrix();
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (std::abs(w) < kInfinityW) {
    throw Error(ErrorCode::PointAtInfinity, "point maps to the plane at infinity");
  }
  return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w,
          (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

double reprojection_error(const Homography& h, const Correspondence& c) {
  const auto& m = h.matrix();
  const double w = m(2, 0) * c.a.x + m(2, 1) * c.a.y + m(2, 2);
  if (std::abs(w) < kInfinityW) return std::numeric_limits<double>::infinity();
  const double x = (m(0, 0) * c.a.x + m(0, 1) * c.a.y + m(0, 2)) / w;
  const double y = (m(1, 0) * c.a.x + m(1, 1) * c.a.y + m(1, 2)) / w;
  return std::hypot(x - c.b.x, y - c.b.y);
}

}  // namespace vistalink
