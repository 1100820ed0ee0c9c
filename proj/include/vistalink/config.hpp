#pragma once

#include <cstdint>

namespace vistalink {

/// Match acceptance and robust-estimation parameters.
struct MatchConfig {
  double ratio_threshold = 0.8;
  /// Used when the candidate set has a single descriptor and no ratio can be formed.
  double single_candidate_max_distance = 0.4;
  int min_inliers_auto_link = 12;
  double ransac_reproj_threshold = 3.0;
  double ransac_confidence = 0.995;
  int ransac_max_iters = 2000;
  std::uint64_t seed = 42;

  void validate() const;
};

}  // namespace vistalink
