#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vistalink/config.hpp"
#include "vistalink/features.hpp"
#include "vistalink/homography.hpp"
#include "vistalink/project.hpp"

namespace vistalink {

struct Match {
  int index_a = 0;
  int index_b = 0;
  double distance = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Nearest-neighbour matching with the ratio test. Exact linear search.
/// A b-descriptor is claimed by at most one match (the closest).
std::vector<Match> match_descriptors(std::span<const Descriptor> desc_a,
                                     std::span<const Descriptor> desc_b, const MatchConfig& cfg);

struct VerifiedPair {
  std::string image_a;
  std::string image_b;
  std::vector<Match> inlier_matches;
  /// Inlier positions (a -> b), in the order the homography was fitted on.
  std::vector<Correspondence> correspondences;
  Homography homography;
};

/// Robust homography over the matched positions; nullopt when the pair does
/// not reach cfg.min_inliers_auto_link inliers.
std::optional<VerifiedPair> verify_pair(std::span<const Keypoint> kps_a,
                                        std::span<const Keypoint> kps_b,
                                        std::span<const Match> matches, const MatchConfig& cfg);

/// Connected components; singleton for every node without edges. Groups are
/// ordered by their smallest member and named "group-1", "group-2", ...
std::vector<Group> connected_components(std::span<const std::string> nodes,
                                        std::span<const std::pair<std::string, std::string>> edges);

/// Lazily extracted, thread-safe feature store keyed by image id + path.
class FeatureCache {
 public:
  using Loader = std::function<RasterImage(const ImageRecord&)>;

  explicit FeatureCache(ScaleSpaceParams params = {}, Loader loader = {});

  std::shared_ptr<const FeatureSet> get(const ImageRecord& record);
  void put(const ImageRecord& record, FeatureSet features);
  void clear();

 private:
  ScaleSpaceParams params_;
  Loader loader_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const FeatureSet>> cache_;
};

struct AutoGroupResult {
  std::vector<VerifiedPair> verified_pairs;
  std::vector<Group> groups;
};

/// Matches and verifies every unordered image pair of a snapshot. Groups are the
/// components over verified pairs plus the snapshot's manual links. Does not
/// modify the project.
AutoGroupResult compute_auto_group(const Project& project, FeatureCache& features,
                                   const MatchConfig& cfg, int threads = 0);

/// compute_auto_group followed by Project::replace_auto_links.
AutoGroupResult auto_group(Project& project, FeatureCache& features, const MatchConfig& cfg,
                           int threads = 0);

}  // namespace vistalink
