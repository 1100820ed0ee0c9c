#include "vistalink/matching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace vistalink {

namespace {

double squared_distance(const Descriptor& a, const Descriptor& b) {
  double acc = 0.0;
  for (int i = 0; i < kDescriptorSize; ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-pair RANSAC seed; order-independent in the project's image list.
std::uint64_t pair_seed(std::uint64_t seed, std::string_view a, std::string_view b) {
  std::uint64_t h = fnv1a(a);
  h = fnv1a(std::string_view("\x1f", 1), h);
  h = fnv1a(b, h);
  return splitmix(seed ^ h);
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<Match> match_descriptors(std::span<const Descriptor> desc_a,
                                     std::span<const Descriptor> desc_b, const MatchConfig& cfg) {
  cfg.validate();
  std::vector<Match> candidates;
  if (desc_a.empty() || desc_b.empty()) return candidates;
  const double ratio2 = cfg.ratio_threshold * cfg.ratio_threshold;
  for (std::size_t i = 0; i < desc_a.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    int best_j = -1;
    for (std::size_t j = 0; j < desc_b.size(); ++j) {
      const double d = squared_distance(desc_a[i], desc_b[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = static_cast<int>(j);
      } else if (d < second) {
        second = d;
      }
    }
    bool accept;
    if (desc_b.size() == 1) {
      accept = std::sqrt(best) < cfg.single_candidate_max_distance;
    } else {
      accept = best < ratio2 * second;
    }
    if (accept) candidates.push_back({static_cast<int>(i), best_j, std::sqrt(best)});
  }
  // Keep only the closest claimant of every b index (ties: lower a index).
  std::vector<int> owner(desc_b.size(), -1);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    int& o = owner[candidates[k].index_b];
    if (o < 0 || candidates[k].distance < candidates[o].distance) o = static_cast<int>(k);
  }
  std::vector<Match> out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (owner[candidates[k].index_b] == static_cast<int>(k)) out.push_back(candidates[k]);
  }
  return out;
}

std::optional<VerifiedPair> verify_pair(std::span<const Keypoint> kps_a,
                                        std::span<const Keypoint> kps_b,
                                        std::span<const Match> matches, const MatchConfig& cfg) {
  cfg.validate();
  if (matches.size() < 4 || static_cast<int>(matches.size()) < cfg.min_inliers_auto_link) {
    return std::nullopt;
  }
  std::vector<Correspondence> pairs;
  pairs.reserve(matches.size());
  for (const Match& m : matches) {
    if (m.index_a < 0 || m.index_b < 0 || static_cast<std::size_t>(m.index_a) >= kps_a.size() ||
        static_cast<std::size_t>(m.index_b) >= kps_b.size()) {
      throw Error(ErrorCode::InvalidArgument, "match references a keypoint out of range");
    }
    const Keypoint& a = kps_a[m.index_a];
    const Keypoint& b = kps_b[m.index_b];
    pairs.push_back({{a.x, a.y}, {b.x, b.y}});
  }
  RobustEstimate est;
  try {
    est = estimate_robust(pairs, cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EstimationFailed) return std::nullopt;
    throw;
  }
  if (static_cast<int>(est.inliers.size()) < cfg.min_inliers_auto_link) return std::nullopt;
  VerifiedPair vp;
  vp.homography = est.homography;
  for (std::size_t idx : est.inliers) {
    vp.inlier_matches.push_back(matches[idx]);
    vp.correspondences.push_back(pairs[idx]);
  }
  return vp;
}

std::vector<Group> connected_components(std::span<const std::string> nodes,
                                        std::span<const std::pair<std::string, std::string>> edges) {
  std::vector<std::string> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto index_of = [&](const std::string& id) -> std::optional<std::size_t> {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
    if (it == sorted.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - sorted.begin());
  };
  UnionFind uf(sorted.size());
  for (const auto& [a, b] : edges) {
    auto ia = index_of(a);
    auto ib = index_of(b);
    if (ia && ib) uf.unite(*ia, *ib);
  }
  // Iterating nodes in sorted order yields groups ordered by smallest member
  // and members already sorted.
  std::vector<Group> groups;
  std::vector<long> group_of_root(sorted.size(), -1);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const std::size_t root = uf.find(i);
    if (group_of_root[root] < 0) {
      group_of_root[root] = static_cast<long>(groups.size());
      groups.push_back({"group-" + std::to_string(groups.size() + 1), {}});
    }
    groups[group_of_root[root]].members.push_back(sorted[i]);
  }
  return groups;
}

FeatureCache::FeatureCache(ScaleSpaceParams params, Loader loader)
    : params_(params), loader_(std::move(loader)) {
  if (!loader_) {
    loader_ = [](const ImageRecord& r) { return load_image(r.path); };
  }
}

std::shared_ptr<const FeatureSet> FeatureCache::get(const ImageRecord& record) {
  const auto key = std::make_pair(record.id, record.path);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  // Extraction runs unlocked; a racing duplicate computes the same result.
  auto features = std::make_shared<const FeatureSet>(extract_features(loader_(record), params_));
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(key, std::move(features)).first->second;
}

void FeatureCache::put(const ImageRecord& record, FeatureSet features) {
  std::lock_guard lock(mutex_);
  cache_[std::make_pair(record.id, record.path)] =
      std::make_shared<const FeatureSet>(std::move(features));
}

void FeatureCache::clear() {
  std::lock_guard lock(mutex_);
  cache_.clear();
}

AutoGroupResult compute_auto_group(const Project& project, FeatureCache& features,
                                   const MatchConfig& cfg, int threads) {
  cfg.validate();
  AutoGroupResult result;
  const auto& images = project.images();  // id-sorted
  if (images.empty()) return result;

  std::vector<std::shared_ptr<const FeatureSet>> feats(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) { feats[i] = features.get(images[i]); });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) pairs.emplace_back(i, j);
  }
  std::vector<std::optional<VerifiedPair>> verified(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    MatchConfig pair_cfg = cfg;
    pair_cfg.seed = pair_seed(cfg.seed, images[i].id, images[j].id);
    const auto matches = match_descriptors(feats[i]->descriptors, feats[j]->descriptors, pair_cfg);
    auto vp = verify_pair(feats[i]->keypoints, feats[j]->keypoints, matches, pair_cfg);
    if (vp) {
      vp->image_a = images[i].id;
      vp->image_b = images[j].id;
      verified[k] = std::move(vp);
    }
  });

  std::vector<std::string> nodes;
  for (const auto& r : images) nodes.push_back(r.id);
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto& vp : verified) {
    if (!vp) continue;
    edges.emplace_back(vp->image_a, vp->image_b);
    result.verified_pairs.push_back(std::move(*vp));
  }
  for (const auto& l : project.links()) {
    if (l.origin == LinkOrigin::Manual) edges.emplace_back(l.image_a, l.image_b);
  }
  result.groups = connected_components(nodes, edges);
  return result;
}

AutoGroupResult auto_group(Project& project, FeatureCache& features, const MatchConfig& cfg,
                           int threads) {
  auto result = compute_auto_group(project, features, cfg, threads);
  project.replace_auto_links(result.verified_pairs);
  return result;
}

}  // namespace vistalink
