#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vistalink/homography.hpp"

namespace vistalink {

inline constexpr std::string_view kFormatVersion = "1";

/// True for calendar-valid "YYYY-MM-DD" strings.
bool is_valid_iso_date(std::string_view date);

struct ImageRecord {
  std::string id;
  std::string path;
  int width = 0;
  int height = 0;
  std::optional<std::string> capture_date;
  std::optional<std::string> title;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

enum class LinkOrigin { Auto, Manual };

std::string_view to_string(LinkOrigin origin);

/// Relationship between two images; `homography` maps image_a into image_b.
struct Link {
  std::string id;
  std::string image_a;
  std::string image_b;
  LinkOrigin origin = LinkOrigin::Manual;
  /// Manual links: the user-drawn outlines.
  std::optional<Quad> quad_a;
  std::optional<Quad> quad_b;
  /// Auto links: verified inlier point pairs (a -> b).
  std::vector<Correspondence> pairs;
  Homography homography;

  bool connects(std::string_view x, std::string_view y) const {
    return (image_a == x && image_b == y) || (image_a == y && image_b == x);
  }

  friend bool operator==(const Link& l, const Link& r);
};

/// Connected component of the link graph; members are id-sorted.
struct Group {
  std::string id;
  std::vector<std::string> members;

  friend bool operator==(const Group&, const Group&) = default;
};

struct VerifiedPair;

/// Images, links and the derived grouping. Groups are always recomputed
/// from links; nothing about them is stored.
class Project {
 public:
  Project() = default;
  Project(std::string id, std::string name) : id_(std::move(id)), name_(std::move(name)) {}

  const std::string& id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  void set_id(std::string id) { id_ = std::move(id); }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Both lists are kept sorted by id.
  const std::vector<ImageRecord>& images() const noexcept { return images_; }
  const std::vector<Link>& links() const noexcept { return links_; }

  const ImageRecord* find_image(std::string_view id) const;
  const Link* find_link(std::string_view id) const;
  const Link* find_link_between(std::string_view a, std::string_view b) const;

  /// Assigns a fresh id when `record.id` is empty; validates the date.
  const ImageRecord& add_image(ImageRecord record);

  /// Computes the homography from the two outlines and stores a manual link.
  const Link& create_manual_link(const std::string& image_a, const std::string& image_b,
                                 const Quad& quad_a, const Quad& quad_b);
  void delete_link(std::string_view link_id);

  /// Drops every auto link, then stores one per verified pair whose image
  /// pair carries no manual link. Manual links are never touched.
  void replace_auto_links(const std::vector<VerifiedPair>& pairs);

  /// Inserts a fully formed link after checking references and uniqueness.
  void insert_link(Link link);

  std::vector<Group> groups() const;
  /// Group containing `image_id`, or nullopt for an unknown id.
  std::optional<Group> group_of(std::string_view image_id) const;

  std::string next_image_id() const;
  std::string next_link_id() const;

  friend bool operator==(const Project&, const Project&) = default;

 private:
  const Link& insert_sorted(Link link);

  std::string id_;
  std::string name_;
  std::vector<ImageRecord> images_;
  std::vector<Link> links_;
};

/// Deterministic id for the auto link between two images.
std::string auto_link_id(std::string_view a, std::string_view b);

/// Checks pair uniqueness, references, correspondence counts and that the
/// stored homography is reproduced by re-estimation within `tolerance`.
void validate_project(const Project& project, int min_auto_pairs = 12, double tolerance = 1e-6);

/// Canonical interchange document: sorted keys, id-sorted arrays,
/// shortest round-trip number formatting.
std::string export_project(const Project& project);
Project import_project(std::string_view document, int min_auto_pairs = 12);

}  // namespace vistalink
