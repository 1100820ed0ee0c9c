#include "vistalink/project.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "vistalink/json_io.hpp"

namespace vistalink {

using nlohmann::json;

namespace {

constexpr std::string_view kImagePrefix = "img-";
constexpr std::string_view kLinkPrefix = "link-";

std::string next_id(std::string_view prefix, const std::vector<std::string>& existing) {
  long long max_seen = 0;
  for (const auto& id : existing) {
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) continue;
    long long v = 0;
    const char* first = id.data() + prefix.size();
    const char* last = id.data() + id.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && ptr == last) max_seen = std::max(max_seen, v);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld", max_seen + 1);
  return std::string(prefix) + buf;
}

// ---- canonical writer -------------------------------------------------------

void write_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

bool is_scalar_array(const json& j) {
  return std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
}

void write_canonical(std::string& out, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: keys already sorted
        if (!first) out += ",\n";
        first = false;
        out += pad + "  ";
        out += json(it.key()).dump(-1, ' ', false, json::error_handler_t::strict);
        out += ": ";
        write_canonical(out, it.value(), indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      if (is_scalar_array(j)) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write_canonical(out, j[i], indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad + "  ";
        write_canonical(out, j[i], indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      write_number(out, j.get<double>());
      return;
    default:
      out += j.dump(-1, ' ', false, json::error_handler_t::strict);
      return;
  }
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

json quad_json(const Quad& q) {
  json arr = json::array();
  for (const auto& p : q.pts) arr.push_back(point_json(p));
  return arr;
}

// ---- strict reader ----------------------------------------------------------

[[noreturn]] void malformed(const std::string& what, const std::string& entity = {}) {
  throw Error(ErrorCode::MalformedDocument, "malformed document: " + what, entity);
}

const json& member(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(ctx + " is missing \"" + std::string(key) + "\"", ctx);
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_string()) malformed(ctx + "." + key + " must be a string", ctx);
  return v.get<std::string>();
}

std::optional<std::string> get_optional_string(const json& obj, const char* key,
                                               const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(ctx + "." + key + " must be a string", ctx);
  return it->get<std::string>();
}

double get_number(const json& v, const std::string& ctx) {
  if (!v.is_number()) malformed(ctx + " must be a number", ctx);
  const double d = v.get<double>();
  if (!std::isfinite(d)) malformed(ctx + " must be finite", ctx);
  return d;
}

int get_dimension(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_number_integer()) malformed(ctx + "." + key + " must be an integer", ctx);
  const auto n = v.get<long long>();
  if (n <= 0 || n > 1'000'000) {
    throw Error(ErrorCode::InvariantViolation, ctx + "." + key + " must be positive", ctx);
  }
  return static_cast<int>(n);
}

Quad parse_quad(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 4) malformed(ctx + " must hold exactly 4 points", ctx);
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) {
    const json& p = v[i];
    if (!p.is_array() || p.size() != 2) malformed(ctx + " points must be [x, y]", ctx);
    q.pts[i] = {get_number(p[0], ctx), get_number(p[1], ctx)};
  }
  return q;
}

ImageRecord parse_image(const json& v, std::size_t index) {
  const std::string fallback = "images[" + std::to_string(index) + "]";
  if (!v.is_object()) malformed(fallback + " must be an object", fallback);
  ImageRecord r;
  r.id = get_string(v, "id", fallback);
  if (r.id.empty()) malformed(fallback + ".id must not be empty", fallback);
  r.path = get_string(v, "path", r.id);
  r.width = get_dimension(v, "width", r.id);
  r.height = get_dimension(v, "height", r.id);
  r.capture_date = get_optional_string(v, "capture_date", r.id);
  if (r.capture_date && !is_valid_iso_date(*r.capture_date)) {
    throw Error(ErrorCode::BadDate, r.id + ": invalid capture_date \"" + *r.capture_date + "\"",
                r.id);
  }
  r.title = get_optional_string(v, "title", r.id);
  return r;
}

Link parse_link(const json& v, std::size_t index) {
  const std::string fallback = "links[" + std::to_string(index) + "]";
  if (!v.is_object()) malformed(fallback + " must be an object", fallback);
  Link l;
  l.id = get_string(v, "id", fallback);
  if (l.id.empty()) malformed(fallback + ".id must not be empty", fallback);
  l.image_a = get_string(v, "a", l.id);
  l.image_b = get_string(v, "b", l.id);
  const std::string origin = get_string(v, "origin", l.id);
  if (origin == "manual") {
    l.origin = LinkOrigin::Manual;
  } else if (origin == "auto") {
    l.origin = LinkOrigin::Auto;
  } else {
    malformed(l.id + ": origin must be \"auto\" or \"manual\"", l.id);
  }
  if (auto it = v.find("quad_a"); it != v.end()) l.quad_a = parse_quad(*it, l.id + ".quad_a");
  if (auto it = v.find("quad_b"); it != v.end()) l.quad_b = parse_quad(*it, l.id + ".quad_b");
  if (auto it = v.find("pairs"); it != v.end()) {
    if (!it->is_array()) malformed(l.id + ".pairs must be an array", l.id);
    for (const json& p : *it) {
      if (!p.is_array() || p.size() != 4) malformed(l.id + ".pairs entries must be [xa, ya, xb, yb]", l.id);
      const std::string ctx = l.id + ".pairs";
      l.pairs.push_back({{get_number(p[0], ctx), get_number(p[1], ctx)},
                         {get_number(p[2], ctx), get_number(p[3], ctx)}});
    }
  }
  const json& hv = member(v, "homography", l.id);
  if (!hv.is_array() || hv.size() != 9) malformed(l.id + ".homography must hold 9 numbers", l.id);
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = get_number(hv[i], l.id + ".homography");
  try {
    l.homography = Homography(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, l.id + ": " + e.what(), l.id);
  }
  return l;
}

Homography reestimate(const Link& l) {
  if (l.origin == LinkOrigin::Manual) return estimate_exact(*l.quad_a, *l.quad_b);
  return fit_homography(l.pairs);
}

void validate_link_shape(const Link& l, int min_auto_pairs) {
  if (l.image_a == l.image_b) {
    throw Error(ErrorCode::SelfLink, l.id + ": link connects image \"" + l.image_a + "\" to itself",
                l.id);
  }
  if (l.origin == LinkOrigin::Manual) {
    if (!l.quad_a || !l.quad_b || !l.pairs.empty()) {
      throw Error(ErrorCode::InvariantViolation,
                  l.id + ": manual link must carry quad_a and quad_b and no pairs", l.id);
    }
    l.quad_a->validate(l.id + ".quad_a");
    l.quad_b->validate(l.id + ".quad_b");
  } else {
    if (l.quad_a || l.quad_b) {
      throw Error(ErrorCode::InvariantViolation, l.id + ": auto link must not carry quads", l.id);
    }
    if (static_cast<int>(l.pairs.size()) < min_auto_pairs) {
      throw Error(ErrorCode::InvariantViolation,
                  l.id + ": auto link carries " + std::to_string(l.pairs.size()) +
                      " pairs, at least " + std::to_string(min_auto_pairs) + " required",
                  l.id);
    }
  }
}

}  // namespace

bool is_valid_iso_date(std::string_view d) {
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  auto digits = [&](std::size_t from, std::size_t n, int& out) {
    out = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (d[i] < '0' || d[i] > '9') return false;
      out = out * 10 + (d[i] - '0');
    }
    return true;
  };
  int y, m, day;
  if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, day)) return false;
  if (m < 1 || m > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  const int max_day = (m == 2 && leap) ? 29 : kDays[m - 1];
  return day <= max_day;
}

std::string_view to_string(LinkOrigin origin) {
  return origin == LinkOrigin::Auto ? "auto" : "manual";
}

bool operator==(const Link& l, const Link& r) {
  return l.id == r.id && l.image_a == r.image_a && l.image_b == r.image_b &&
         l.origin == r.origin && l.quad_a == r.quad_a && l.quad_b == r.quad_b &&
         l.pairs == r.pairs && l.homography.matrix() == r.homography.matrix();
}

std::string auto_link_id(std::string_view a, std::string_view b) {
  std::string id = "auto-";
  id += a;
  id += "--";
  id += b;
  return id;
}

const ImageRecord* Project::find_image(std::string_view id) const {
  auto it = std::find_if(images_.begin(), images_.end(), [&](const auto& r) { return r.id == id; });
  return it == images_.end() ? nullptr : &*it;
}

const Link* Project::find_link(std::string_view id) const {
  auto it = std::find_if(links_.begin(), links_.end(), [&](const auto& l) { return l.id == id; });
  return it == links_.end() ? nullptr : &*it;
}

const Link* Project::find_link_between(std::string_view a, std::string_view b) const {
  auto it = std::find_if(links_.begin(), links_.end(), [&](const auto& l) { return l.connects(a, b); });
  return it == links_.end() ? nullptr : &*it;
}

std::string Project::next_image_id() const {
  std::vector<std::string> ids;
  for (const auto& r : images_) ids.push_back(r.id);
  return next_id(kImagePrefix, ids);
}

std::string Project::next_link_id() const {
  std::vector<std::string> ids;
  for (const auto& l : links_) ids.push_back(l.id);
  return next_id(kLinkPrefix, ids);
}

const ImageRecord& Project::add_image(ImageRecord record) {
  if (record.id.empty()) record.id = next_image_id();
  if (find_image(record.id)) {
    throw Error(ErrorCode::DuplicateId, "image id \"" + record.id + "\" already exists", record.id);
  }
  if (record.capture_date && !is_valid_iso_date(*record.capture_date)) {
    throw Error(ErrorCode::BadDate, "invalid capture date \"" + *record.capture_date + "\"",
                record.id);
  }
  if (record.width <= 0 || record.height <= 0) {
    throw Error(ErrorCode::InvariantViolation, "image dimensions must be positive", record.id);
  }
  auto pos = std::lower_bound(images_.begin(), images_.end(), record.id,
                              [](const ImageRecord& r, const std::string& id) { return r.id < id; });
  return *images_.insert(pos, std::move(record));
}

const Link& Project::create_manual_link(const std::string& image_a, const std::string& image_b,
                                        const Quad& quad_a, const Quad& quad_b) {
  if (image_a == image_b) {
    throw Error(ErrorCode::SelfLink, "cannot link image \"" + image_a + "\" to itself", image_a);
  }
  for (const auto* id : {&image_a, &image_b}) {
    if (!find_image(*id)) throw Error(ErrorCode::ImageNotFound, "unknown image id \"" + *id + "\"", *id);
  }
  if (const Link* existing = find_link_between(image_a, image_b)) {
    throw Error(ErrorCode::LinkExists,
                "images \"" + image_a + "\" and \"" + image_b + "\" are already linked by \"" +
                    existing->id + "\"; delete it first to replace",
                existing->id);
  }
  quad_a.validate("quad_a");
  quad_b.validate("quad_b");
  Link link;
  link.id = next_link_id();
  link.image_a = image_a;
  link.image_b = image_b;
  link.origin = LinkOrigin::Manual;
  link.quad_a = quad_a;
  link.quad_b = quad_b;
  link.homography = estimate_exact(quad_a, quad_b);
  return insert_sorted(std::move(link));
}

void Project::delete_link(std::string_view link_id) {
  auto it = std::find_if(links_.begin(), links_.end(), [&](const auto& l) { return l.id == link_id; });
  if (it == links_.end()) {
    throw Error(ErrorCode::LinkNotFound, "unknown link id \"" + std::string(link_id) + "\"",
                std::string(link_id));
  }
  links_.erase(it);
}

void Project::replace_auto_links(const std::vector<VerifiedPair>& pairs) {
  std::erase_if(links_, [](const Link& l) { return l.origin == LinkOrigin::Auto; });
  for (const auto& vp : pairs) {
    if (!find_image(vp.image_a) || !find_image(vp.image_b)) continue;
    if (find_link_between(vp.image_a, vp.image_b)) continue;
    Link link;
    link.id = auto_link_id(vp.image_a, vp.image_b);
    link.image_a = vp.image_a;
    link.image_b = vp.image_b;
    link.origin = LinkOrigin::Auto;
    link.pairs = vp.correspondences;
    link.homography = vp.homography;
    insert_sorted(std::move(link));
  }
}

void Project::insert_link(Link link) {
  if (find_link(link.id)) throw Error(ErrorCode::DuplicateId, "link id \"" + link.id + "\" already exists", link.id);
  for (const auto* id : {&link.image_a, &link.image_b}) {
    if (!find_image(*id)) {
      throw Error(ErrorCode::DanglingReference,
                  link.id + " references unknown image \"" + *id + "\"", *id);
    }
  }
  if (link.image_a == link.image_b) {
    throw Error(ErrorCode::SelfLink, link.id + ": self link", link.id);
  }
  if (const Link* existing = find_link_between(link.image_a, link.image_b)) {
    throw Error(ErrorCode::LinkExists, link.id + " duplicates the image pair of " + existing->id,
                link.id);
  }
  insert_sorted(std::move(link));
}

const Link& Project::insert_sorted(Link link) {
  auto pos = std::lower_bound(links_.begin(), links_.end(), link.id,
                              [](const Link& l, const std::string& id) { return l.id < id; });
  return *links_.insert(pos, std::move(link));
}

std::vector<Group> Project::groups() const {
  std::vector<std::string> nodes;
  nodes.reserve(images_.size());
  for (const auto& r : images_) nodes.push_back(r.id);
  std::vector<std::pair<std::string, std::string>> edges;
  edges.reserve(links_.size());
  for (const auto& l : links_) edges.emplace_back(l.image_a, l.image_b);
  return connected_components(nodes, edges);
}

std::optional<Group> Project::group_of(std::string_view image_id) const {
  for (auto& g : groups()) {
    if (std::binary_search(g.members.begin(), g.members.end(), image_id,
                           [](std::string_view x, std::string_view y) { return x < y; })) {
      return g;
    }
  }
  return std::nullopt;
}

void validate_project(const Project& project, int min_auto_pairs, double tolerance) {
  std::set<std::string> image_ids;
  for (const auto& r : project.images()) {
    if (!image_ids.insert(r.id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate image id \"" + r.id + "\"", r.id);
    }
  }
  std::set<std::string> link_ids;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& l : project.links()) {
    if (!link_ids.insert(l.id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate link id \"" + l.id + "\"", l.id);
    }
    for (const auto* ref : {&l.image_a, &l.image_b}) {
      if (!image_ids.count(*ref)) {
        throw Error(ErrorCode::DanglingReference,
                    "link \"" + l.id + "\" references unknown image \"" + *ref + "\"", *ref);
      }
    }
    validate_link_shape(l, min_auto_pairs);
    auto key = std::minmax(l.image_a, l.image_b);
    if (!pairs.emplace(key.first, key.second).second) {
      throw Error(ErrorCode::LinkExists,
                  "link \"" + l.id + "\" duplicates an existing link on its image pair", l.id);
    }
    Homography recomputed;
    try {
      recomputed = reestimate(l);
    } catch (const Error& e) {
      throw Error(ErrorCode::HomographyInconsistent,
                  "link \"" + l.id + "\": homography cannot be re-estimated: " + e.what(), l.id);
    }
    const double diff = recomputed.max_abs_diff(l.homography);
    if (!(diff < tolerance)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3g", diff);
      throw Error(ErrorCode::HomographyInconsistent,
                  "link \"" + l.id + "\": stored homography differs from its correspondences by " +
                      buf,
                  l.id);
    }
  }
}

nlohmann::json to_json(const ImageRecord& r) {
  json j = {{"id", r.id}, {"path", r.path}, {"width", r.width}, {"height", r.height}};
  if (r.capture_date) j["capture_date"] = *r.capture_date;
  if (r.title) j["title"] = *r.title;
  return j;
}

nlohmann::json to_json(const Link& l) {
  json j = {{"id", l.id}, {"a", l.image_a}, {"b", l.image_b}, {"origin", std::string(to_string(l.origin))}};
  if (l.quad_a) j["quad_a"] = quad_json(*l.quad_a);
  if (l.quad_b) j["quad_b"] = quad_json(*l.quad_b);
  if (l.origin == LinkOrigin::Auto) {
    json jp = json::array();
    for (const auto& c : l.pairs) jp.push_back(json::array({c.a.x, c.a.y, c.b.x, c.b.y}));
    j["pairs"] = std::move(jp);
  }
  json h = json::array();
  for (double v : l.homography.row_major()) h.push_back(v);
  j["homography"] = std::move(h);
  return j;
}

nlohmann::json to_json(const Group& g) { return {{"id", g.id}, {"members", g.members}}; }

nlohmann::json to_json(const VerifiedPair& vp) {
  json h = json::array();
  for (double v : vp.homography.row_major()) h.push_back(v);
  return {{"a", vp.image_a}, {"b", vp.image_b},
          {"inliers", vp.inlier_matches.size()}, {"homography", std::move(h)}};
}

Quad quad_from_json(const nlohmann::json& value, const std::string& name) {
  return parse_quad(value, name);
}

std::string canonical_dump(const nlohmann::json& value) {
  std::string out;
  write_canonical(out, value, 0);
  return out;
}

std::string export_project(const Project& project) {
  json doc = json::object();
  doc["format_version"] = std::string(kFormatVersion);
  doc["project"] = {{"id", project.id()}, {"name", project.name()}};
  json jimages = json::array();
  for (const auto& r : project.images()) jimages.push_back(to_json(r));  // id-sorted
  doc["images"] = std::move(jimages);
  json jlinks = json::array();
  for (const auto& l : project.links()) jlinks.push_back(to_json(l));
  doc["links"] = std::move(jlinks);
  return canonical_dump(doc) + "\n";
}

Project import_project(std::string_view document, int min_auto_pairs) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) malformed("top level must be an object");
  const json& version = member(doc, "format_version", "document");
  if (!version.is_string()) malformed("format_version must be a string");
  if (version.get<std::string>() != kFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "unsupported format_version \"" + version.get<std::string>() + "\"",
                version.get<std::string>());
  }
  const json& jp = member(doc, "project", "document");
  if (!jp.is_object()) malformed("project must be an object");
  Project project(get_string(jp, "id", "project"), get_string(jp, "name", "project"));

  const json& jimages = member(doc, "images", "document");
  if (!jimages.is_array()) malformed("images must be an array");
  std::vector<ImageRecord> images;
  for (std::size_t i = 0; i < jimages.size(); ++i) images.push_back(parse_image(jimages[i], i));
  for (auto& r : images) {
    if (project.find_image(r.id)) {
      throw Error(ErrorCode::DuplicateId, "duplicate image id \"" + r.id + "\"", r.id);
    }
    project.add_image(std::move(r));
  }

  const json& jlinks = member(doc, "links", "document");
  if (!jlinks.is_array()) malformed("links must be an array");
  std::vector<Link> links;
  for (std::size_t i = 0; i < jlinks.size(); ++i) links.push_back(parse_link(jlinks[i], i));
  for (auto& l : links) {
    if (project.find_link(l.id)) {
      throw Error(ErrorCode::DuplicateId, "duplicate link id \"" + l.id + "\"", l.id);
    }
    for (const auto* ref : {&l.image_a, &l.image_b}) {
      if (!project.find_image(*ref)) {
        throw Error(ErrorCode::DanglingReference,
                    "link \"" + l.id + "\" references unknown image \"" + *ref + "\"", *ref);
      }
    }
    validate_link_shape(l, min_auto_pairs);
    project.insert_link(std::move(l));
  }
  validate_project(project, min_auto_pairs);
  return project;
}

}  // namespace vistalink
