#include "vistalink/render.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <tuple>

namespace vistalink {

namespace {

constexpr double kMaxCanvasPixels = 1.0e8;

struct Edge {
  std::string neighbor;
  const Link* link;
};

// Bilinear sample at a continuous position (pixel centers at +0.5); false when outside.
bool sample(const RasterImage& img, double x, double y, float rgb[3]) {
  if (!(x >= 0 && y >= 0 && x < img.width && y < img.height)) return false;
  const double ix = x - 0.5;
  const double iy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(ix));
  const int y0 = static_cast<int>(std::floor(iy));
  const double fx = ix - x0;
  const double fy = iy - y0;
  const int xa = std::clamp(x0, 0, img.width - 1);
  const int xb = std::clamp(x0 + 1, 0, img.width - 1);
  const int ya = std::clamp(y0, 0, img.height - 1);
  const int yb = std::clamp(y0 + 1, 0, img.height - 1);
  for (int c = 0; c < 3; ++c) {
    const int ch = img.channels == 3 ? c : 0;
    const double top = img.at(xa, ya, ch) * (1 - fx) + img.at(xb, ya, ch) * fx;
    const double bot = img.at(xa, yb, ch) * (1 - fx) + img.at(xb, yb, ch) * fx;
    rgb[c] = static_cast<float>(top * (1 - fy) + bot * fy);
  }
  return true;
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
}

struct Canvas {
  int width;
  int height;
  std::vector<float> rgba;  // straight (non-premultiplied) alpha

  Canvas(int w, int h) : width(w), height(h), rgba(static_cast<std::size_t>(w) * h * 4, 0.0f) {}

  void composite(int u, int v, const float rgb[3], float alpha) {
    float* d = &rgba[(static_cast<std::size_t>(v) * width + u) * 4];
    const float out_a = alpha + d[3] * (1.0f - alpha);
    if (out_a <= 0) return;
    for (int c = 0; c < 3; ++c) {
      d[c] = (rgb[c] * alpha + d[c] * d[3] * (1.0f - alpha)) / out_a;
    }
    d[3] = out_a;
  }

  RgbaImage quantized() const {
    RgbaImage out(width, height);
    std::transform(rgba.begin(), rgba.end(), out.rgba.begin(), quantize);
    return out;
  }
};

// Maps the canvas pixel grid into the focus frame: canvas pixel (u, v) has its
// center at focus coordinate ((u + 0.5 + left) / scale, ...).
struct CanvasFrame {
  double left = 0;   // canvas units
  double top = 0;
  double scale = 1;

  Point2 to_focus(int u, int v) const {
    return {(u + 0.5 + left) / scale, (v + 0.5 + top) / scale};
  }
  Point2 to_canvas(Point2 f) const { return {f.x * scale - left, f.y * scale - top}; }
};

void draw_layer(Canvas& canvas, const CanvasFrame& frame, const RasterImage& img,
                const Homography& focus_to_member, float alpha) {
  const auto& m = focus_to_member.matrix();
  float rgb[3];
  for (int v = 0; v < canvas.height; ++v) {
    for (int u = 0; u < canvas.width; ++u) {
      const Point2 f = frame.to_focus(u, v);
      const double w = m(2, 0) * f.x + m(2, 1) * f.y + m(2, 2);
      if (!(w > 1e-12)) continue;
      const double x = (m(0, 0) * f.x + m(0, 1) * f.y + m(0, 2)) / w;
      const double y = (m(1, 0) * f.x + m(1, 1) * f.y + m(1, 2)) / w;
      if (sample(img, x, y, rgb)) canvas.composite(u, v, rgb, alpha);
    }
  }
}

// Clamps [x0,x1] x [y0,y1] (which contains the focus rect) to at most
// `max_area`, keeping the focus inside and the window centered on it.
void clamp_box(double& x0, double& y0, double& x1, double& y1, double fw, double fh,
               double max_area) {
  const double bw = x1 - x0;
  const double bh = y1 - y0;
  if (bw * bh <= max_area) return;
  const double f = std::sqrt(max_area / (bw * bh));
  double w = std::max(fw, bw * f);
  double h = std::max(fh, bh * f);
  if (w * h > max_area) {
    if (w == fw) {
      h = std::max(fh, max_area / w);
    } else {
      w = std::max(fw, max_area / h);
    }
  }
  w = std::min(w, bw);
  h = std::min(h, bh);
  auto place = [](double lo, double hi, double size, double center) {
    double a = center - size / 2;
    double b = center + size / 2;
    if (b > hi) {
      a -= b - hi;
      b = hi;
    }
    if (a < lo) {
      b += lo - a;
      a = lo;
    }
    return std::make_pair(a, b);
  };
  std::tie(x0, x1) = place(x0, x1, w, fw / 2);
  std::tie(y0, y1) = place(y0, y1, h, fh / 2);
}

}  // namespace

std::vector<RenderedMember> focus_paths(const Project& project, const std::string& focus_id) {
  if (!project.find_image(focus_id)) {
    throw Error(ErrorCode::ImageNotFound, "unknown image id \"" + focus_id + "\"", focus_id);
  }
  std::map<std::string, std::vector<Edge>> adjacency;
  for (const auto& l : project.links()) {
    adjacency[l.image_a].push_back({l.image_b, &l});
    adjacency[l.image_b].push_back({l.image_a, &l});
  }
  for (auto& [id, edges] : adjacency) {
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
      return std::tie(x.neighbor, x.link->id) < std::tie(y.neighbor, y.link->id);
    });
  }

  // BFS with sorted neighbours visits each level in lexicographic path order,
  // so first discovery is the tie-broken shortest path.
  std::vector<RenderedMember> out;
  std::map<std::string, std::size_t> index;
  out.push_back({focus_id, 0, Homography::identity(), {}});
  index[focus_id] = 0;
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    const std::string cur_id = out[cur].image_id;
    for (const Edge& e : adjacency[cur_id]) {
      if (index.count(e.neighbor)) continue;
      // neighbour -> current frame.
      const Homography step =
          e.link->image_a == e.neighbor ? e.link->homography : e.link->homography.inverse();
      RenderedMember m;
      m.image_id = e.neighbor;
      m.hops = out[cur].hops + 1;
      m.to_focus = out[cur].to_focus * step;
      index[e.neighbor] = out.size();
      out.push_back(std::move(m));
      queue.push_back(out.size() - 1);
    }
  }
  return out;
}

FocusView render_focus_view(const Project& project, const std::string& focus_id,
                            const RenderOptions& options) {
  if (!(options.canvas_scale > 0) || !std::isfinite(options.canvas_scale)) {
    throw Error(ErrorCode::InvalidArgument, "canvas scale must be a positive number");
  }
  if (options.date_filter && !is_valid_iso_date(*options.date_filter)) {
    throw Error(ErrorCode::BadDate, "invalid date filter \"" + *options.date_filter + "\"");
  }
  const RasterLoader loader =
      options.loader ? options.loader : [](const ImageRecord& r) { return load_image(r.path); };

  auto members = focus_paths(project, focus_id);
  std::erase_if(members, [&](const RenderedMember& m) {
    if (m.image_id == focus_id || !options.date_filter) return false;
    const auto& date = project.find_image(m.image_id)->capture_date;
    return date && *date > *options.date_filter;
  });
  // Back to front: more hops first, then later capture dates, undated behind dated.
  std::stable_sort(members.begin(), members.end(), [&](const RenderedMember& x, const RenderedMember& y) {
    const bool fx = x.image_id == focus_id;
    const bool fy = y.image_id == focus_id;
    if (fx != fy) return fy;
    if (x.hops != y.hops) return x.hops > y.hops;
    const auto& dx = project.find_image(x.image_id)->capture_date;
    const auto& dy = project.find_image(y.image_id)->capture_date;
    if (dx.has_value() != dy.has_value()) return !dx.has_value();
    if (dx && *dx != *dy) return *dx > *dy;
    return x.image_id < y.image_id;
  });

  std::vector<RasterImage> rasters;
  rasters.reserve(members.size());
  for (const auto& m : members) rasters.push_back(loader(*project.find_image(m.image_id)));
  const RasterImage& focus = rasters.back();
  const double fw = focus.width;
  const double fh = focus.height;

  double x0 = 0, y0 = 0, x1 = fw, y1 = fh;
  const double huge = std::sqrt(kMaxCanvasAreaFactor) * (fw + fh) * 4;
  for (std::size_t i = 0; i + 1 < members.size(); ++i) {
    const auto& img = rasters[i];
    const std::array<Point2, 4> corners = {Point2{0, 0}, Point2{double(img.width), 0},
                                           Point2{double(img.width), double(img.height)},
                                           Point2{0, double(img.height)}};
    for (const auto& c : corners) {
      const auto& m = members[i].to_focus.matrix();
      const double w = m(2, 0) * c.x + m(2, 1) * c.y + m(2, 2);
      if (!(w > 1e-12)) {
        // Corner at or behind infinity: let the area clamp bound the canvas.
        x0 = std::min(x0, -huge);
        y0 = std::min(y0, -huge);
        x1 = std::max(x1, fw + huge);
        y1 = std::max(y1, fh + huge);
        continue;
      }
      const Point2 p = warp_point(members[i].to_focus, c);
      x0 = std::min(x0, std::max(p.x, -huge));
      y0 = std::min(y0, std::max(p.y, -huge));
      x1 = std::max(x1, std::min(p.x, fw + huge));
      y1 = std::max(y1, std::min(p.y, fh + huge));
    }
  }
  const double s = options.canvas_scale;
  CanvasFrame frame;
  frame.scale = s;
  double right = 0, bottom = 0;
  // Pixel snapping can grow the box by up to a pixel per side, so tighten the
  // budget until the snapped canvas itself respects the area limit.
  const double limit = kMaxCanvasAreaFactor * fw * fh * s * s;
  double budget = kMaxCanvasAreaFactor * fw * fh;
  const double bx0 = x0, by0 = y0, bx1 = x1, by1 = y1;
  for (int iter = 0; iter < 32; ++iter) {
    x0 = bx0, y0 = by0, x1 = bx1, y1 = by1;
    clamp_box(x0, y0, x1, y1, fw, fh, budget);
    frame.left = std::floor(x0 * s + 1e-9);
    frame.top = std::floor(y0 * s + 1e-9);
    right = std::ceil(x1 * s - 1e-9);
    bottom = std::ceil(y1 * s - 1e-9);
    const double snapped = (right - frame.left) * (bottom - frame.top);
    if (snapped <= limit) break;
    budget *= 0.999 * limit / snapped;
  }
  const double pixels = (right - frame.left) * (bottom - frame.top);
  if (pixels > kMaxCanvasPixels) {
    throw Error(ErrorCode::InvalidArgument, "requested canvas is too large; lower the scale");
  }
  Canvas canvas(std::max(1, static_cast<int>(right - frame.left)),
                std::max(1, static_cast<int>(bottom - frame.top)));

  for (std::size_t i = 0; i < members.size(); ++i) {
    const bool is_focus = i + 1 == members.size();
    draw_layer(canvas, frame, rasters[i], members[i].to_focus.inverse(),
               is_focus ? 1.0f : static_cast<float>(kNeighborOpacity));
    const auto& img = rasters[i];
    const std::array<Point2, 4> corners = {Point2{0, 0}, Point2{double(img.width), 0},
                                           Point2{double(img.width), double(img.height)},
                                           Point2{0, double(img.height)}};
    for (int k = 0; k < 4; ++k) {
      try {
        members[i].canvas_corners[k] = frame.to_canvas(warp_point(members[i].to_focus, corners[k]));
      } catch (const Error&) {
        members[i].canvas_corners[k] = {std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::infinity()};
      }
    }
  }

  FocusView view;
  view.image = canvas.quantized();
  view.origin = {frame.left / s, frame.top / s};
  view.scale = s;
  view.members = std::move(members);
  return view;
}

RgbaImage warp_image(const RasterImage& src, const Homography& h, int width, int height) {
  Canvas canvas(width, height);
  CanvasFrame frame;
  draw_layer(canvas, frame, src, h.inverse(), 1.0f);
  return canvas.quantized();
}

}  // namespace vistalink
