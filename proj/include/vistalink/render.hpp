#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vistalink/homography.hpp"
#include "vistalink/image.hpp"
#include "vistalink/project.hpp"

namespace vistalink {

inline constexpr double kNeighborOpacity = 0.6;
inline constexpr double kMaxCanvasAreaFactor = 8.0;

using RasterLoader = std::function<RasterImage(const ImageRecord&)>;

struct RenderOptions {
  /// Members captured after this ISO date are left out; the focus is always drawn.
  std::optional<std::string> date_filter;
  double canvas_scale = 1.0;
  RasterLoader loader;  ///< defaults to load_image(record.path)
};

struct RenderedMember {
  std::string image_id;
  int hops = 0;
  /// Maps the member's pixel frame into the focus frame.
  Homography to_focus;
  /// Member image corners (0,0), (w,0), (w,h), (0,h) in canvas pixel coordinates.
  std::array<Point2, 4> canvas_corners;
};

struct FocusView {
  RgbaImage image;
  /// Focus-frame coordinate of the canvas' top-left corner.
  Point2 origin;
  double scale = 1.0;
  /// Draw order, back to front; the focus image is last.
  std::vector<RenderedMember> members;
};

/// Shortest-hop composition of link homographies from every member reachable
/// from `focus_id` into the focus frame (ties broken by the lexicographically
/// smaller image-id path). The focus maps to itself with identity.
std::vector<RenderedMember> focus_paths(const Project& project, const std::string& focus_id);

/// Warps the focus image's group into its perspective and composites the
/// result: neighbours back to front at fixed opacity, focus last and opaque.
FocusView render_focus_view(const Project& project, const std::string& focus_id,
                            const RenderOptions& options = {});

/// Inverse-mapped bilinear warp of `src` by `h` (source -> destination frame)
/// onto a transparent canvas; out-of-bounds samples stay transparent.
RgbaImage warp_image(const RasterImage& src, const Homography& h, int width, int height);

}  // namespace vistalink
