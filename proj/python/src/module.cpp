#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vistalink/error.hpp"
#include "vistalink/features.hpp"
#include "vistalink/homography.hpp"
#include "vistalink/image.hpp"
#include "vistalink/matching.hpp"
#include "vistalink/project.hpp"
#include "vistalink/render.hpp"

namespace py = pybind11;
using namespace vistalink;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Quad to_quad(const std::vector<std::pair<double, double>>& pts, const char* name) {
  if (pts.size() != 4) throw Error(ErrorCode::InvalidArgument, std::string(name) + " needs exactly 4 points", name);
  Quad q;
  for (int i = 0; i < 4; ++i) q.pts[i] = {pts[i].first, pts[i].second};
  return q;
}

std::vector<Descriptor> to_descriptors(const FloatArray& arr) {
  if (arr.ndim() != 2 || (arr.shape(0) > 0 && arr.shape(1) != kDescriptorSize)) {
    throw Error(ErrorCode::InvalidArgument, "descriptors must have shape (n, 128)");
  }
  std::vector<Descriptor> out(static_cast<std::size_t>(arr.shape(0)));
  const float* p = arr.data();
  for (auto& d : out) {
    std::copy(p, p + kDescriptorSize, d.begin());
    p += kDescriptorSize;
  }
  return out;
}

std::vector<Keypoint> to_keypoints(const DoubleArray& arr) {
  if (arr.ndim() != 2 || (arr.shape(0) > 0 && arr.shape(1) < 2)) {
    throw Error(ErrorCode::InvalidArgument, "keypoints must have shape (n, >=2)");
  }
  std::vector<Keypoint> out;
  const auto cols = arr.shape(1);
  auto r = arr.unchecked<2>();
  for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
    Keypoint k;
    k.x = r(i, 0);
    k.y = r(i, 1);
    if (cols > 2) k.sigma = r(i, 2);
    if (cols > 3) k.orientation = r(i, 3);
    if (cols > 4) k.response = r(i, 4);
    out.push_back(k);
  }
  return out;
}

py::tuple features_to_numpy(const FeatureSet& fs) {
  const auto n = static_cast<py::ssize_t>(fs.keypoints.size());
  DoubleArray kps({n, py::ssize_t{5}});
  auto k = kps.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const Keypoint& kp = fs.keypoints[static_cast<std::size_t>(i)];
    k(i, 0) = kp.x;
    k(i, 1) = kp.y;
    k(i, 2) = kp.sigma;
    k(i, 3) = kp.orientation;
    k(i, 4) = kp.response;
  }
  FloatArray desc({n, py::ssize_t{kDescriptorSize}});
  float* d = desc.mutable_data();
  for (const auto& v : fs.descriptors) d = std::copy(v.begin(), v.end(), d);
  return py::make_tuple(kps, desc);
}

std::vector<Correspondence> to_pairs(const DoubleArray& arr) {
  if (arr.ndim() != 2 || (arr.shape(0) > 0 && arr.shape(1) != 4)) {
    throw Error(ErrorCode::InvalidArgument, "pairs must have shape (n, 4): xa, ya, xb, yb");
  }
  std::vector<Correspondence> out;
  auto r = arr.unchecked<2>();
  for (py::ssize_t i = 0; i < arr.shape(0); ++i) out.push_back({{r(i, 0), r(i, 1)}, {r(i, 2), r(i, 3)}});
  return out;
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

MatchConfig make_config(double ratio, int min_inliers, double threshold, std::uint64_t seed) {
  MatchConfig cfg;
  cfg.ratio_threshold = ratio;
  cfg.min_inliers_auto_link = min_inliers;
  cfg.ransac_reproj_threshold = threshold;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

py::dict link_to_dict(const Link& l) {
  py::dict d;
  d["id"] = l.id;
  d["a"] = l.image_a;
  d["b"] = l.image_b;
  d["origin"] = std::string(to_string(l.origin));
  d["homography"] = l.homography.matrix();
  d["pairs"] = l.pairs.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_vistalink, m) {
  m.doc() = "Feature matching, homography estimation and focus-view rendering for dated photographs.";

  py::object error_type = py::reinterpret_steal<py::object>(
      PyErr_NewException("vistalink._vistalink.VistalinkError", PyExc_ValueError, nullptr));
  m.attr("VistalinkError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("vistalink._vistalink").attr("VistalinkError");
      py::object inst = type(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      inst.attr("entity") = e.entity();
      if (const auto* dq = dynamic_cast<const DegenerateQuadError*>(&e)) {
        inst.attr("points") = dq->points();
      } else {
        inst.attr("points") = py::list();
      }
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  py::class_<RasterImage>(m, "Image")
      .def_readonly("width", &RasterImage::width)
      .def_readonly("height", &RasterImage::height)
      .def_readonly("channels", &RasterImage::channels)
      .def_property_readonly("gray",
                             [](const RasterImage& img) {
                               FloatArray a({py::ssize_t{img.height}, py::ssize_t{img.width}});
                               std::copy(img.gray.begin(), img.gray.end(), a.mutable_data());
                               return a;
                             })
      .def("to_png", [](const RasterImage& img) { return to_bytes(encode_png(img)); });

  m.def("load_image", &load_image, py::arg("path"), "Decode a PNG, PGM or PPM file; values in [0, 1].");
  m.def(
      "decode_image",
      [](const py::bytes& data) {
        const std::string s = data;
        return decode_image(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
      },
      py::arg("data"));
  m.def(
      "image_from_gray",
      [](const FloatArray& arr) {
        if (arr.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "expected a 2-D array");
        std::vector<float> v(arr.data(), arr.data() + arr.size());
        return RasterImage::from_gray(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)), std::move(v));
      },
      py::arg("gray"));

  m.def(
      "extract_features", [](const RasterImage& img) { return features_to_numpy(extract_features(img)); },
      py::arg("image"), "Returns (keypoints[n, 5] as x, y, sigma, orientation, response; descriptors[n, 128]).");

  m.def(
      "match_descriptors",
      [](const FloatArray& a, const FloatArray& b, double ratio) {
        const auto da = to_descriptors(a);
        const auto db = to_descriptors(b);
        std::vector<std::tuple<int, int, double>> out;
        for (const auto& mt : match_descriptors(da, db, make_config(ratio, 12, 3.0, 42))) {
          out.emplace_back(mt.index_a, mt.index_b, mt.distance);
        }
        return out;
      },
      py::arg("desc_a"), py::arg("desc_b"), py::arg("ratio") = 0.8);

  m.def(
      "verify_pair",
      [](const DoubleArray& ka, const DoubleArray& kb, const std::vector<std::pair<int, int>>& matches,
         int min_inliers, double threshold, std::uint64_t seed) -> py::object {
        std::vector<Match> ms;
        for (auto [i, j] : matches) ms.push_back({i, j, 0.0});
        const auto vp = verify_pair(to_keypoints(ka), to_keypoints(kb), ms,
                                    make_config(0.8, min_inliers, threshold, seed));
        if (!vp) return py::none();
        std::vector<std::pair<int, int>> inl;
        for (const auto& mt : vp->inlier_matches) inl.emplace_back(mt.index_a, mt.index_b);
        return py::make_tuple(vp->homography.matrix(), inl);
      },
      py::arg("keypoints_a"), py::arg("keypoints_b"), py::arg("matches"), py::arg("min_inliers") = 12,
      py::arg("threshold") = 3.0, py::arg("seed") = 42);

  m.def(
      "estimate_exact",
      [](const std::vector<std::pair<double, double>>& src, const std::vector<std::pair<double, double>>& dst) {
        return estimate_exact(to_quad(src, "src"), to_quad(dst, "dst")).matrix();
      },
      py::arg("src"), py::arg("dst"));
  m.def(
      "fit_homography", [](const DoubleArray& pairs) { return fit_homography(to_pairs(pairs)).matrix(); },
      py::arg("pairs"));
  m.def(
      "estimate_robust",
      [](const DoubleArray& pairs, double threshold, std::uint64_t seed) {
        const RobustEstimate r = estimate_robust(to_pairs(pairs), make_config(0.8, 12, threshold, seed));
        return py::make_tuple(r.homography.matrix(), r.inliers);
      },
      py::arg("pairs"), py::arg("threshold") = 3.0, py::arg("seed") = 42,
      "Returns (H, inlier indices).");
  m.def(
      "warp_point",
      [](const Eigen::Matrix3d& h, std::pair<double, double> p) {
        const Point2 q = warp_point(Homography(h), {p.first, p.second});
        return std::make_pair(q.x, q.y);
      },
      py::arg("h"), py::arg("point"));

  py::class_<Project>(m, "Project")
      .def(py::init<std::string, std::string>(), py::arg("id") = "proj-0001", py::arg("name") = "")
      .def_property_readonly("id", &Project::id)
      .def_property_readonly("name", &Project::name)
      .def(
          "add_image",
          [](Project& p, const std::string& path, int width, int height, std::optional<std::string> date,
             std::optional<std::string> title) {
            ImageRecord r;
            r.path = path;
            r.width = width;
            r.height = height;
            r.capture_date = std::move(date);
            r.title = std::move(title);
            return p.add_image(std::move(r)).id;
          },
          py::arg("path"), py::arg("width"), py::arg("height"), py::arg("capture_date") = py::none(),
          py::arg("title") = py::none())
      .def(
          "create_manual_link",
          [](Project& p, const std::string& a, const std::string& b,
             const std::vector<std::pair<double, double>>& qa, const std::vector<std::pair<double, double>>& qb) {
            return p.create_manual_link(a, b, to_quad(qa, "quad_a"), to_quad(qb, "quad_b")).id;
          },
          py::arg("a"), py::arg("b"), py::arg("quad_a"), py::arg("quad_b"))
      .def("delete_link", [](Project& p, const std::string& id) { p.delete_link(id); }, py::arg("link_id"))
      .def_property_readonly("image_ids",
                             [](const Project& p) {
                               std::vector<std::string> ids;
                               for (const auto& r : p.images()) ids.push_back(r.id);
                               return ids;
                             })
      .def_property_readonly("links",
                             [](const Project& p) {
                               py::list out;
                               for (const auto& l : p.links()) out.append(link_to_dict(l));
                               return out;
                             })
      .def("groups",
           [](const Project& p) {
             std::vector<std::vector<std::string>> out;
             for (const auto& g : p.groups()) out.push_back(g.members);
             return out;
           })
      .def("export", &export_project)
      .def_static(
          "load", [](const std::string& doc) { return import_project(doc); }, py::arg("document"))
      .def("__eq__", [](const Project& a, const Project& b) { return a == b; });

  m.def(
      "auto_group",
      [](Project& p, std::uint64_t seed, int threads) {
        FeatureCache cache;
        MatchConfig cfg;
        cfg.seed = seed;
        AutoGroupResult r;
        {
          py::gil_scoped_release release;
          r = auto_group(p, cache, cfg, threads);
        }
        std::vector<std::vector<std::string>> groups;
        for (const auto& g : r.groups) groups.push_back(g.members);
        return groups;
      },
      py::arg("project"), py::arg("seed") = 42, py::arg("threads") = 0,
      "Rebuild automatic links from image content; returns the groups.");

  m.def(
      "render_focus_view",
      [](const Project& p, const std::string& focus, std::optional<std::string> date, double scale) {
        RenderOptions o;
        o.date_filter = std::move(date);
        o.canvas_scale = scale;
        FocusView v;
        {
          py::gil_scoped_release release;
          v = render_focus_view(p, focus, o);
        }
        return to_bytes(encode_png(v.image));
      },
      py::arg("project"), py::arg("focus"), py::arg("date") = py::none(), py::arg("scale") = 1.0,
      "Composite the focus image's group in its perspective; returns PNG bytes.");
}
