// Batch front end over the registration engine.
//
//   vistalink ingest    <project-file> <image...> [--date <key>=<YYYY-MM-DD>] [--name N]
//   vistalink autogroup <project-file> [--seed N]
//   vistalink groups    <project-file>
//   vistalink link      <project-file> <a> <b> --quad-a x,y x,y x,y x,y --quad-b ...
//   vistalink unlink    <project-file> <link-id>
//   vistalink render    <project-file> <focus> [--date D] [--scale S] -o out.png
//   vistalink export    <project-file> [-o file]
//   vistalink import    <document|-> <project-file>
//
// Exit codes: 0 success, 1 internal error, 2 user error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include "vistalink/matching.hpp"
#include "vistalink/project.hpp"
#include "vistalink/render.hpp"

namespace fs = std::filesystem;
using namespace vistalink;

namespace {

constexpr int kExitUser = 2;
constexpr int kExitInternal = 1;

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Project load_project(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw UserError("cannot open project file " + file.string());
  return import_project(read_text(in));
}

void save_project(const fs::path& file, const Project& project) {
  const std::string doc = export_project(project);
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot write " + tmp.string());
    out << doc;
    if (!out) throw UserError("write failed: " + tmp.string());
  }
  fs::rename(tmp, file);
}

Quad parse_quad(const std::vector<std::string>& tokens, const std::string& name) {
  if (tokens.size() != 4) throw UserError(name + " needs exactly 4 points as x,y");
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto comma = tokens[i].find(',');
    if (comma == std::string::npos) throw UserError(name + ": point \"" + tokens[i] + "\" is not x,y");
    try {
      std::size_t used = 0;
      const std::string xs = tokens[i].substr(0, comma);
      const std::string ys = tokens[i].substr(comma + 1);
      q.pts[i].x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument("x");
      q.pts[i].y = std::stod(ys, &used);
      if (used != ys.size()) throw std::invalid_argument("y");
    } catch (const std::logic_error&) {
      throw UserError(name + ": point \"" + tokens[i] + "\" is not x,y");
    }
  }
  return q;
}

void print_groups(const std::vector<Group>& groups) {
  for (const auto& g : groups) {
    std::cout << g.id << ":";
    for (const auto& m : g.members) std::cout << ' ' << m;
    std::cout << '\n';
  }
}

int run_ingest(const fs::path& file, const std::vector<std::string>& images,
               const std::vector<std::string>& dates, const std::string& name) {
  std::map<std::string, std::string> date_for;
  for (const auto& d : dates) {
    const auto eq = d.rfind('=');
    if (eq == std::string::npos || eq == 0) throw UserError("--date expects <image>=<YYYY-MM-DD>, got \"" + d + "\"");
    const std::string value = d.substr(eq + 1);
    if (!is_valid_iso_date(value)) throw UserError("bad date \"" + value + "\" for " + d.substr(0, eq));
    date_for[d.substr(0, eq)] = value;
  }

  Project project;
  if (fs::exists(file)) {
    project = load_project(file);
  } else {
    project = Project("proj-0001", name.empty() ? file.stem().string() : name);
  }
  for (const auto& [key, value] : date_for) {
    const bool used = std::any_of(images.begin(), images.end(), [&](const std::string& p) {
      return p == key || fs::path(p).filename().string() == key;
    });
    if (!used) throw UserError("--date key \"" + key + "\" matches no ingested image");
  }

  std::vector<ImageRecord> pending;
  for (const auto& arg : images) {
    const RasterImage raster = load_image(arg);
    ImageRecord r;
    r.path = fs::weakly_canonical(fs::absolute(arg)).string();
    r.width = raster.width;
    r.height = raster.height;
    if (auto it = date_for.find(arg); it != date_for.end()) {
      r.capture_date = it->second;
    } else if (auto it2 = date_for.find(fs::path(arg).filename().string()); it2 != date_for.end()) {
      r.capture_date = it2->second;
    }
    const bool known = std::any_of(project.images().begin(), project.images().end(),
                                   [&](const ImageRecord& x) { return x.path == r.path; }) ||
                       std::any_of(pending.begin(), pending.end(),
                                   [&](const ImageRecord& x) { return x.path == r.path; });
    if (known) std::cerr << "warning: " << arg << " is already in the project; adding another record\n";
    pending.push_back(std::move(r));
  }
  for (auto& r : pending) {
    const ImageRecord& added = project.add_image(std::move(r));
    std::cout << added.id << ' ' << added.path << '\n';
  }
  save_project(file, project);
  return 0;
}

int run_autogroup(const fs::path& file, std::uint64_t seed, int threads) {
  Project project = load_project(file);
  MatchConfig cfg;
  cfg.seed = seed;
  FeatureCache cache;
  const auto result = auto_group(project, cache, cfg, threads);
  save_project(file, project);
  print_groups(project.groups());
  std::cerr << result.verified_pairs.size() << " verified pair(s)\n";
  return 0;
}

int run_link(const fs::path& file, const std::string& a, const std::string& b,
             const std::vector<std::string>& quad_a, const std::vector<std::string>& quad_b) {
  Project project = load_project(file);
  const Quad qa = parse_quad(quad_a, "--quad-a");
  const Quad qb = parse_quad(quad_b, "--quad-b");
  const Link& link = project.create_manual_link(a, b, qa, qb);
  std::cout << link.id;
  for (double v : link.homography.row_major()) std::cout << ' ' << v;
  std::cout << '\n';
  save_project(file, project);
  return 0;
}

int run_render(const fs::path& file, const std::string& focus, const std::string& date,
               double scale, const fs::path& out) {
  const Project project = load_project(file);
  RenderOptions opts;
  if (!date.empty()) opts.date_filter = date;
  opts.canvas_scale = scale;
  const FocusView view = render_focus_view(project, focus, opts);
  write_file(out, encode_png(view.image));
  std::cout << out.string() << ' ' << view.image.width << 'x' << view.image.height << '\n';
  return 0;
}

int run_export(const fs::path& file, const std::string& out) {
  const std::string doc = export_project(load_project(file));
  if (out.empty() || out == "-") {
    std::cout << doc;
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw UserError("cannot write " + out);
    f << doc;
  }
  return 0;
}

int run_import(const std::string& input, const fs::path& file) {
  std::string doc;
  if (input == "-") {
    doc = read_text(std::cin);
  } else {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw UserError("cannot open " + input);
    doc = read_text(in);
  }
  save_project(file, import_project(doc));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vistalink: group, link and align dated photographs"};
  app.require_subcommand(1);

  std::string project_file, doc_input, out_path, date, name, image_a, image_b, focus, link_id;
  std::vector<std::string> images, dates, quad_a, quad_b;
  std::uint64_t seed = 42;
  int threads = 0;
  double scale = 1.0;

  auto* ingest = app.add_subcommand("ingest", "add images to a project file (created if missing)");
  ingest->add_option("project", project_file, "project file")->required();
  ingest->add_option("images", images, "image files (PNG, PGM, PPM)")->required();
  ingest->add_option("--date", dates, "capture date as <image>=<YYYY-MM-DD>")
      ->allow_extra_args(false)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  ingest->add_option("--name", name, "project name for a new file");

  auto* autogroup = app.add_subcommand("autogroup", "match all pairs and rebuild automatic links");
  autogroup->add_option("project", project_file)->required();
  autogroup->add_option("--seed", seed, "RANSAC seed");
  autogroup->add_option("--threads", threads, "worker threads (0 = all cores)");

  auto* groups = app.add_subcommand("groups", "print the groups of a project");
  groups->add_option("project", project_file)->required();

  auto* link = app.add_subcommand("link", "create a manual link from two four-point outlines");
  link->add_option("project", project_file)->required();
  link->add_option("a", image_a)->required();
  link->add_option("b", image_b)->required();
  link->add_option("--quad-a", quad_a, "x,y x,y x,y x,y")->required()->expected(4);
  link->add_option("--quad-b", quad_b, "x,y x,y x,y x,y")->required()->expected(4);

  auto* unlink = app.add_subcommand("unlink", "delete a link");
  unlink->add_option("project", project_file)->required();
  unlink->add_option("link", link_id)->required();

  auto* render = app.add_subcommand("render", "render the focus view of an image as PNG");
  render->add_option("project", project_file)->required();
  render->add_option("focus", focus)->required();
  render->add_option("--date", date, "omit members captured after this date");
  render->add_option("--scale", scale, "canvas scale");
  render->add_option("-o,--output", out_path, "output PNG")->required();

  auto* exp = app.add_subcommand("export", "write the canonical interchange document");
  exp->add_option("project", project_file)->required();
  exp->add_option("-o,--output", out_path, "output file (default stdout)");

  auto* imp = app.add_subcommand("import", "validate a document and store it as a project file");
  imp->add_option("document", doc_input, "input document or - for stdin")->required();
  imp->add_option("project", project_file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUser;
  }

  try {
    if (*ingest) return run_ingest(project_file, images, dates, name);
    if (*autogroup) return run_autogroup(project_file, seed, threads);
    if (*groups) {
      print_groups(load_project(project_file).groups());
      return 0;
    }
    if (*link) return run_link(project_file, image_a, image_b, quad_a, quad_b);
    if (*unlink) {
      Project p = load_project(project_file);
      p.delete_link(link_id);
      save_project(project_file, p);
      return 0;
    }
    if (*render) return run_render(project_file, focus, date, scale, out_path);
    if (*exp) return run_export(project_file, out_path);
    if (*imp) return run_import(doc_input, project_file);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitUser;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
