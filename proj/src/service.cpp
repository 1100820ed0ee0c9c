#include "vistalink/service.hpp"

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "vistalink/json_io.hpp"
#include "vistalink/matching.hpp"

namespace vistalink {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kRenderCacheEntries = 64;

std::string zero_padded(std::string_view prefix, long long n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld", n);
  return std::string(prefix) + buf;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_atomically(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

json error_body(ErrorCode code, const std::string& message, const std::string& entity) {
  json e = {{"code", std::string(to_string(code))}, {"message", message}};
  if (!entity.empty()) e["entity"] = entity;
  return {{"error", e}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e, int status) {
  json body = error_body(e.code(), e.what(), e.entity());
  if (const auto* dq = dynamic_cast<const DegenerateQuadError*>(&e)) {
    body["error"]["points"] = dq->points();
  }
  send_json(res, status, body);
}

void send_error(httplib::Response& res, const Error& e) { send_error(res, e, http_status_for(e.code())); }

struct Job {
  std::string id;
  std::string status = "queued";  // queued | running | done | failed
  json result;
  json error;
};

struct ProjectEntry {
  mutable std::shared_mutex mutex;  // guards project (single writer, many readers)
  Project project;

  std::mutex jobs_mutex;
  std::map<std::string, Job> jobs;
  bool job_active = false;
  long long job_counter = 0;
};

json descriptor(const Project& p) {
  return {{"id", p.id()},
          {"name", p.name()},
          {"image_count", p.images().size()},
          {"link_count", p.links().size()},
          {"group_count", p.groups().size()}};
}

json groups_json(const std::vector<Group>& groups) {
  json out = json::array();
  for (const auto& g : groups) out.push_back(to_json(g));
  return out;
}

json job_json(const Job& job) {
  json j = {{"id", job.id}, {"status", job.status}};
  if (!job.result.is_null()) j["result"] = job.result;
  if (!job.error.is_null()) j["error"] = job.error;
  return j;
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProjectNotFound:
    case ErrorCode::ImageNotFound:
    case ErrorCode::LinkNotFound:
    case ErrorCode::JobNotFound:
      return 404;
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::UnreadableFile:
      return 415;
    case ErrorCode::LinkExists:
    case ErrorCode::JobRunning:
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::DegenerateQuad:
    case ErrorCode::SelfLink:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::DanglingReference:
    case ErrorCode::HomographyInconsistent:
    case ErrorCode::InvariantViolation:
    case ErrorCode::PointAtInfinity:
    case ErrorCode::EstimationFailed:
      return 422;
    case ErrorCode::InvalidArgument:
    case ErrorCode::BadDate:
    case ErrorCode::MalformedDocument:
    case ErrorCode::ImageTooSmall:
      return 400;
  }
  return 500;
}

struct Service::Impl {
  explicit Impl(ServiceConfig cfg)
      : config(std::move(cfg)),
        features(config.features, config.loader ? FeatureCache::Loader(config.loader) : FeatureCache::Loader{}) {
    fs::create_directories(projects_root());
    load_existing();
    worker = std::thread([this] { run_worker(); });
    register_routes();
  }

  ~Impl() {
    server.stop();
    {
      std::lock_guard lock(queue_mutex);
      shutting_down = true;
    }
    queue_cv.notify_all();
    if (worker.joinable()) worker.join();
  }

  ServiceConfig config;
  FeatureCache features;
  httplib::Server server;

  std::mutex registry_mutex;
  std::map<std::string, std::shared_ptr<ProjectEntry>> projects;
  long long project_counter = 0;

  std::mutex render_mutex;
  std::map<std::string, std::string> render_cache;
  std::deque<std::string> render_order;

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<std::function<void()>> queue;
  bool shutting_down = false;
  std::thread worker;

  fs::path projects_root() const { return config.data_dir / "projects"; }
  fs::path project_dir(const std::string& id) const { return projects_root() / id; }

  RasterImage load_raster(const ImageRecord& r) const {
    return config.loader ? config.loader(r) : load_image(r.path);
  }

  void load_existing() {
    for (const auto& dir : fs::directory_iterator(projects_root())) {
      const fs::path file = dir.path() / "project.json";
      if (!dir.is_directory() || !fs::exists(file)) continue;
      const auto bytes = read_file(file);
      auto entry = std::make_shared<ProjectEntry>();
      entry->project = import_project(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      const std::string id = entry->project.id();
      if (id.rfind("proj-", 0) == 0) {
        long long n = 0;
        auto [ptr, ec] = std::from_chars(id.data() + 5, id.data() + id.size(), n);
        if (ec == std::errc()) project_counter = std::max(project_counter, n);
      }
      projects[id] = std::move(entry);
    }
  }

  void persist(const Project& p) {
    fs::create_directories(project_dir(p.id()));
    write_atomically(project_dir(p.id()) / "project.json", export_project(p));
  }

  std::shared_ptr<ProjectEntry> entry_for(const std::string& id) {
    std::lock_guard lock(registry_mutex);
    auto it = projects.find(id);
    if (it == projects.end()) {
      throw Error(ErrorCode::ProjectNotFound, "unknown project \"" + id + "\"", id);
    }
    return it->second;
  }

  void run_worker() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(queue_mutex);
        queue_cv.wait(lock, [&] { return shutting_down || !queue.empty(); });
        if (shutting_down) return;
        task = std::move(queue.front());
        queue.pop_front();
      }
      task();
    }
  }

  void run_autogroup(const std::shared_ptr<ProjectEntry>& entry, const std::string& job_id) {
    {
      std::lock_guard lock(entry->jobs_mutex);
      entry->jobs[job_id].status = "running";
    }
    try {
      Project snapshot;
      {
        std::shared_lock lock(entry->mutex);
        snapshot = entry->project;
      }
      const AutoGroupResult computed =
          compute_auto_group(snapshot, features, config.match, config.job_threads);
      json result;
      {
        std::unique_lock lock(entry->mutex);
        entry->project.replace_auto_links(computed.verified_pairs);
        persist(entry->project);
        result["groups"] = groups_json(entry->project.groups());
      }
      json pairs = json::array();
      for (const auto& vp : computed.verified_pairs) pairs.push_back(to_json(vp));
      result["verified_pairs"] = std::move(pairs);
      std::lock_guard lock(entry->jobs_mutex);
      auto& job = entry->jobs[job_id];
      job.status = "done";
      job.result = std::move(result);
      entry->job_active = false;
    } catch (const Error& e) {
      std::lock_guard lock(entry->jobs_mutex);
      auto& job = entry->jobs[job_id];
      job.status = "failed";
      job.error = error_body(e.code(), e.what(), e.entity())["error"];
      entry->job_active = false;
    } catch (const std::exception& e) {
      std::lock_guard lock(entry->jobs_mutex);
      auto& job = entry->jobs[job_id];
      job.status = "failed";
      job.error = {{"code", "internal_error"}, {"message", e.what()}};
      entry->job_active = false;
    }
  }

  // Wraps a handler so engine errors become structured responses.
  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_json(res, 400, error_body(ErrorCode::MalformedDocument, e.what(), {}));
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", {{"code", "internal_error"}, {"message", e.what()}}}});
      }
    };
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedDocument, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  void register_routes() {
    if (config.ui_dir) server.set_mount_point("/", config.ui_dir->string());

    server.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = req.body.empty() ? json::object() : parse_body(req);
      if (!body.is_object()) throw Error(ErrorCode::MalformedDocument, "body must be an object");
      std::string name;
      if (auto it = body.find("name"); it != body.end()) {
        if (!it->is_string()) throw Error(ErrorCode::MalformedDocument, "name must be a string");
        name = it->get<std::string>();
      }
      auto entry = std::make_shared<ProjectEntry>();
      {
        std::lock_guard lock(registry_mutex);
        const std::string id = zero_padded("proj-", ++project_counter);
        entry->project = Project(id, name);
        persist(entry->project);
        projects[id] = entry;
      }
      send_json(res, 201, descriptor(entry->project));
    }));

    server.Get("/projects", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::vector<std::shared_ptr<ProjectEntry>> entries;
      {
        std::lock_guard lock(registry_mutex);
        for (auto& [id, e] : projects) entries.push_back(e);
      }
      json list = json::array();
      for (auto& e : entries) {
        std::shared_lock lock(e->mutex);
        list.push_back(descriptor(e->project));
      }
      send_json(res, 200, {{"projects", list}});
    }));

    server.Get(R"(/projects/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::shared_lock lock(entry->mutex);
      send_json(res, 200, descriptor(entry->project));
    }));

    server.Get(R"(/projects/([^/]+)/images)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::shared_lock lock(entry->mutex);
      json list = json::array();
      for (const auto& r : entry->project.images()) list.push_back(to_json(r));
      send_json(res, 200, {{"images", list}});
    }));

    server.Get(R"(/projects/([^/]+)/images/([^/]+)/file)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto entry = entry_for(req.matches[1]);
                 std::string path;
                 {
                   std::shared_lock lock(entry->mutex);
                   const ImageRecord* r = entry->project.find_image(req.matches[2].str());
                   if (!r) {
                     throw Error(ErrorCode::ImageNotFound, "unknown image id \"" + req.matches[2].str() + "\"",
                                 req.matches[2]);
                   }
                   path = r->path;
                 }
                 const auto bytes = read_file(path);
                 const bool png = detect_format(bytes) == ImageFormat::Png;
                 res.set_content(std::string(bytes.begin(), bytes.end()),
                                 png ? "image/png" : "image/x-portable-anymap");
               }));

    server.Post(R"(/projects/([^/]+)/images)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      if (!req.has_file("file")) throw Error(ErrorCode::InvalidArgument, "multipart field \"file\" is required");
      const auto& file = req.get_file_value("file");
      std::optional<std::string> date;
      if (req.has_file("capture_date")) {
        date = req.get_file_value("capture_date").content;
        if (date->empty()) date.reset();
      }
      if (date && !is_valid_iso_date(*date)) {
        throw Error(ErrorCode::BadDate, "capture_date must be an ISO date (YYYY-MM-DD), got \"" + *date + "\"");
      }
      std::optional<std::string> title;
      if (req.has_file("title")) title = req.get_file_value("title").content;

      const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(file.content.data()),
                                                file.content.size());
      const ImageFormat format = detect_format(bytes);
      if (format == ImageFormat::Unknown) {
        throw Error(ErrorCode::UnsupportedFormat, "unsupported image format (expected PNG, PGM or PPM)");
      }
      RasterImage raster;
      try {
        raster = decode_image(bytes);
      } catch (const Error& e) {
        throw Error(ErrorCode::UnsupportedFormat, e.what());
      }

      std::unique_lock lock(entry->mutex);
      ImageRecord record;
      record.id = entry->project.next_image_id();
      const fs::path dir = project_dir(entry->project.id()) / "images";
      fs::create_directories(dir);
      const fs::path stored =
          fs::absolute(dir / (record.id + (format == ImageFormat::Png ? ".png" : ".pnm")));
      write_file(stored, bytes);
      record.path = stored.string();
      record.width = raster.width;
      record.height = raster.height;
      record.capture_date = date;
      record.title = title;
      const ImageRecord& added = entry->project.add_image(std::move(record));
      persist(entry->project);
      send_json(res, 201, to_json(added));
    }));

    server.Post(R"(/projects/([^/]+)/autogroup)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::string job_id;
      {
        std::lock_guard lock(entry->jobs_mutex);
        if (entry->job_active) {
          throw Error(ErrorCode::JobRunning, "an autogroup job is already running for this project",
                      entry->project.id());
        }
        entry->job_active = true;
        job_id = zero_padded("job-", ++entry->job_counter);
        entry->jobs[job_id].id = job_id;
      }
      {
        std::lock_guard lock(queue_mutex);
        queue.push_back([this, entry, job_id] { run_autogroup(entry, job_id); });
      }
      queue_cv.notify_one();
      send_json(res, 202, {{"job", job_id}, {"status", "queued"}});
    }));

    server.Get(R"(/projects/([^/]+)/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::lock_guard lock(entry->jobs_mutex);
      auto it = entry->jobs.find(req.matches[2]);
      if (it == entry->jobs.end()) {
        throw Error(ErrorCode::JobNotFound, "unknown job \"" + req.matches[2].str() + "\"", req.matches[2]);
      }
      send_json(res, 200, job_json(it->second));
    }));

    server.Get(R"(/projects/([^/]+)/groups)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::shared_lock lock(entry->mutex);
      send_json(res, 200, {{"groups", groups_json(entry->project.groups())}});
    }));

    server.Get(R"(/projects/([^/]+)/links)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::shared_lock lock(entry->mutex);
      json list = json::array();
      for (const auto& l : entry->project.links()) list.push_back(to_json(l));
      send_json(res, 200, {{"links", list}});
    }));

    server.Post(R"(/projects/([^/]+)/links)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      const json body = parse_body(req);
      if (!body.is_object()) throw Error(ErrorCode::MalformedDocument, "body must be an object");
      for (const char* key : {"a", "b"}) {
        if (!body.contains(key) || !body[key].is_string()) {
          throw Error(ErrorCode::MalformedDocument, std::string("\"") + key + "\" must be an image id");
        }
      }
      for (const char* key : {"quad_a", "quad_b"}) {
        if (!body.contains(key)) throw Error(ErrorCode::MalformedDocument, std::string("\"") + key + "\" is required");
      }
      const Quad qa = quad_from_json(body["quad_a"], "quad_a");
      const Quad qb = quad_from_json(body["quad_b"], "quad_b");
      std::unique_lock lock(entry->mutex);
      const Link& link = entry->project.create_manual_link(body["a"], body["b"], qa, qb);
      json out = to_json(link);
      persist(entry->project);
      send_json(res, 201, out);
    }));

    server.Delete(R"(/projects/([^/]+)/links/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::unique_lock lock(entry->mutex);
      entry->project.delete_link(req.matches[2].str());
      persist(entry->project);
      res.status = 204;
    }));

    server.Get(R"(/projects/([^/]+)/render)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      if (!req.has_param("focus")) throw Error(ErrorCode::InvalidArgument, "query parameter \"focus\" is required");
      const std::string focus = req.get_param_value("focus");
      RenderOptions opts;
      if (req.has_param("date") && !req.get_param_value("date").empty()) {
        opts.date_filter = req.get_param_value("date");
      }
      std::string scale_text = "1";
      if (req.has_param("scale")) {
        scale_text = req.get_param_value("scale");
        const char* first = scale_text.data();
        const char* last = first + scale_text.size();
        auto [ptr, ec] = std::from_chars(first, last, opts.canvas_scale);
        if (ec != std::errc() || ptr != last) {
          throw Error(ErrorCode::InvalidArgument, "scale must be a number");
        }
      }
      opts.loader = [this](const ImageRecord& r) { return load_raster(r); };

      Project snapshot;
      {
        std::shared_lock lock(entry->mutex);
        snapshot = entry->project;
      }
      if (!snapshot.find_image(focus)) {
        throw Error(ErrorCode::ImageNotFound, "unknown image id \"" + focus + "\"", focus);
      }
      std::string key = export_project(snapshot);
      key += '\x1f' + focus + '\x1f' + opts.date_filter.value_or("") + '\x1f' + scale_text;
      const std::string etag = "\"" + hex64(fnv1a(key)) + hex64(fnv1a(key, 0x84222325cbf29ce4ULL)) + "\"";
      res.set_header("ETag", etag);
      res.set_header("Cache-Control", "no-cache");
      if (req.get_header_value("If-None-Match") == etag) {
        res.status = 304;
        return;
      }
      std::string png;
      {
        std::lock_guard lock(render_mutex);
        if (auto it = render_cache.find(etag); it != render_cache.end()) png = it->second;
      }
      if (png.empty()) {
        const FocusView view = render_focus_view(snapshot, focus, opts);
        const auto bytes = encode_png(view.image);
        png.assign(bytes.begin(), bytes.end());
        std::lock_guard lock(render_mutex);
        if (render_cache.emplace(etag, png).second) {
          render_order.push_back(etag);
          if (render_order.size() > kRenderCacheEntries) {
            render_cache.erase(render_order.front());
            render_order.pop_front();
          }
        }
      }
      res.status = 200;
      res.set_content(png, "image/png");
    }));

    server.Get(R"(/projects/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = entry_for(req.matches[1]);
      std::shared_lock lock(entry->mutex);
      res.status = 200;
      res.set_content(export_project(entry->project), "application/json");
    }));

    server.Put(R"(/projects/([^/]+)/import)", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        auto entry = entry_for(req.matches[1]);
        Project imported = import_project(req.body, config.match.min_inliers_auto_link);
        std::unique_lock lock(entry->mutex);
        imported.set_id(entry->project.id());
        entry->project = std::move(imported);
        persist(entry->project);
        send_json(res, 200, descriptor(entry->project));
      } catch (const Error& e) {
        send_error(res, e, e.code() == ErrorCode::ProjectNotFound ? 404 : 422);
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", {{"code", "internal_error"}, {"message", e.what()}}}});
      }
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() = default;

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() { impl_->server.stop(); }

}  // namespace vistalink
