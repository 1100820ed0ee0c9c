#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "vistalink/config.hpp"
#include "vistalink/features.hpp"
#include "vistalink/render.hpp"

namespace vistalink {

struct ServiceConfig {
  std::filesystem::path data_dir = "vistalink-data";
  /// Served at "/" when set (the annotation UI bundle).
  std::optional<std::filesystem::path> ui_dir;
  MatchConfig match;
  ScaleSpaceParams features;
  /// Threads used inside one autogroup job; 0 = hardware concurrency.
  int job_threads = 0;
  /// Overrides how rasters are read for features and renders (tests inject gates here).
  RasterLoader loader;
};

/// Which HTTP status an engine error maps to outside the import endpoint.
int http_status_for(ErrorCode code);

/// REST front end over the engine. One interchange document per project is
/// kept under `data_dir/projects/<id>/project.json`; uploads sit next to it.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Blocks serving requests until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vistalink
