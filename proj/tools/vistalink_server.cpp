#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "vistalink/service.hpp"

namespace {
vistalink::Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vistalink-server: REST service for grouping, linking and rendering photographs"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "vistalink-data";
  std::string ui_dir;
  std::uint64_t seed = 42;
  int threads = 0;
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "bind port");
  app.add_option("--data-dir", data_dir, "directory holding one interchange document per project");
  app.add_option("--seed", seed, "RANSAC seed used by autogroup jobs");
  app.add_option("--ui-dir", ui_dir, "static UI bundle served at /");
  app.add_option("--threads", threads, "threads per autogroup job (0 = all cores)");
  CLI11_PARSE(app, argc, argv);

  try {
    vistalink::ServiceConfig cfg;
    cfg.data_dir = data_dir;
    cfg.match.seed = seed;
    cfg.job_threads = threads;
    if (!ui_dir.empty()) cfg.ui_dir = ui_dir;
    vistalink::Service service(std::move(cfg));
    g_service = &service;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cerr << "listening on " << host << ":" << port << '\n';
    if (!service.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ":" << port << '\n';
      return 2;
    }
    g_service = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
