#include <gtest/gtest.h>

#include <json.hpp>
#include <atomic>
#include <chrono>
#include <future>
#include <random>
#include <thread>

#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"
#include "vistalink/image.hpp"
#include "vistalink/project.hpp"
#include "vistalink/service.hpp"

#include <httplib.h>

using namespace vistalink;
using nlohmann::json;

namespace {

std::string png_bytes(const RasterImage& img) {
  const auto b = encode_png(img);
  return {b.begin(), b.end()};
}

json quad_json(double x0, double y0, double s) {
  return json::array({json::array({x0, y0}), json::array({x0 + s, y0}), json::array({x0 + s, y0 + s}),
                      json::array({x0, y0 + s})});
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { start(); }
  void TearDown() override { shutdown(); }

  void start(RasterLoader loader = {}) {
    ServiceConfig cfg;
    cfg.data_dir = dir_.path() / "data";
    cfg.job_threads = 1;
    cfg.loader = std::move(loader);
    service_ = std::make_unique<Service>(std::move(cfg));
    port_ = service_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->listen_after_bind(); });
    service_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(120, 0);
  }

  void shutdown() {
    if (!service_) return;
    service_->stop();
    if (thread_.joinable()) thread_.join();
    client_.reset();
    service_.reset();
  }

  httplib::Client& http() { return *client_; }

  std::string create_project(const std::string& name = "convent") {
    auto r = http().Post("/projects", json{{"name", name}}.dump(), "application/json");
    EXPECT_EQ(r->status, 201);
    return json::parse(r->body)["id"];
  }

  httplib::Result upload(const std::string& project, const std::string& content,
                         const std::string& date = "", const std::string& title = "") {
    httplib::MultipartFormDataItems items = {{"file", content, "photo.png", "image/png"}};
    if (!date.empty()) items.push_back({"capture_date", date, "", ""});
    if (!title.empty()) items.push_back({"title", title, "", ""});
    return http().Post("/projects/" + project + "/images", items);
  }

  std::string upload_id(const std::string& project, const RasterImage& img, const std::string& date = "") {
    auto r = upload(project, png_bytes(img), date);
    EXPECT_EQ(r->status, 201) << r->body;
    return json::parse(r->body)["id"];
  }

  httplib::Result post_link(const std::string& project, const std::string& a, const std::string& b,
                            const json& qa, const json& qb) {
    return http().Post("/projects/" + project + "/links",
                       json{{"a", a}, {"b", b}, {"quad_a", qa}, {"quad_b", qb}}.dump(), "application/json");
  }

  json wait_job(const std::string& project, const std::string& job) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(120);
    while (std::chrono::steady_clock::now() < deadline) {
      auto r = http().Get("/projects/" + project + "/jobs/" + job);
      EXPECT_EQ(r->status, 200);
      json j = json::parse(r->body);
      if (j["status"] == "done" || j["status"] == "failed") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ADD_FAILURE() << "job did not finish";
    return {};
  }

  static std::string error_code(const httplib::Result& r) { return json::parse(r->body)["error"]["code"]; }

  testing_support::TempDir dir_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, CreateThenGet) {
  auto r = http().Post("/projects", R"({"name": "Convento"})", "application/json");
  ASSERT_EQ(r->status, 201);
  const json created = json::parse(r->body);
  EXPECT_EQ(created["name"], "Convento");
  EXPECT_EQ(created["image_count"], 0);
  auto g = http().Get("/projects/" + created["id"].get<std::string>());
  ASSERT_EQ(g->status, 200);
  EXPECT_EQ(json::parse(g->body), created);
}

TEST_F(ServiceTest, UnknownProjectIs404) {
  auto r = http().Get("/projects/proj-9999");
  ASSERT_EQ(r->status, 404);
  EXPECT_EQ(error_code(r), "project_not_found");
  EXPECT_EQ(json::parse(r->body)["error"]["entity"], "proj-9999");
  EXPECT_EQ(http().Get("/projects/proj-9999/groups")->status, 404);
  EXPECT_EQ(http().Get("/projects/proj-9999/export")->status, 404);
}

TEST_F(ServiceTest, SameNameGivesDistinctIds) {
  const std::string a = create_project("same");
  const std::string b = create_project("same");
  EXPECT_NE(a, b);
  auto list = json::parse(http().Get("/projects")->body)["projects"];
  EXPECT_EQ(list.size(), 2u);
}

TEST_F(ServiceTest, MalformedCreateBody) {
  auto r = http().Post("/projects", "{oops", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(error_code(r), "malformed_document");
}

TEST_F(ServiceTest, UploadEchoesRecord) {
  const std::string p = create_project();
  auto r = upload(p, png_bytes(fixtures::textured_image(64, 48, 1)), "1870-01-01", "Fachada");
  ASSERT_EQ(r->status, 201) << r->body;
  const json rec = json::parse(r->body);
  EXPECT_EQ(rec["width"], 64);
  EXPECT_EQ(rec["height"], 48);
  EXPECT_EQ(rec["capture_date"], "1870-01-01");
  EXPECT_EQ(rec["title"], "Fachada");
  auto file = http().Get("/projects/" + p + "/images/" + rec["id"].get<std::string>() + "/file");
  ASSERT_EQ(file->status, 200);
  EXPECT_EQ(file->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(decode_image(std::span(reinterpret_cast<const std::uint8_t*>(file->body.data()), file->body.size())).width, 64);
}

TEST_F(ServiceTest, UploadMalformedDateIs400) {
  const std::string p = create_project();
  auto r = upload(p, png_bytes(fixtures::textured_image(32, 32, 1)), "187O");
  ASSERT_EQ(r->status, 400);
  EXPECT_EQ(error_code(r), "bad_date");
  EXPECT_EQ(json::parse(http().Get("/projects/" + p)->body)["image_count"], 0);
}

TEST_F(ServiceTest, SameFileTwiceGivesTwoRecords) {
  const std::string p = create_project();
  const std::string bytes = png_bytes(fixtures::textured_image(32, 32, 1));
  const std::string a = json::parse(upload(p, bytes)->body)["id"];
  const std::string b = json::parse(upload(p, bytes)->body)["id"];
  EXPECT_NE(a, b);
  EXPECT_EQ(json::parse(http().Get("/projects/" + p + "/images")->body)["images"].size(), 2u);
}

TEST_F(ServiceTest, UploadErrors) {
  const std::string p = create_project();
  auto r = upload(p, "GIF89a not really");
  ASSERT_EQ(r->status, 415);
  EXPECT_EQ(error_code(r), "unsupported_format");
  auto truncated = upload(p, png_bytes(fixtures::textured_image(32, 32, 1)).substr(0, 40));
  EXPECT_EQ(truncated->status, 415);
  httplib::MultipartFormDataItems no_file = {{"title", "x", "", ""}};
  EXPECT_EQ(http().Post("/projects/" + p + "/images", no_file)->status, 400);
  EXPECT_EQ(upload("proj-0404", "P5\n1 1\n255\n\x01")->status, 404);
}

TEST_F(ServiceTest, PgmUploadIsAccepted) {
  const std::string p = create_project();
  std::string pgm = "P5\n20 20\n255\n" + std::string(400, '\x40');
  auto r = upload(p, pgm);
  ASSERT_EQ(r->status, 201);
  auto file = http().Get("/projects/" + p + "/images/img-0001/file");
  EXPECT_EQ(file->body, pgm);
}

TEST_F(ServiceTest, AutogroupEmptyProject) {
  const std::string p = create_project();
  auto r = http().Post("/projects/" + p + "/autogroup");
  ASSERT_EQ(r->status, 202);
  const json job = wait_job(p, json::parse(r->body)["job"]);
  EXPECT_EQ(job["status"], "done");
  EXPECT_TRUE(job["result"]["groups"].empty());
  EXPECT_TRUE(job["result"]["verified_pairs"].empty());
}

TEST_F(ServiceTest, AutogroupIdenticalImages) {
  const std::string p = create_project();
  const RasterImage img = fixtures::textured_image(200, 150, 42);
  const std::string a = upload_id(p, img);
  const std::string b = upload_id(p, img);
  upload_id(p, fixtures::textured_image(200, 150, 43));
  auto r = http().Post("/projects/" + p + "/autogroup");
  ASSERT_EQ(r->status, 202);
  const json job = wait_job(p, json::parse(r->body)["job"]);
  ASSERT_EQ(job["status"], "done") << job.dump();
  ASSERT_EQ(job["result"]["verified_pairs"].size(), 1u);
  EXPECT_GE(job["result"]["verified_pairs"][0]["inliers"].get<int>(), 12);
  const json groups = json::parse(http().Get("/projects/" + p + "/groups")->body)["groups"];
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0]["members"], json::array({a, b}));
  const json links = json::parse(http().Get("/projects/" + p + "/links")->body)["links"];
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0]["origin"], "auto");
  EXPECT_EQ(http().Get("/projects/" + p + "/jobs/job-0099")->status, 404);
}

TEST_F(ServiceTest, SecondAutogroupWhileRunningIs409AndReadsStayLive) {
  shutdown();
  std::promise<void> release;
  std::shared_future<void> gate = release.get_future().share();
  auto entered = std::make_shared<std::atomic<bool>>(false);
  start([gate, entered](const ImageRecord& r) {
    *entered = true;
    gate.wait();
    return load_image(r.path);
  });
  const std::string p = create_project();
  upload_id(p, fixtures::textured_image(64, 64, 1));
  upload_id(p, fixtures::textured_image(64, 64, 2));
  auto first = http().Post("/projects/" + p + "/autogroup");
  ASSERT_EQ(first->status, 202);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  while (!*entered && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ASSERT_TRUE(*entered);
  auto second = http().Post("/projects/" + p + "/autogroup");
  EXPECT_EQ(second->status, 409);
  EXPECT_EQ(error_code(second), "job_running");
  // Reads are not blocked by the running job.
  EXPECT_EQ(http().Get("/projects/" + p)->status, 200);
  EXPECT_EQ(http().Get("/projects/" + p + "/groups")->status, 200);
  EXPECT_EQ(http().Get("/projects/" + p + "/export")->status, 200);
  const std::string job = json::parse(first->body)["job"];
  EXPECT_EQ(json::parse(http().Get("/projects/" + p + "/jobs/" + job)->body)["status"], "running");
  release.set_value();
  EXPECT_EQ(wait_job(p, job)["status"], "done");
  EXPECT_EQ(http().Post("/projects/" + p + "/autogroup")->status, 202);
}

TEST_F(ServiceTest, ManualLinkLifecycle) {
  const std::string p = create_project();
  const std::string a = upload_id(p, fixtures::textured_image(64, 64, 1));
  const std::string b = upload_id(p, fixtures::textured_image(64, 64, 2));
  auto r = post_link(p, a, b, quad_json(0, 0, 10), quad_json(5, 7, 10));
  ASSERT_EQ(r->status, 201) << r->body;
  const json link = json::parse(r->body);
  EXPECT_EQ(link["origin"], "manual");
  const std::vector<double> h = link["homography"];
  const std::vector<double> expect{1, 0, 5, 0, 1, 7, 0, 0, 1};
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(h[i], expect[i], 1e-12);

  auto dup = post_link(p, b, a, quad_json(0, 0, 10), quad_json(0, 0, 10));
  ASSERT_EQ(dup->status, 409);
  EXPECT_EQ(error_code(dup), "link_exists");

  const std::string id = link["id"];
  EXPECT_EQ(http().Delete("/projects/" + p + "/links/" + id)->status, 204);
  auto again = http().Delete("/projects/" + p + "/links/" + id);
  EXPECT_EQ(again->status, 404);
  EXPECT_EQ(error_code(again), "link_not_found");
  EXPECT_EQ(post_link(p, b, a, quad_json(0, 0, 10), quad_json(0, 0, 10))->status, 201);
}

TEST_F(ServiceTest, LinkErrors) {
  const std::string p = create_project();
  const std::string a = upload_id(p, fixtures::textured_image(64, 64, 1));
  const std::string b = upload_id(p, fixtures::textured_image(64, 64, 2));
  const json collinear = json::array({json::array({0, 0}), json::array({1, 1}), json::array({2, 2}), json::array({0, 3})});
  auto r = post_link(p, a, b, quad_json(0, 0, 10), collinear);
  ASSERT_EQ(r->status, 422);
  const json err = json::parse(r->body)["error"];
  EXPECT_EQ(err["code"], "degenerate_quad");
  EXPECT_EQ(err["entity"], "quad_b");
  EXPECT_EQ(err["points"], json::array({0, 1, 2}));

  auto self = post_link(p, a, a, quad_json(0, 0, 10), quad_json(0, 0, 10));
  EXPECT_EQ(self->status, 422);
  EXPECT_EQ(error_code(self), "self_link");
  auto missing = post_link(p, a, "img-0404", quad_json(0, 0, 10), quad_json(0, 0, 10));
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(error_code(missing), "image_not_found");
  auto shape = post_link(p, a, b, json::array({1, 2}), quad_json(0, 0, 10));
  EXPECT_EQ(shape->status, 400);
  EXPECT_EQ(http().Post("/projects/" + p + "/links", "[]", "application/json")->status, 400);
}

TEST_F(ServiceTest, RenderSingletonDecodesToFocus) {
  const std::string p = create_project();
  const RasterImage img = fixtures::textured_image(48, 40, 5);
  const std::string id = upload_id(p, img);
  auto r = http().Get("/projects/" + p + "/render?focus=" + id);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  const RgbaImage out = decode_png_rgba(std::span(reinterpret_cast<const std::uint8_t*>(r->body.data()), r->body.size()));
  ASSERT_EQ(out.width, 48);
  ASSERT_EQ(out.height, 40);
  const RasterImage stored = decode_image(encode_png(img));
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 48; ++x) {
      ASSERT_EQ(out.px(x, y)[0], static_cast<int>(stored.gray_at(x, y) * 255.0f + 0.5f));
      ASSERT_EQ(out.px(x, y)[3], 255);
    }
  }
}

TEST_F(ServiceTest, RenderDateFilterAndCaching) {
  const std::string p = create_project();
  const std::string f = upload_id(p, fixtures::textured_image(40, 40, 1), "1950-06-01");
  const std::string n = upload_id(p, fixtures::textured_image(40, 40, 2), "1900-06-01");
  ASSERT_EQ(post_link(p, n, f, quad_json(0, 0, 10), quad_json(20, 0, 10))->status, 201);

  auto full = http().Get("/projects/" + p + "/render?focus=" + f);
  ASSERT_EQ(full->status, 200);
  const auto decode = [](const std::string& s) {
    return decode_png_rgba(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(decode(full->body).width, 60);
  auto filtered = http().Get("/projects/" + p + "/render?focus=" + f + "&date=1899-12-31");
  ASSERT_EQ(filtered->status, 200);
  EXPECT_EQ(decode(filtered->body).width, 40);

  auto again = http().Get("/projects/" + p + "/render?focus=" + f);
  EXPECT_EQ(again->body, full->body);
  const std::string etag = full->get_header_value("ETag");
  EXPECT_FALSE(etag.empty());
  EXPECT_EQ(again->get_header_value("ETag"), etag);
  EXPECT_NE(filtered->get_header_value("ETag"), etag);
  auto cond = http().Get("/projects/" + p + "/render?focus=" + f, {{"If-None-Match", etag}});
  EXPECT_EQ(cond->status, 304);
  EXPECT_TRUE(cond->body.empty());

  // Any content change yields a new validator.
  upload_id(p, fixtures::textured_image(40, 40, 3));
  EXPECT_NE(http().Get("/projects/" + p + "/render?focus=" + f)->get_header_value("ETag"), etag);
}

TEST_F(ServiceTest, RenderErrors) {
  const std::string p = create_project();
  const std::string f = upload_id(p, fixtures::textured_image(40, 40, 1));
  auto unknown = http().Get("/projects/" + p + "/render?focus=img-0404");
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(error_code(unknown), "image_not_found");
  EXPECT_EQ(http().Get("/projects/" + p + "/render")->status, 400);
  EXPECT_EQ(http().Get("/projects/" + p + "/render?focus=" + f + "&scale=abc")->status, 400);
  EXPECT_EQ(http().Get("/projects/" + p + "/render?focus=" + f + "&scale=0")->status, 400);
  EXPECT_EQ(error_code(http().Get("/projects/" + p + "/render?focus=" + f + "&date=18-1-1")), "bad_date");
  auto half = http().Get("/projects/" + p + "/render?focus=" + f + "&scale=0.5");
  ASSERT_EQ(half->status, 200);
}

TEST_F(ServiceTest, ExportImportRoundTrip) {
  const std::string p = create_project("source");
  const std::string a = upload_id(p, fixtures::textured_image(40, 40, 1), "1870-01-01");
  const std::string b = upload_id(p, fixtures::textured_image(40, 40, 2));
  ASSERT_EQ(post_link(p, a, b, quad_json(0, 0, 10), quad_json(3, 1, 12))->status, 201);
  const std::string doc = http().Get("/projects/" + p + "/export")->body;

  const std::string q = create_project("target");
  auto r = http().Put("/projects/" + q + "/import", doc, "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(json::parse(r->body)["id"], q);
  const std::string back = http().Get("/projects/" + q + "/export")->body;
  Project left = import_project(doc), right = import_project(back);
  right.set_id(left.id());
  EXPECT_EQ(left, right);
}

TEST_F(ServiceTest, ImportErrorsAre422) {
  const std::string p = create_project();
  const std::string a = upload_id(p, fixtures::textured_image(40, 40, 1));
  const std::string b = upload_id(p, fixtures::textured_image(40, 40, 2));
  ASSERT_EQ(post_link(p, a, b, quad_json(0, 0, 10), quad_json(3, 1, 12))->status, 201);
  const json doc = json::parse(http().Get("/projects/" + p + "/export")->body);
  const std::string before = http().Get("/projects/" + p + "/export")->body;

  json bad = doc;
  bad["links"][0]["homography"][2] = bad["links"][0]["homography"][2].get<double>() + 0.01;
  auto r = http().Put("/projects/" + p + "/import", bad.dump(), "application/json");
  ASSERT_EQ(r->status, 422);
  EXPECT_EQ(error_code(r), "homography_inconsistent");
  EXPECT_NE(json::parse(r->body)["error"]["message"].get<std::string>().find("link-0001"), std::string::npos);

  json version = doc;
  version["format_version"] = "9";
  r = http().Put("/projects/" + p + "/import", version.dump(), "application/json");
  ASSERT_EQ(r->status, 422);
  EXPECT_EQ(error_code(r), "unsupported_version");

  json dangling = doc;
  dangling["links"][0]["a"] = "x9";
  r = http().Put("/projects/" + p + "/import", dangling.dump(), "application/json");
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(json::parse(r->body)["error"]["entity"], "x9");

  r = http().Put("/projects/" + p + "/import", "{", "application/json");
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(error_code(r), "malformed_document");
  EXPECT_EQ(http().Put("/projects/proj-0404/import", doc.dump(), "application/json")->status, 404);
  EXPECT_EQ(http().Get("/projects/" + p + "/export")->body, before);
}

TEST_F(ServiceTest, ProjectsSurviveRestart) {
  const std::string p = create_project("kept");
  const std::string a = upload_id(p, fixtures::textured_image(40, 40, 1));
  const std::string b = upload_id(p, fixtures::textured_image(40, 40, 2));
  ASSERT_EQ(post_link(p, a, b, quad_json(0, 0, 10), quad_json(3, 1, 12))->status, 201);
  const std::string doc = http().Get("/projects/" + p + "/export")->body;
  shutdown();
  start();
  EXPECT_EQ(http().Get("/projects/" + p + "/export")->body, doc);
  EXPECT_NE(create_project(), p);
}

TEST_F(ServiceTest, ConcurrentLinkStormKeepsInvariants) {
  const std::string p = create_project();
  std::vector<std::string> ids;
  for (int i = 0; i < 6; ++i) ids.push_back(upload_id(p, fixtures::textured_image(32, 32, i + 1)));

  std::atomic<int> server_errors{0};
  auto worker = [&](int seed) {
    httplib::Client c("127.0.0.1", port_);
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> pick(0, 5);
    for (int k = 0; k < 60; ++k) {
      const int i = pick(rng), j = pick(rng);
      if (rng() % 3 == 0) {
        auto links = json::parse(c.Get("/projects/" + p + "/links")->body)["links"];
        if (!links.empty()) {
          const std::string id = links[rng() % links.size()]["id"];
          auto r = c.Delete("/projects/" + p + "/links/" + id);
          if (r->status != 204 && r->status != 404) ++server_errors;
        }
      } else {
        auto r = c.Post("/projects/" + p + "/links",
                        json{{"a", ids[i]}, {"b", ids[j]}, {"quad_a", quad_json(0, 0, 10)}, {"quad_b", quad_json(i, j, 10)}}.dump(),
                        "application/json");
        if (r->status != 201 && r->status != 409 && r->status != 422) ++server_errors;
      }
      auto g = c.Get("/projects/" + p + "/groups");
      if (g->status != 200) ++server_errors;
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) threads.emplace_back(worker, t + 100);
  for (auto& t : threads) t.join();
  EXPECT_EQ(server_errors, 0);

  // Full audit: the stored document passes every import check and the groups
  // endpoint agrees with a recomputation from links.
  const std::string doc = http().Get("/projects/" + p + "/export")->body;
  Project audited;
  ASSERT_NO_THROW(audited = import_project(doc));
  EXPECT_NO_THROW(validate_project(audited));
  const json groups = json::parse(http().Get("/projects/" + p + "/groups")->body)["groups"];
  ASSERT_EQ(groups.size(), audited.groups().size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    EXPECT_EQ(groups[g]["members"].get<std::vector<std::string>>(), audited.groups()[g].members);
  }
  const auto on_disk = read_file(dir_.path() / "data" / "projects" / p / "project.json");
  EXPECT_EQ(std::string(on_disk.begin(), on_disk.end()), doc);
}

TEST(HttpStatus, EveryCodeMapsToOneStatus) {
  EXPECT_EQ(http_status_for(ErrorCode::ProjectNotFound), 404);
  EXPECT_EQ(http_status_for(ErrorCode::UnsupportedFormat), 415);
  EXPECT_EQ(http_status_for(ErrorCode::BadDate), 400);
  EXPECT_EQ(http_status_for(ErrorCode::LinkExists), 409);
  EXPECT_EQ(http_status_for(ErrorCode::JobRunning), 409);
  EXPECT_EQ(http_status_for(ErrorCode::DegenerateQuad), 422);
  for (int c = 0; c <= static_cast<int>(ErrorCode::JobNotFound); ++c) {
    const int s = http_status_for(static_cast<ErrorCode>(c));
    EXPECT_GE(s, 400);
    EXPECT_LT(s, 600);
    EXPECT_FALSE(to_string(static_cast<ErrorCode>(c)).empty());
  }
}

TEST(StaticUi, ServedFromUiDir) {
  testing_support::TempDir dir;
  std::filesystem::create_directories(dir.path() / "ui");
  const std::string html = "<!doctype html><title>annotator</title>";
  write_file(dir.path() / "ui" / "index.html", std::vector<std::uint8_t>(html.begin(), html.end()));
  ServiceConfig cfg;
  cfg.data_dir = dir.path() / "data";
  cfg.ui_dir = dir.path() / "ui";
  Service service(std::move(cfg));
  const int port = service.bind_to_any_port("127.0.0.1");
  std::thread t([&] { service.listen_after_bind(); });
  service.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  auto r = c.Get("/index.html");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, html);
  EXPECT_EQ(c.Get("/projects")->status, 200);
  service.stop();
  t.join();
}
