#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "wuiq/service.hpp"

using namespace wuiq;
namespace fs = std::filesystem;
using namespace wuiq::service;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(WUIQ_DATA_DIR) + "/fixtures/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Service make_service(const oracle::TempDir& dir, std::string token = {}) {
  return Service(pipeline::Engine(store::ProjectStore::init(dir.path() / "proj", store::Manifest{"portal"}), {},
                                  pipeline::fixed_clock("2024-03-10T12:00:00Z")),
                 std::move(token));
}

HttpRequest post(std::string path, const json& body) { return {"POST", std::move(path), {}, body.dump(), {}}; }
HttpRequest get(std::string path, std::map<std::string, std::string> query = {}) {
  return {"GET", std::move(path), std::move(query), "", {}};
}

json survey(const std::string& id) {
  return json{{"respondent_id", id},
              {"uq", {4, 2, 4, 2, 4, 2, 4, 2, 4, 2, 4, 4, 4, 4, 4, 4, 4}},
              {"review_text", "easy and fast"},
              {"duration_months", 3}};
}

json consistent_judgments() {
  return json::array({{{"first", "performance"}, {"second", "accessibility"}, {"value", 2}, {"favors", "performance"}},
                      {{"first", "performance"}, {"second", "usability"}, {"value", 2}, {"favors", "performance"}},
                      {{"first", "accessibility"}, {"second", "usability"}, {"value", 1}, {"favors", "equal"}}});
}

}  // namespace

TEST(Service, StatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::validation), 400);
  EXPECT_EQ(http_status(ErrorCode::parse), 400);
  EXPECT_EQ(http_status(ErrorCode::missing_baseline), 400);
  EXPECT_EQ(http_status(ErrorCode::enumeration_cap), 400);
  EXPECT_EQ(http_status(ErrorCode::not_found), 404);
  EXPECT_EQ(http_status(ErrorCode::weights_frozen), 409);
  EXPECT_EQ(http_status(ErrorCode::unauthorized), 401);
  EXPECT_EQ(http_status(ErrorCode::store), 500);
}

TEST(Service, PreviewConsistentMatrix) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  const auto res = s.handle(post("/api/experts/preview", json{{"judgments", consistent_judgments()}}));
  ASSERT_EQ(res.status, 200);
  const auto j = res.json_body();
  EXPECT_NEAR(j["cr"].get<double>(), 0.0, 1e-12);
  EXPECT_TRUE(j["accepted"].get<bool>());
  EXPECT_EQ(j["criteria"].size(), 3u);
}

TEST(Service, InvalidSurveyNamesTheField) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  auto bad = survey("r1");
  bad["uq"][4] = 0;
  const auto res = s.handle(post("/api/surveys", bad));
  EXPECT_EQ(res.status, 400);
  const auto err = res.json_body()["error"];
  EXPECT_EQ(err["code"], "validation_error");
  ASSERT_FALSE(err["issues"].empty());
  EXPECT_EQ(err["issues"][0]["path"], "uq_5");
  EXPECT_EQ(s.handle(post("/api/surveys", survey("r1"))).status, 201);
}

TEST(Service, SurveyResponseIncludesScore) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  const auto res = s.handle(post("/api/surveys", survey("r1")));
  ASSERT_EQ(res.status, 201);
  const auto j = res.json_body();
  EXPECT_EQ(j["total"], 1);
  EXPECT_GT(j["sentiment"].get<double>(), 0.5);
  EXPECT_EQ(s.handle(post("/api/surveys", survey("r1"))).status, 400);
}

TEST(Service, WeightsLifecycle) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  EXPECT_EQ(s.handle(get("/api/weights")).status, 404);
  EXPECT_EQ(s.handle(post("/api/weights", json::object())).status, 400);  // no experts yet
  const auto added = s.handle(post("/api/experts", json{{"expert_id", "e1"}, {"judgments", consistent_judgments()}}));
  ASSERT_EQ(added.status, 201);
  EXPECT_TRUE(added.json_body()["accepted"].get<bool>());
  EXPECT_EQ(s.handle(post("/api/weights", json::object())).status, 201);
  const auto again = s.handle(post("/api/weights", json::object()));
  EXPECT_EQ(again.status, 409);
  EXPECT_EQ(again.json_body()["error"]["code"], "weights_frozen");
  EXPECT_EQ(s.handle(post("/api/weights", json{{"override", true}})).status, 201);
  const auto w = s.handle(get("/api/weights"));
  EXPECT_EQ(w.status, 200);
  EXPECT_NEAR(w.json_body()["weights"][0].get<double>(), 0.5, 1e-12);
}

TEST(Service, IterationsGolden) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  ASSERT_EQ(s.handle(post("/api/weights", json{{"weights", {0.36, 0.27, 0.37}}})).status, 201);
  const auto res = s.handle(post("/api/iterations", json{{"performance", 0.25},
                                                         {"accessibility", 0.97},
                                                         {"usability", 0.6184},
                                                         {"link_opened_at", 10.0},
                                                         {"content_downloaded_at", 12.5}}));
  ASSERT_EQ(res.status, 201);
  const auto j = res.json_body();
  EXPECT_NEAR(j["wuiq"].get<double>(), 0.580708, 1e-9);
  EXPECT_EQ(j["percent"], "58%");
  EXPECT_DOUBLE_EQ(j["load_time_seconds"].get<double>(), 2.5);
  const auto list = s.handle(get("/api/iterations")).json_body();
  ASSERT_EQ(list["iterations"].size(), 1u);
  EXPECT_EQ(list["iterations"][0]["grade"], "requires improvement");

  const auto half = s.handle(post("/api/iterations", json{{"performance", 0.5}, {"link_opened_at", 1.0}}));
  EXPECT_EQ(half.status, 400);
  EXPECT_EQ(half.json_body()["error"]["path"], "content_downloaded_at");
  EXPECT_EQ(s.handle(post("/api/iterations", json{{"performance", "high"}})).json_body()["error"]["path"],
            "performance");
}

TEST(Service, IterationsWithoutBaseline) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  const auto res = s.handle(post("/api/iterations", json{{"performance", 0.5}, {"accessibility", 0.5}, {"usability", 0.5}}));
  EXPECT_EQ(res.status, 400);
  EXPECT_EQ(res.json_body()["error"]["code"], "missing_baseline");
}

TEST(Service, LighthouseUpload) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  const auto res = s.handle({"POST", "/api/lighthouse", {}, fixture("lighthouse.json"), {}});
  ASSERT_EQ(res.status, 201);
  EXPECT_EQ(res.json_body()["performance_score"], 0.25);
  const auto bad = s.handle({"POST", "/api/lighthouse", {}, "{\"categories\":{}}", {}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.json_body()["error"]["code"], "parse_error");
}

TEST(Service, SegmentsAndExplanations) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  EXPECT_EQ(s.handle(get("/api/segments/latest")).status, 404);
  EXPECT_EQ(s.handle(get("/api/segments/latest/explanations", {{"cluster", "0"}})).status, 404);
  s.engine().ingest_surveys(fixture("surveys.json"));
  EXPECT_EQ(s.handle(post("/api/segments", json{{"k", 0}})).status, 400);
  EXPECT_EQ(s.handle(post("/api/segments", json{{"k", "three"}})).status, 400);
  const auto seg = s.handle(post("/api/segments", json{{"k", "auto"}, {"seed", 7}}));
  ASSERT_EQ(seg.status, 201);
  EXPECT_EQ(seg.json_body()["seed"], 7);
  const auto fixed = s.handle(post("/api/segments", json{{"k", 3}}));
  ASSERT_EQ(fixed.status, 201);
  EXPECT_EQ(fixed.json_body()["k"], 3);
  EXPECT_EQ(s.handle(get("/api/segments/latest")).json_body()["k"], 3);

  const auto ex = s.handle(get("/api/segments/latest/explanations", {{"cluster", "2"}, {"mode", "soft"}}));
  ASSERT_EQ(ex.status, 200);
  EXPECT_EQ(ex.json_body()["mode"], "soft");
  EXPECT_EQ(ex.json_body()["rows"].size(), 40u * 6u);
  EXPECT_FALSE(fs::exists(dir.path() / "proj" / "exports" / "attributions_cluster_2.csv"));
  EXPECT_EQ(s.handle(get("/api/segments/latest/explanations", {{"cluster", "3"}})).status, 400);
  EXPECT_EQ(s.handle(get("/api/segments/latest/explanations", {{"cluster", "-1"}})).status, 400);
  EXPECT_EQ(s.handle(get("/api/segments/latest/explanations")).status, 400);
  EXPECT_EQ(s.handle(get("/api/segments/latest/explanations", {{"cluster", "0"}, {"mode", "x"}})).status, 400);
}

TEST(Service, Report) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  const auto r = s.handle(get("/api/report"));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.json_body()["project_id"], "portal");
}

TEST(Service, TokenIsRequiredWhenConfigured) {
  oracle::TempDir dir;
  auto s = make_service(dir, "s3cret");
  const auto denied = s.handle(get("/api/report"));
  EXPECT_EQ(denied.status, 401);
  EXPECT_EQ(denied.json_body()["error"]["code"], "unauthorized");
  auto req = get("/api/report");
  req.headers[token_header] = "wrong";
  EXPECT_EQ(s.handle(req).status, 401);
  req.headers[token_header] = "s3cret";
  EXPECT_EQ(s.handle(req).status, 200);
}

TEST(Service, IdempotencyKeyReplaysResponse) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  auto req = post("/api/surveys", survey("r1"));
  req.headers[idempotency_header] = "abc";
  const auto first = s.handle(req);
  const auto second = s.handle(req);
  EXPECT_EQ(first.status, 201);
  EXPECT_EQ(second.status, 201);
  EXPECT_EQ(first.body, second.body);
  EXPECT_EQ(s.engine().store().surveys().records.size(), 1u);
  req.headers[idempotency_header] = "def";
  EXPECT_EQ(s.handle(req).status, 400);
}

TEST(Service, UnknownRoutesAndBadBodies) {
  oracle::TempDir dir;
  auto s = make_service(dir);
  EXPECT_EQ(s.handle(get("/api/nothing")).status, 404);
  EXPECT_EQ(s.handle({"DELETE", "/api/weights", {}, "", {}}).status, 404);
  const auto bad = s.handle({"POST", "/api/surveys", {}, "{oops", {}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.json_body()["error"]["code"], "parse_error");
  EXPECT_TRUE(bad.json_body()["error"].contains("issues"));
}

TEST(Service, ParseListen) {
  EXPECT_EQ(parse_listen("8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_listen("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_EQ(parse_listen(":0"), (std::pair<std::string, int>{"127.0.0.1", 0}));
  EXPECT_THROW(parse_listen("host:port"), Error);
  EXPECT_THROW(parse_listen("70000"), Error);
}

TEST(Service, OverRealSocket) {
  oracle::TempDir dir;
  auto s = make_service(dir, "tok");
  httplib::Server server;
  mount(server, s);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const httplib::Headers auth{{"X-WUIQ-Token", "tok"}};
  auto r = client.Get("/api/weights", auth);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  r = client.Post("/api/weights", auth, R"({"weights":[0.36,0.27,0.37]})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  r = client.Post("/api/iterations", auth, R"({"performance":0.25,"accessibility":0.97,"usability":0.6184})",
                  "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  EXPECT_EQ(json::parse(r->body)["percent"], "58%");
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
  r = client.Get("/api/iterations");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 401);

  server.stop();
  t.join();
}
