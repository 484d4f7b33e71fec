#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "wuiq/metrics.hpp"

using namespace wuiq;
using namespace wuiq::metrics;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(WUIQ_DATA_DIR) + "/fixtures/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json minimal_report(double p, double a) {
  return json{{"finalDisplayedUrl", "https://example.org/"},
              {"fetchTime", "2024-01-01T00:00:00.000Z"},
              {"categories", {{"performance", {{"score", p}}}, {"accessibility", {{"score", a}}}}}};
}

std::string parse_error_path(const std::string& doc) {
  try {
    (void)parse_lighthouse(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse);
    return e.path();
  }
  ADD_FAILURE() << "expected a parse error";
  return {};
}

}  // namespace

TEST(Lighthouse, ShippedReport) {
  const auto r = parse_lighthouse(fixture("lighthouse.json"));
  EXPECT_EQ(r.performance_score, 0.25);
  EXPECT_EQ(r.accessibility_score, 0.97);
  EXPECT_EQ(r.source_url, "https://portal.example.edu/home");
  EXPECT_EQ(r.fetched_at, "2024-03-01T08:15:00.000Z");
}

TEST(Lighthouse, PerfectScores) {
  const auto r = parse_lighthouse(minimal_report(1.0, 1.0).dump());
  EXPECT_EQ(r.performance_score, 1.0);
  EXPECT_EQ(r.accessibility_score, 1.0);
}

TEST(Lighthouse, UrlFallbacks) {
  auto doc = minimal_report(0.5, 0.5);
  doc.erase("finalDisplayedUrl");
  doc["finalUrl"] = "https://a/";
  doc["requestedUrl"] = "https://b/";
  EXPECT_EQ(parse_lighthouse(doc.dump()).source_url, "https://a/");
  doc.erase("finalUrl");
  EXPECT_EQ(parse_lighthouse(doc.dump()).source_url, "https://b/");
  doc.erase("requestedUrl");
  EXPECT_EQ(parse_error_path(doc.dump()), "finalUrl");
}

TEST(Lighthouse, ErrorsNameTheMissingPath) {
  auto doc = minimal_report(0.5, 0.5);
  doc["categories"].erase("accessibility");
  EXPECT_EQ(parse_error_path(doc.dump()), "categories.accessibility");

  doc = minimal_report(0.5, 0.5);
  doc["categories"]["performance"]["score"] = nullptr;
  EXPECT_EQ(parse_error_path(doc.dump()), "categories.performance.score");

  doc = minimal_report(1.2, 0.5);
  EXPECT_EQ(parse_error_path(doc.dump()), "categories.performance.score");

  doc = minimal_report(0.5, 0.5);
  doc.erase("categories");
  EXPECT_EQ(parse_error_path(doc.dump()), "categories");

  doc = minimal_report(0.5, 0.5);
  doc.erase("fetchTime");
  EXPECT_EQ(parse_error_path(doc.dump()), "fetchTime");

  EXPECT_EQ(parse_error_path("not json"), "");
  EXPECT_EQ(parse_error_path("[1,2]"), "");
}

TEST(Lighthouse, ArbitraryBytesNeverCrash) {
  std::mt19937_64 rng(9);
  const std::string base = minimal_report(0.3, 0.4).dump();
  for (int t = 0; t < 2000; ++t) {
    std::string doc = base;
    const int edits = 1 + t % 5;
    for (int e = 0; e < edits; ++e) doc[rng() % doc.size()] = static_cast<char>(rng() & 0xFF);
    if (t % 3 == 0) doc.resize(rng() % doc.size());
    try {
      const auto r = parse_lighthouse(doc);
      EXPECT_TRUE(unit_interval(r.performance_score));
      EXPECT_TRUE(unit_interval(r.accessibility_score));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse);
    }
  }
}

TEST(Timing, PageLoadTime) {
  EXPECT_NEAR(page_load_time({3.0, 5.2}), 2.2, 1e-12);
  EXPECT_EQ(page_load_time({4.0, 4.0}), 0.0);
  try {
    (void)page_load_time({5.0, 3.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
  }
}

TEST(ManualAudit, RangeChecked) {
  EXPECT_NO_THROW(manual_audit(0.0, 1.0));
  EXPECT_THROW(manual_audit(-0.1, 0.5), Error);
  EXPECT_THROW(manual_audit(0.5, 1.01), Error);
}

TEST(MetricScores, Validation) {
  EXPECT_NO_THROW(validate(MetricScores{0.25, 0.97, 0.6184}));
  try {
    validate(MetricScores{0.25, 2.0, -1.0});
    FAIL();
  } catch (const Error& e) {
    ASSERT_EQ(e.issues().size(), 2u);
    EXPECT_EQ(e.issues()[0].path, "accessibility");
    EXPECT_EQ(e.issues()[1].path, "usability");
  }
}
