#pragma once

// Automated evaluation inputs: Lighthouse category scores for P and A, and
// navigation timings for the diagnostic page-load time.

#include <cmath>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wuiq/error.hpp"

namespace wuiq::metrics {

inline bool unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

struct MetricScores {
  double performance = 0.0;
  double accessibility = 0.0;
  double usability = 0.0;

  friend bool operator==(const MetricScores&, const MetricScores&) = default;
};

inline void validate(const MetricScores& s) {
  IssueList issues;
  if (!unit_interval(s.performance)) issues.add("performance", "score must lie in [0,1]");
  if (!unit_interval(s.accessibility)) issues.add("accessibility", "score must lie in [0,1]");
  if (!unit_interval(s.usability)) issues.add("usability", "score must lie in [0,1]");
  issues.throw_if_any(ErrorCode::validation, "metric scores out of range");
}

struct TimingRecord {
  double link_opened_at = 0.0;          // seconds
  double content_downloaded_at = 0.0;   // seconds
};

inline double page_load_time(const TimingRecord& t) {
  if (!(t.content_downloaded_at >= t.link_opened_at))
    throw Error(ErrorCode::validation, "content downloaded before the link was opened", "content_downloaded_at");
  return t.content_downloaded_at - t.link_opened_at;
}

struct AuditReport {
  std::string source_url;
  std::string fetched_at;
  double performance_score = 0.0;
  double accessibility_score = 0.0;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

// Manually entered scores, used when no Lighthouse document is available.
inline AuditReport manual_audit(double performance, double accessibility, std::string source_url = "manual",
                                std::string fetched_at = {}) {
  IssueList issues;
  if (!unit_interval(performance)) issues.add("performance", "score must lie in [0,1]");
  if (!unit_interval(accessibility)) issues.add("accessibility", "score must lie in [0,1]");
  issues.throw_if_any(ErrorCode::validation, "manual audit scores out of range");
  return {std::move(source_url), std::move(fetched_at), performance, accessibility};
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& node, const char* key, const std::string& path) {
  if (!node.is_object() || !node.contains(key))
    throw Error(ErrorCode::parse, "Lighthouse report is missing " + path, path);
  return node.at(key);
}

inline double category_score(const nlohmann::json& doc, const char* category) {
  const std::string base = std::string("categories.") + category;
  const auto& categories = require(doc, "categories", "categories");
  const auto& cat = require(categories, category, base);
  const auto& score = require(cat, "score", base + ".score");
  if (!score.is_number())
    throw Error(ErrorCode::parse, base + ".score is not a number (audit did not complete?)", base + ".score");
  const double v = score.get<double>();
  if (!unit_interval(v)) throw Error(ErrorCode::parse, base + ".score is outside [0,1]", base + ".score");
  return v;
}

}  // namespace detail

// Reads a Lighthouse JSON result (v6+ layout). Only the performance and
// accessibility category scores, the audited URL and the fetch time are used.
inline AuditReport parse_lighthouse(std::string_view document) {
  auto doc = nlohmann::json::parse(document.begin(), document.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(ErrorCode::parse, "Lighthouse report is not a JSON object");

  AuditReport r;
  r.performance_score = detail::category_score(doc, "performance");
  r.accessibility_score = detail::category_score(doc, "accessibility");

  for (const char* key : {"finalDisplayedUrl", "finalUrl", "requestedUrl"}) {
    if (doc.contains(key) && doc[key].is_string()) {
      r.source_url = doc[key].get<std::string>();
      break;
    }
  }
  if (r.source_url.empty()) throw Error(ErrorCode::parse, "Lighthouse report is missing finalUrl", "finalUrl");

  const auto& fetch = detail::require(doc, "fetchTime", "fetchTime");
  if (!fetch.is_string()) throw Error(ErrorCode::parse, "fetchTime is not a string", "fetchTime");
  r.fetched_at = fetch.get<std::string>();
  return r;
}

}  // namespace wuiq::metrics
