#pragma once

// Batch file formats for surveys and expert judgments, and the JSON record
// schemas shared with the project store and the HTTP API.
//
// Survey batch (JSON):
//   {"format": "wuiq.surveys.v1",
//    "surveys": [{"respondent_id": "r001", "uq": [17 integers 1..5],
//                 "review_text": "...", "duration_months": 10.5,
//                 "submitted_at": "2022-08-01T00:00:00Z"}, ...]}
//
// Survey batch (CSV, first row is the header):
//   respondent_id,uq_1,...,uq_17,review_text,duration_months[,submitted_at]
//
// Expert batch (JSON):
//   {"format": "wuiq.experts.v1",
//    "criteria": ["performance", "accessibility", "usability"],
//    "experts": [{"expert_id": "e01", "role": "Fullstack Developer",
//                 "submitted_at": "...",
//                 "judgments": [{"first": "performance", "second": "accessibility",
//                                "value": 2, "favors": "performance"}, ...]}]}
//
// Each judgment covers one unordered pair. "value" is an integer 1..5 and
// "favors" names the more important criterion of the two, or "equal" (only
// valid with value 1). Every pair must appear; the diagonal and lower
// triangle are filled in on parse.

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wuiq/ahp.hpp"
#include "wuiq/error.hpp"
#include "wuiq/metrics.hpp"
#include "wuiq/usability.hpp"

namespace wuiq::batch {

using nlohmann::json;
using usability::SurveyResponse;
using ahp::ExpertJudgment;

inline constexpr std::string_view survey_format = "wuiq.surveys.v1";
inline constexpr std::string_view expert_format = "wuiq.experts.v1";

// ---- surveys -------------------------------------------------------------

inline json survey_to_json(const SurveyResponse& r) {
  return json{{"respondent_id", r.respondent_id},
              {"uq", r.uq},
              {"review_text", r.review_text},
              {"duration_months", r.duration_months},
              {"submitted_at", r.submitted_at}};
}

// Reads one survey record. Problems are appended to `issues` with `prefix`
// (e.g. "surveys[3].") on every path; the returned value is only meaningful
// if no issue was added.
inline SurveyResponse survey_from_json(const json& j, IssueList& issues, const std::string& prefix = {}) {
  SurveyResponse r;
  if (!j.is_object()) {
    issues.add(prefix.empty() ? "record" : prefix.substr(0, prefix.size() - 1), "record is not an object");
    return r;
  }
  if (auto it = j.find("respondent_id"); it != j.end() && it->is_string()) r.respondent_id = it->get<std::string>();
  else issues.add(prefix + "respondent_id", "respondent_id must be a string");

  auto uq = j.find("uq");
  if (uq == j.end() || !uq->is_array() || uq->size() != usability::item_count) {
    issues.add(prefix + "uq", "uq must be an array of 17 integers");
  } else {
    for (std::size_t i = 0; i < usability::item_count; ++i) {
      const auto& v = (*uq)[i];
      if (!v.is_number_integer()) {
        issues.add(prefix + usability::item_path(i), "Likert value must be an integer");
        continue;
      }
      const auto x = v.get<long long>();
      r.uq[i] = (x < -1000 || x > 1000) ? 0 : static_cast<int>(x);
    }
  }

  if (auto it = j.find("review_text"); it != j.end() && it->is_string()) r.review_text = it->get<std::string>();
  else issues.add(prefix + "review_text", "review text is mandatory");

  if (auto it = j.find("duration_months"); it != j.end() && it->is_number()) r.duration_months = *it;
  else issues.add(prefix + "duration_months", "duration_months must be a number");

  if (auto it = j.find("submitted_at"); it != j.end()) {
    if (it->is_string()) r.submitted_at = it->get<std::string>();
    else issues.add(prefix + "submitted_at", "submitted_at must be a string");
  }

  IssueList semantic;
  usability::check(r, semantic, prefix);
  for (const auto& i : semantic.items()) {
    bool dup = false;
    for (const auto& e : issues.items()) dup = dup || e.path == i.path;
    if (!dup) issues.add(i.path, i.message);
  }
  return r;
}

inline SurveyResponse survey_from_json(const json& j) {
  IssueList issues;
  auto r = survey_from_json(j, issues);
  issues.throw_if_any(ErrorCode::validation, "invalid survey record");
  return r;
}

namespace detail {

// RFC 4180 reader: quoted fields may contain commas, newlines and "" escapes.
inline std::vector<std::vector<std::string>> read_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::parse, "unterminated quoted field in CSV");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

inline bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

inline bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size() && std::isfinite(out);
}

inline void check_duplicates(const std::vector<SurveyResponse>& out, IssueList& issues) {
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].respondent_id.empty()) continue;
    auto [it, fresh] = seen.emplace(out[i].respondent_id, i);
    if (!fresh)
      issues.add("surveys[" + std::to_string(i) + "].respondent_id",
                 "duplicate respondent_id '" + out[i].respondent_id + "' (first seen in record " +
                     std::to_string(it->second) + ")");
  }
}

inline std::size_t first_non_space(std::string_view s) {
  std::size_t i = 0;
  if (s.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
  return i;
}

}  // namespace detail

inline std::vector<SurveyResponse> parse_survey_csv(std::string_view document) {
  auto s = detail::first_non_space(document);
  auto rows = detail::read_csv(document.substr(std::min(s, document.size())));
  std::vector<SurveyResponse> out;
  if (rows.empty()) return out;

  const auto& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  IssueList issues;
  std::vector<std::string> required{"respondent_id", "review_text", "duration_months"};
  for (std::size_t i = 0; i < usability::item_count; ++i) required.push_back(usability::item_path(i));
  for (const auto& name : required)
    if (!col.count(name)) issues.add("header." + name, "missing column " + name);
  issues.throw_if_any(ErrorCode::validation, "survey CSV header is incomplete");

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string prefix = "surveys[" + std::to_string(r - 1) + "].";
    if (row.size() != header.size()) {
      issues.add("line " + std::to_string(r + 1), "expected " + std::to_string(header.size()) + " fields, got " +
                                                      std::to_string(row.size()));
      continue;
    }
    SurveyResponse resp;
    resp.respondent_id = row[col["respondent_id"]];
    resp.review_text = row[col["review_text"]];
    if (col.count("submitted_at")) resp.submitted_at = row[col["submitted_at"]];
    for (std::size_t i = 0; i < usability::item_count; ++i) {
      long long v = 0;
      if (!detail::parse_int(row[col[usability::item_path(i)]], v)) {
        issues.add(prefix + usability::item_path(i), "Likert value must be an integer");
        resp.uq[i] = 1;
        continue;
      }
      resp.uq[i] = (v < -1000 || v > 1000) ? 0 : static_cast<int>(v);
    }
    if (!detail::parse_real(row[col["duration_months"]], resp.duration_months)) {
      issues.add(prefix + "duration_months", "duration_months must be a number");
      resp.duration_months = 0.0;
    }
    usability::check(resp, issues, prefix);
    out.push_back(std::move(resp));
  }
  detail::check_duplicates(out, issues);
  issues.throw_if_any(ErrorCode::validation, "survey batch has invalid records");
  return out;
}

inline std::vector<SurveyResponse> parse_survey_json(std::string_view document) {
  auto doc = json::parse(document.begin(), document.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::parse, "survey batch is not valid JSON");
  const json* records = nullptr;
  if (doc.is_array()) {
    records = &doc;
  } else if (doc.is_object() && doc.contains("surveys") && doc["surveys"].is_array()) {
    if (doc.contains("format") && doc["format"] != survey_format)
      throw Error(ErrorCode::parse, "unsupported survey batch format", "format");
    records = &doc["surveys"];
  } else {
    throw Error(ErrorCode::parse, "survey batch needs a \"surveys\" array", "surveys");
  }
  IssueList issues;
  std::vector<SurveyResponse> out;
  for (std::size_t i = 0; i < records->size(); ++i)
    out.push_back(survey_from_json((*records)[i], issues, "surveys[" + std::to_string(i) + "]."));
  detail::check_duplicates(out, issues);
  issues.throw_if_any(ErrorCode::validation, "survey batch has invalid records");
  return out;
}

// JSON when the document starts with '{' or '[', CSV otherwise.
inline std::vector<SurveyResponse> parse_survey_batch(std::string_view document) {
  const auto i = detail::first_non_space(document);
  if (i >= document.size()) return {};
  if (document[i] == '{' || document[i] == '[') return parse_survey_json(document);
  return parse_survey_csv(document);
}

inline std::string serialize_survey_batch(std::span<const SurveyResponse> surveys) {
  json records = json::array();
  for (const auto& s : surveys) records.push_back(survey_to_json(s));
  return json{{"format", survey_format}, {"surveys", records}}.dump(2) + "\n";
}

inline std::string serialize_survey_csv(std::span<const SurveyResponse> surveys) {
  std::string out = "respondent_id";
  for (std::size_t i = 0; i < usability::item_count; ++i) out += "," + usability::item_path(i);
  out += ",review_text,duration_months,submitted_at\n";
  for (const auto& s : surveys) {
    out += detail::csv_field(s.respondent_id);
    for (int v : s.uq) out += "," + std::to_string(v);
    out += "," + detail::csv_field(s.review_text);
    out += "," + json(s.duration_months).dump();
    out += "," + detail::csv_field(s.submitted_at) + "\n";
  }
  return out;
}

// ---- expert judgments ------------------------------------------------------

// Upper-triangle judgments in the batch/API schema for one matrix.
inline json judgments_to_json(const ahp::ComparisonMatrix& m) {
  json out = json::array();
  const auto& labels = m.labels();
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const double v = m(i, j);
      json p{{"first", labels[i]}, {"second", labels[j]}};
      if (v == 1.0) {
        p["value"] = 1;
        p["favors"] = "equal";
      } else if (v > 1.0) {
        p["value"] = static_cast<int>(std::lround(v));
        p["favors"] = labels[i];
      } else {
        p["value"] = static_cast<int>(std::lround(1.0 / v));
        p["favors"] = labels[j];
      }
      out.push_back(std::move(p));
    }
  return out;
}

// Rebuilds the reciprocal matrix from pairwise judgments over `criteria`.
inline ahp::ComparisonMatrix matrix_from_judgments(const json& judgments, const std::vector<std::string>& criteria,
                                                   IssueList& issues, const std::string& prefix = {}) {
  const std::size_t n = criteria.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[criteria[i]] = i;
  std::vector<double> upper(n * (n - 1) / 2, 0.0);
  auto slot = [n](std::size_t i, std::size_t j) { return i * n - i * (i + 1) / 2 + (j - i - 1); };

  if (!judgments.is_array()) {
    issues.add(prefix + "judgments", "judgments must be an array");
  } else {
    for (std::size_t k = 0; k < judgments.size(); ++k) {
      const auto& p = judgments[k];
      const std::string path = prefix + "judgments[" + std::to_string(k) + "]";
      if (!p.is_object() || !p.contains("first") || !p.contains("second") || !p.contains("value") ||
          !p.contains("favors") || !p["first"].is_string() || !p["second"].is_string() ||
          !p["favors"].is_string()) {
        issues.add(path, "judgment needs string first/second/favors and an integer value");
        continue;
      }
      const auto a = p["first"].get<std::string>();
      const auto b = p["second"].get<std::string>();
      const auto favors = p["favors"].get<std::string>();
      if (!index.count(a) || !index.count(b) || a == b) {
        issues.add(path, "judgment must name two distinct known criteria");
        continue;
      }
      if (!p["value"].is_number_integer() || p["value"].get<long long>() < 1 || p["value"].get<long long>() > 5) {
        issues.add(path + ".value", "pairwise value must be an integer in 1..5");
        continue;
      }
      const double value = static_cast<double>(p["value"].get<long long>());
      if (favors != a && favors != b && favors != "equal") {
        issues.add(path + ".favors", "favors must name one of the pair or be \"equal\"");
        continue;
      }
      if (favors == "equal" && value != 1.0) {
        issues.add(path + ".favors", "\"equal\" is only valid with value 1");
        continue;
      }
      std::size_t i = index[a], j = index[b];
      // ratio of criterion a over criterion b
      double ratio = value == 1.0 ? 1.0 : (favors == a ? value : 1.0 / value);
      if (i > j) {
        std::swap(i, j);
        ratio = 1.0 / ratio;
      }
      double& cell = upper[slot(i, j)];
      if (cell != 0.0 && cell != ratio) {
        issues.add(path, "contradicts an earlier judgment for " + criteria[i] + "/" + criteria[j]);
        continue;
      }
      cell = ratio;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (upper[slot(i, j)] == 0.0) {
        issues.add(prefix + "judgments", "missing judgment for pair " + criteria[i] + "/" + criteria[j]);
        upper[slot(i, j)] = 1.0;
      }
  return ahp::ComparisonMatrix::from_upper(n, upper, criteria);
}

inline ahp::ComparisonMatrix matrix_from_judgments(const json& judgments, const std::vector<std::string>& criteria) {
  IssueList issues;
  auto m = matrix_from_judgments(judgments, criteria, issues);
  issues.throw_if_any(ErrorCode::validation, "invalid pairwise judgments");
  return m;
}

inline json expert_to_json(const ExpertJudgment& e) {
  return json{{"expert_id", e.expert_id},
              {"role", e.role},
              {"submitted_at", e.submitted_at},
              {"judgments", judgments_to_json(e.matrix)}};
}

inline ExpertJudgment expert_from_json(const json& j, const std::vector<std::string>& criteria, IssueList& issues,
                                       const std::string& prefix = {}) {
  ExpertJudgment e{{}, {}, ahp::ComparisonMatrix::ones(criteria.size(), criteria), {}};
  if (!j.is_object()) {
    issues.add(prefix.empty() ? "record" : prefix.substr(0, prefix.size() - 1), "record is not an object");
    return e;
  }
  if (auto it = j.find("expert_id"); it != j.end() && it->is_string() && !it->get<std::string>().empty())
    e.expert_id = it->get<std::string>();
  else issues.add(prefix + "expert_id", "expert_id must be a non-empty string");
  if (auto it = j.find("role"); it != j.end()) {
    if (it->is_string()) e.role = it->get<std::string>();
    else issues.add(prefix + "role", "role must be a string");
  }
  if (auto it = j.find("submitted_at"); it != j.end()) {
    if (it->is_string()) e.submitted_at = it->get<std::string>();
    else issues.add(prefix + "submitted_at", "submitted_at must be a string");
  }
  e.matrix = matrix_from_judgments(j.contains("judgments") ? j["judgments"] : json(), criteria, issues, prefix);
  return e;
}

inline ExpertJudgment expert_from_json(const json& j, const std::vector<std::string>& criteria) {
  IssueList issues;
  auto e = expert_from_json(j, criteria, issues);
  issues.throw_if_any(ErrorCode::validation, "invalid expert judgment");
  return e;
}

inline std::vector<ExpertJudgment> parse_expert_batch(std::string_view document) {
  auto doc = json::parse(document.begin(), document.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::parse, "expert batch is not a JSON object");
  if (doc.contains("format") && doc["format"] != expert_format)
    throw Error(ErrorCode::parse, "unsupported expert batch format", "format");

  std::vector<std::string> criteria = ahp::default_criteria();
  if (doc.contains("criteria")) {
    const auto& c = doc["criteria"];
    std::set<std::string> uniq;
    criteria.clear();
    if (!c.is_array() || c.size() < 2 || c.size() > ahp::random_index_table.size())
      throw Error(ErrorCode::validation, "criteria must list 2..10 names", "criteria");
    for (const auto& name : c) {
      if (!name.is_string() || !uniq.insert(name.get<std::string>()).second)
        throw Error(ErrorCode::validation, "criteria must be distinct strings", "criteria");
      criteria.push_back(name.get<std::string>());
    }
  }
  if (!doc.contains("experts") || !doc["experts"].is_array())
    throw Error(ErrorCode::parse, "expert batch needs an \"experts\" array", "experts");

  IssueList issues;
  std::vector<ExpertJudgment> out;
  std::map<std::string, std::size_t> seen;
  const auto& experts = doc["experts"];
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const std::string prefix = "experts[" + std::to_string(i) + "].";
    out.push_back(expert_from_json(experts[i], criteria, issues, prefix));
    const auto& id = out.back().expert_id;
    if (!id.empty() && !seen.emplace(id, i).second)
      issues.add(prefix + "expert_id", "duplicate expert_id '" + id + "'");
  }
  issues.throw_if_any(ErrorCode::validation, "expert batch has invalid records");
  return out;
}

inline std::string serialize_expert_batch(std::span<const ExpertJudgment> experts) {
  json records = json::array();
  std::vector<std::string> criteria = experts.empty() ? ahp::default_criteria() : experts.front().matrix.labels();
  for (const auto& e : experts) records.push_back(expert_to_json(e));
  return json{{"format", expert_format}, {"criteria", criteria}, {"experts", records}}.dump(2) + "\n";
}

// ---- audits ----------------------------------------------------------------

inline json audit_to_json(const metrics::AuditReport& a) {
  return json{{"source_url", a.source_url},
              {"fetched_at", a.fetched_at},
              {"performance_score", a.performance_score},
              {"accessibility_score", a.accessibility_score}};
}

inline metrics::AuditReport audit_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "audit record is not an object");
  try {
    auto a = metrics::manual_audit(j.at("performance_score").get<double>(), j.at("accessibility_score").get<double>(),
                                   j.at("source_url").get<std::string>(), j.at("fetched_at").get<std::string>());
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed audit record: ") + e.what());
  }
}

}  // namespace wuiq::batch
