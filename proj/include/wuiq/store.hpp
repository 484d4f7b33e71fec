#pragma once

// On-disk project store.
//
//   <root>/manifest.json        project id, criteria, configuration, audit trail
//   <root>/surveys.jsonl        append-only, one survey record per line
//   <root>/experts.jsonl        append-only, one expert judgment per line
//   <root>/audits.jsonl         append-only, one audit report per line
//   <root>/derived/<name>.json  computed artifacts (weights, history, segments)
//   <root>/exports/<file>       CSV / SVG exports
//
// Every file except the logs is replaced by writing a temporary file and
// renaming it over the target. A log append rewrites the complete records
// plus the new one the same way, so an interrupted write leaves either the
// old or the new log. A trailing partial line (from a crash of some other
// writer) is reported on load and dropped on the next append.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wuiq/ahp.hpp"
#include "wuiq/batch.hpp"
#include "wuiq/error.hpp"

namespace wuiq::store {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::string_view manifest_format = "wuiq-project";
inline constexpr int manifest_version = 1;

struct Manifest {
  std::string project_id;
  std::vector<std::string> criteria = ahp::default_criteria();
  json config = json::object();
  json audit = json::array();

  json to_json() const {
    return json{{"format", manifest_format}, {"version", manifest_version}, {"project_id", project_id},
                {"criteria", criteria},      {"config", config},           {"audit", audit}};
  }

  static Manifest from_json(const json& j) {
    if (!j.is_object() || j.value("format", std::string()) != manifest_format)
      throw Error(ErrorCode::store, "manifest.json is not a project manifest");
    if (!j.contains("version") || !j["version"].is_number_integer())
      throw Error(ErrorCode::store, "manifest.json has no version");
    if (j["version"].get<int>() != manifest_version)
      throw Error(ErrorCode::store, "manifest version " + std::to_string(j["version"].get<int>()) +
                                        " is not supported (expected " + std::to_string(manifest_version) + ")");
    Manifest m;
    try {
      m.project_id = j.at("project_id").get<std::string>();
      m.criteria = j.at("criteria").get<std::vector<std::string>>();
      m.config = j.value("config", json::object());
      m.audit = j.value("audit", json::array());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::store, std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

template <class T>
struct LogContents {
  std::vector<T> records;
  bool truncated = false;        // a trailing partial record was skipped
  std::size_t complete_bytes = 0;
  std::string truncation_detail;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::store, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_atomic(const fs::path& p, std::string_view content) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::store, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::store, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw Error(ErrorCode::store, "cannot replace " + p.string() + ": " + ec.message());
}

struct RawLog {
  std::vector<json> records;
  bool truncated = false;
  std::size_t complete_bytes = 0;
  std::string detail;
};

// Parses a JSON-lines log. Only the final line may be incomplete.
inline RawLog read_log(const fs::path& p) {
  RawLog log;
  if (!fs::exists(p)) return log;
  const std::string text = read_file(p);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string_view line(text.data() + pos, (terminated ? nl : text.size()) - pos);
    auto j = json::parse(line.begin(), line.end(), nullptr, false);
    if (!terminated) {
      log.truncated = true;
      log.detail = p.filename().string() + ": trailing partial record at line " + std::to_string(line_no) + " (" +
                   std::to_string(line.size()) + " bytes) ignored";
      break;
    }
    if (j.is_discarded() || !j.is_object()) {
      const bool last = nl + 1 >= text.size();
      if (last) {
        log.truncated = true;
        log.detail = p.filename().string() + ": unreadable final record at line " + std::to_string(line_no) + " ignored";
        break;
      }
      throw Error(ErrorCode::store, p.filename().string() + ": corrupt record at line " + std::to_string(line_no));
    }
    log.records.push_back(std::move(j));
    pos = nl + 1;
    log.complete_bytes = pos;
  }
  return log;
}

class ProjectStore {
 public:
  static ProjectStore init(const fs::path& root, Manifest manifest) {
    if (fs::exists(root / "manifest.json"))
      throw Error(ErrorCode::validation, "a project already exists at " + root.string());
    if (manifest.project_id.empty()) manifest.project_id = root.filename().string();
    if (manifest.project_id.empty()) manifest.project_id = "project";
    fs::create_directories(root);
    ProjectStore s(root, std::move(manifest));
    s.save_manifest();
    return s;
  }

  static ProjectStore open(const fs::path& root) {
    const auto path = root / "manifest.json";
    if (!fs::exists(path))
      throw Error(ErrorCode::store, "no project at " + root.string() + " (manifest.json missing; run `init`)");
    auto j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::store, "manifest.json is not valid JSON");
    return ProjectStore(root, Manifest::from_json(j));
  }

  const fs::path& root() const noexcept { return root_; }
  const Manifest& manifest() const noexcept { return manifest_; }
  Manifest& manifest() noexcept { return manifest_; }
  void save_manifest() const { write_atomic(root_ / "manifest.json", manifest_.to_json().dump(2) + "\n"); }

  void record_audit(json event) {
    manifest_.audit.push_back(std::move(event));
    save_manifest();
  }

  LogContents<usability::SurveyResponse> surveys() const {
    return load<usability::SurveyResponse>("surveys.jsonl",
                                           [](const json& j) { return batch::survey_from_json(j); });
  }
  LogContents<ahp::ExpertJudgment> experts() const {
    return load<ahp::ExpertJudgment>(
        "experts.jsonl", [this](const json& j) { return batch::expert_from_json(j, manifest_.criteria); });
  }
  LogContents<metrics::AuditReport> audits() const {
    return load<metrics::AuditReport>("audits.jsonl", [](const json& j) { return batch::audit_from_json(j); });
  }

  void append_surveys(std::span<const usability::SurveyResponse> rs) {
    std::vector<json> lines;
    for (const auto& r : rs) lines.push_back(batch::survey_to_json(r));
    append("surveys.jsonl", lines);
  }
  void append_experts(std::span<const ahp::ExpertJudgment> es) {
    std::vector<json> lines;
    for (const auto& e : es) lines.push_back(batch::expert_to_json(e));
    append("experts.jsonl", lines);
  }
  void append_audit(const metrics::AuditReport& a) {
    std::vector<json> lines{batch::audit_to_json(a)};
    append("audits.jsonl", lines);
  }

  std::optional<json> read_artifact(const std::string& name) const {
    const auto p = root_ / "derived" / (name + ".json");
    if (!fs::exists(p)) return std::nullopt;
    auto j = json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::store, "derived artifact " + name + " is corrupt");
    return j;
  }
  void write_artifact(const std::string& name, const json& j) const {
    write_atomic(root_ / "derived" / (name + ".json"), j.dump(2) + "\n");
  }

  fs::path write_export(const std::string& file, std::string_view content) const {
    const auto p = root_ / "exports" / file;
    write_atomic(p, content);
    return p;
  }

 private:
  ProjectStore(fs::path root, Manifest m) : root_(std::move(root)), manifest_(std::move(m)) {}

  template <class T, class Decode>
  LogContents<T> load(const char* file, Decode decode) const {
    auto raw = read_log(root_ / file);
    LogContents<T> out;
    out.truncated = raw.truncated;
    out.complete_bytes = raw.complete_bytes;
    out.truncation_detail = raw.detail;
    for (std::size_t i = 0; i < raw.records.size(); ++i) {
      try {
        out.records.push_back(decode(raw.records[i]));
      } catch (const Error& e) {
        throw Error(ErrorCode::store, std::string(file) + ": record " + std::to_string(i + 1) + " is invalid: " + e.what());
      }
    }
    return out;
  }

  void append(const char* file, const std::vector<json>& lines) {
    const auto p = root_ / file;
    const auto raw = read_log(p);
    std::string content = fs::exists(p) ? read_file(p).substr(0, raw.complete_bytes) : std::string();
    for (const auto& l : lines) content += l.dump() + "\n";
    write_atomic(p, content);
  }

  fs::path root_;
  Manifest manifest_;
};

}  // namespace wuiq::store
