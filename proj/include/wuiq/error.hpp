#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wuiq {

// Closed set of failure categories. The string form is what the HTTP API
// reports in ApiError bodies and what the CLI uses to pick an exit status.
enum class ErrorCode {
  validation,
  parse,
  not_found,
  weights_frozen,
  unsupported_dimension,
  degenerate_weights,
  no_accepted_judgments,
  missing_baseline,
  configuration,
  enumeration_cap,
  store,
  unauthorized,
  internal,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::weights_frozen: return "weights_frozen";
    case ErrorCode::unsupported_dimension: return "unsupported_dimension";
    case ErrorCode::degenerate_weights: return "degenerate_weights";
    case ErrorCode::no_accepted_judgments: return "no_accepted_judgments";
    case ErrorCode::missing_baseline: return "missing_baseline";
    case ErrorCode::configuration: return "configuration_error";
    case ErrorCode::enumeration_cap: return "enumeration_cap";
    case ErrorCode::store: return "store_error";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::internal: return "internal_error";
  }
  return "internal_error";
}

struct Issue {
  std::string path;
  std::string message;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {})
      : std::runtime_error(message), code_(code), path_(std::move(path)) {}

  Error(ErrorCode code, const std::string& message, std::vector<Issue> issues)
      : std::runtime_error(message), code_(code), issues_(std::move(issues)) {
    if (!issues_.empty()) path_ = issues_.front().path;
  }

  ErrorCode code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }
  const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  ErrorCode code_;
  std::string path_;
  std::vector<Issue> issues_;
};

// Collects itemized problems and throws them together.
class IssueList {
 public:
  void add(std::string path, std::string message) {
    issues_.push_back({std::move(path), std::move(message)});
  }
  bool empty() const noexcept { return issues_.empty(); }
  const std::vector<Issue>& items() const noexcept { return issues_; }

  void throw_if_any(ErrorCode code, const std::string& summary) const {
    if (issues_.empty()) return;
    std::string msg = summary;
    for (const auto& i : issues_) {
      msg += "\n  ";
      if (!i.path.empty()) msg += i.path + ": ";
      msg += i.message;
    }
    throw Error(code, msg, issues_);
  }

 private:
  std::vector<Issue> issues_;
};

}  // namespace wuiq
