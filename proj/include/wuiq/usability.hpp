#pragma once

// Extended SUS scoring with a review-sentiment term, plus the geometric-mean
// usability metric U.
//
// The per-user score is computed exactly as
//
//   u = [ 5 * (sum(odd items) + sum(items 11..17) - 12)
//         + (25 - sum(even items))
//         + s / 10 ] / 3.5
//
// The x5 factor applies only to the positive-phrased terms and the sentiment
// term is divided by 10, so the range is [0, 260.1 / 3.5] ~ [0, 74.31], not
// [0, 100]. display_percent() rescales for presentation only.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wuiq/error.hpp"

namespace wuiq::usability {

inline constexpr std::size_t item_count = 17;
inline constexpr double max_score = 260.1 / 3.5;

// 1-based item numbers for each questionnaire block.
inline constexpr std::array<int, 5> positive_items{1, 3, 5, 7, 9};
inline constexpr std::array<int, 5> negative_items{2, 4, 6, 8, 10};
inline constexpr std::array<int, 4> utility_items{11, 12, 13, 14};
inline constexpr std::array<int, 3> aesthetics_items{15, 16, 17};

struct SurveyResponse {
  std::string respondent_id;
  std::array<int, item_count> uq{};
  std::string review_text;
  double duration_months = 0.0;
  std::string submitted_at;

  int item(int number) const { return uq[static_cast<std::size_t>(number - 1)]; }

  friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

inline std::string item_path(std::size_t zero_based) { return "uq_" + std::to_string(zero_based + 1); }

inline void check(const SurveyResponse& r, IssueList& issues, const std::string& prefix = {}) {
  if (r.respondent_id.empty()) issues.add(prefix + "respondent_id", "respondent_id must be non-empty");
  for (std::size_t i = 0; i < item_count; ++i)
    if (r.uq[i] < 1 || r.uq[i] > 5)
      issues.add(prefix + item_path(i), "Likert value " + std::to_string(r.uq[i]) + " is outside 1..5 (respondent '" +
                                            r.respondent_id + "')");
  const bool blank = std::all_of(r.review_text.begin(), r.review_text.end(),
                                 [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank) issues.add(prefix + "review_text", "review text is mandatory");
  if (!std::isfinite(r.duration_months) || r.duration_months < 0.0)
    issues.add(prefix + "duration_months", "duration must be a non-negative number of months");
}

inline void validate(const SurveyResponse& r) {
  IssueList issues;
  check(r, issues);
  issues.throw_if_any(ErrorCode::validation, "invalid survey response '" + r.respondent_id + "'");
}

struct SentimentScore {
  double value = 0.5;

  SentimentScore() = default;
  explicit SentimentScore(double v) : value(v) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::validation, "sentiment score must lie in [0,1]");
  }
};

struct UsabilityScore {
  std::string respondent_id;
  double u_check = 0.0;
};

// Lowercase, ASCII punctuation to spaces, split on whitespace.
inline std::vector<std::string> preprocess_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || (c < 0x80 && std::ispunct(c))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

// Max-subtracted softmax; safe for large-magnitude logits.
inline std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) throw Error(ErrorCode::validation, "softmax of an empty vector");
  const double peak = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::initializer_list<std::string_view> words) {
    for (auto w : words) words_.emplace(w);
  }

  // One word per line; blank lines and lines starting with '#' are skipped.
  static Lexicon parse(std::string_view text) {
    Lexicon lex;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      auto last = line.find_last_not_of(" \t\r");
      for (auto& t : preprocess_text(line.substr(first, last - first + 1))) lex.words_.insert(t);
    }
    return lex;
  }

  static Lexicon load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::configuration, "cannot read lexicon file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool contains(const std::string& w) const { return words_.count(w) != 0; }
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

inline const Lexicon& default_positive_lexicon() {
  static const Lexicon lex{"good",      "great",     "easy",       "excellent", "love",     "nice",
                           "intuitive", "fast",      "helpful",    "clean",     "beautiful", "smooth",
                           "simple",    "useful",    "awesome",    "amazing",   "clear",    "responsive",
                           "enjoy",     "enjoyable", "convenient", "reliable",  "pleasant", "quick",
                           "efficient", "attractive", "friendly",  "seamless",  "like",     "perfect"};
  return lex;
}

inline const Lexicon& default_negative_lexicon() {
  static const Lexicon lex{"bad",      "slow",     "confusing", "hard",     "difficult",  "poor",
                           "bug",      "buggy",    "broken",    "ugly",     "terrible",   "awful",
                           "annoying", "crash",    "crashes",   "hate",     "frustrating", "cluttered",
                           "laggy",    "lag",      "unclear",   "complicated", "error",   "errors",
                           "useless",  "worst",    "fail",      "fails",    "messy",      "unresponsive"};
  return lex;
}

class SentimentScorer {
 public:
  virtual ~SentimentScorer() = default;
  virtual std::string name() const = 0;
  virtual SentimentScore score(std::string_view text) const = 0;
};

// Two-class logits (positive hits, negative hits) through softmax; returns the
// positive-class probability.
class LexiconScorer final : public SentimentScorer {
 public:
  LexiconScorer() : positive_(default_positive_lexicon()), negative_(default_negative_lexicon()) {}
  LexiconScorer(Lexicon positive, Lexicon negative)
      : positive_(std::move(positive)), negative_(std::move(negative)) {}

  std::string name() const override { return "lexicon"; }

  SentimentScore score(std::string_view text) const override {
    double pos = 0.0;
    double neg = 0.0;
    for (const auto& t : preprocess_text(text)) {
      if (positive_.contains(t)) pos += 1.0;
      if (negative_.contains(t)) neg += 1.0;
    }
    const std::array<double, 2> logits{pos, neg};
    return SentimentScore(softmax(logits)[0]);
  }

 private:
  Lexicon positive_;
  Lexicon negative_;
};

// Ignores the text; every review scores 0.5.
class NeutralScorer final : public SentimentScorer {
 public:
  std::string name() const override { return "neutral"; }
  SentimentScore score(std::string_view) const override { return SentimentScore(0.5); }
};

class ScorerRegistry {
 public:
  using Factory = std::function<std::shared_ptr<const SentimentScorer>()>;

  void add(const std::string& name, Factory f) {
    std::lock_guard lock(mu_);
    factories_[name] = std::move(f);
  }

  std::shared_ptr<const SentimentScorer> make(const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = factories_.find(name);
    if (it == factories_.end()) {
      std::string known;
      for (const auto& [k, _] : factories_) known += (known.empty() ? "" : ", ") + k;
      throw Error(ErrorCode::configuration, "unknown sentiment scorer '" + name + "' (known: " + known + ")",
                  "scorer");
    }
    return it->second();
  }

  // Process-wide registry preloaded with "lexicon" and "neutral".
  static ScorerRegistry& global() {
    static ScorerRegistry reg(with_builtins);
    return reg;
  }

  ScorerRegistry() = default;

 private:
  struct BuiltinsTag {};
  static constexpr BuiltinsTag with_builtins{};

  explicit ScorerRegistry(BuiltinsTag) {
    add("lexicon", [] { return std::make_shared<const LexiconScorer>(); });
    add("neutral", [] { return std::make_shared<const NeutralScorer>(); });
  }

  mutable std::mutex mu_;
  std::map<std::string, Factory> factories_;
};

inline SentimentScore sentiment_score(std::string_view text, const SentimentScorer& scorer) {
  return scorer.score(text);
}

inline SentimentScore sentiment_score(std::string_view text, const std::string& scorer_name = "lexicon") {
  return ScorerRegistry::global().make(scorer_name)->score(text);
}

// The formula over plain values; items are not range-checked here. Used by
// explanation code that evaluates the score on composite feature vectors.
inline double extended_score_value(std::span<const double, item_count> items, double sentiment) {
  double positive = 0.0;
  for (int i : positive_items) positive += items[static_cast<std::size_t>(i - 1)];
  for (int i = 11; i <= 17; ++i) positive += items[static_cast<std::size_t>(i - 1)];
  double negative = 0.0;
  for (int i : negative_items) negative += items[static_cast<std::size_t>(i - 1)];
  return (5.0 * (positive - 12.0) + (25.0 - negative) + sentiment / 10.0) / 3.5;
}

inline UsabilityScore sus_extended_score(const SurveyResponse& r, SentimentScore s) {
  validate(r);
  std::array<double, item_count> items{};
  std::copy(r.uq.begin(), r.uq.end(), items.begin());
  return {r.respondent_id, extended_score_value(items, s.value)};
}

// Geometric mean of the per-user scores, divided by 100.
inline double usability_aggregate(std::span<const UsabilityScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::validation, "usability aggregate of no scores");
  double lo = scores.front().u_check;
  double hi = lo;
  double log_sum = 0.0;
  for (const auto& s : scores) {
    if (!(s.u_check >= 0.0)) throw Error(ErrorCode::validation, "usability scores must be non-negative");
    if (s.u_check == 0.0) return 0.0;
    lo = std::min(lo, s.u_check);
    hi = std::max(hi, s.u_check);
    log_sum += std::log(s.u_check);
  }
  const double g = std::exp(log_sum / static_cast<double>(scores.size()));
  return std::clamp(g, lo, hi) / 100.0;
}

// Presentation only: rescales a per-user score onto 0..100.
inline double display_percent(double u_check) { return u_check / max_score * 100.0; }

}  // namespace wuiq::usability
