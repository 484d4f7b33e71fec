#pragma once

// Project-level operations shared by the CLI and the HTTP service:
// ingest -> weights -> evaluate -> segment -> explain -> report.
// Every result is a JSON document in the same schema the API returns.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wuiq/ahp.hpp"
#include "wuiq/batch.hpp"
#include "wuiq/error.hpp"
#include "wuiq/explain.hpp"
#include "wuiq/export.hpp"
#include "wuiq/metrics.hpp"
#include "wuiq/quality.hpp"
#include "wuiq/segmentation.hpp"
#include "wuiq/store.hpp"
#include "wuiq/usability.hpp"

namespace wuiq::pipeline {

using nlohmann::json;

using Clock = std::function<std::string()>;

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Clock system_clock() { return utc_now; }
inline Clock fixed_clock(std::string ts) {
  return [ts = std::move(ts)] { return ts; };
}

struct Settings {
  double cr_threshold = ahp::default_cr_threshold;
  std::uint64_t seed = 42;
  std::string scorer = "lexicon";
  std::string positive_words;  // optional lexicon file overrides
  std::string negative_words;
  std::size_t restarts = 10;
  std::size_t k_max = 10;
  quality::GradeBands bands;

  json to_json() const {
    return json{{"cr_threshold", cr_threshold},
                {"seed", seed},
                {"scorer", scorer},
                {"positive_words", positive_words},
                {"negative_words", negative_words},
                {"restarts", restarts},
                {"k_max", k_max},
                {"grade_bands", {{"fair", bands.fair}, {"good", bands.good}, {"excellent", bands.excellent}}}};
  }

  // Values present in `j` replace the defaults.
  static Settings from_json(const json& j) {
    Settings s;
    if (!j.is_object()) return s;
    try {
      s.cr_threshold = j.value("cr_threshold", s.cr_threshold);
      s.seed = j.value("seed", s.seed);
      s.scorer = j.value("scorer", s.scorer);
      s.positive_words = j.value("positive_words", s.positive_words);
      s.negative_words = j.value("negative_words", s.negative_words);
      s.restarts = j.value("restarts", s.restarts);
      s.k_max = j.value("k_max", s.k_max);
      if (j.contains("grade_bands")) {
        const auto& b = j["grade_bands"];
        s.bands.fair = b.value("fair", s.bands.fair);
        s.bands.good = b.value("good", s.bands.good);
        s.bands.excellent = b.value("excellent", s.bands.excellent);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::configuration, std::string("invalid project configuration: ") + e.what());
    }
    if (!(s.cr_threshold >= 0.0))
      throw Error(ErrorCode::configuration, "cr_threshold must be non-negative", "cr_threshold");
    if (s.restarts < 1) throw Error(ErrorCode::configuration, "restarts must be at least 1", "restarts");
    if (s.k_max < 1) throw Error(ErrorCode::configuration, "k_max must be at least 1", "k_max");
    (void)usability::ScorerRegistry::global().make(s.scorer);
    return s;
  }
};

inline std::shared_ptr<const usability::SentimentScorer> make_scorer(const Settings& s) {
  if (s.scorer == "lexicon" && (!s.positive_words.empty() || !s.negative_words.empty())) {
    auto pos = s.positive_words.empty() ? usability::default_positive_lexicon()
                                        : usability::Lexicon::load(s.positive_words);
    auto neg = s.negative_words.empty() ? usability::default_negative_lexicon()
                                        : usability::Lexicon::load(s.negative_words);
    return std::make_shared<const usability::LexiconScorer>(std::move(pos), std::move(neg));
  }
  return usability::ScorerRegistry::global().make(s.scorer);
}

// ---- survey features -------------------------------------------------------

struct ScoredSurvey {
  usability::SurveyResponse response;
  double sentiment = 0.5;
  double u_check = 0.0;
};

inline std::vector<ScoredSurvey> score_surveys(std::span<const usability::SurveyResponse> surveys,
                                               const usability::SentimentScorer& scorer) {
  std::vector<ScoredSurvey> out;
  for (const auto& r : surveys) {
    const auto s = scorer.score(r.review_text);
    out.push_back({r, s.value, usability::sus_extended_score(r, s).u_check});
  }
  return out;
}

// Columns of the vector that explanations perturb: the 17 items, the
// sentiment score and the usage duration.
inline std::vector<std::string> explained_feature_names() {
  std::vector<std::string> n;
  for (std::size_t i = 0; i < usability::item_count; ++i) n.push_back(usability::item_path(i));
  n.push_back("sentiment");
  n.push_back("duration_months");
  return n;
}

inline constexpr std::size_t sentiment_column = usability::item_count;
inline constexpr std::size_t duration_column = usability::item_count + 1;

inline std::vector<double> explained_row(const ScoredSurvey& s) {
  std::vector<double> row(s.response.uq.begin(), s.response.uq.end());
  row.push_back(s.sentiment);
  row.push_back(s.response.duration_months);
  return row;
}

// Groups: sus_positive, sus_negative, s_utility, s_aesthetics, sentiment, duration.
inline explainability::FeatureGrouping default_grouping() {
  std::vector<std::size_t> fg(usability::item_count + 2);
  for (int i : usability::positive_items) fg[static_cast<std::size_t>(i - 1)] = 0;
  for (int i : usability::negative_items) fg[static_cast<std::size_t>(i - 1)] = 1;
  for (int i : usability::utility_items) fg[static_cast<std::size_t>(i - 1)] = 2;
  for (int i : usability::aesthetics_items) fg[static_cast<std::size_t>(i - 1)] = 3;
  fg[sentiment_column] = 4;
  fg[duration_column] = 5;
  return explainability::FeatureGrouping(
      {"sus_positive", "sus_negative", "s_utility", "s_aesthetics", "sentiment", "duration"}, std::move(fg));
}

// "default": duration_months, u_check.  "all": those plus the 17 items and sentiment.
inline std::vector<std::string> model_feature_names(const std::string& set) {
  if (set == "default") return {"duration_months", "u_check"};
  if (set == "all") {
    std::vector<std::string> n{"duration_months", "u_check"};
    for (std::size_t i = 0; i < usability::item_count; ++i) n.push_back(usability::item_path(i));
    n.push_back("sentiment");
    return n;
  }
  throw Error(ErrorCode::validation, "feature set must be 'default' or 'all'", "features");
}

inline explainability::FeatureMap model_feature_map(const std::string& set) {
  const bool all = set == "all";
  model_feature_names(set);
  return [all](std::span<const double> raw, std::vector<double>& out) {
    out.clear();
    out.push_back(raw[duration_column]);
    out.push_back(usability::extended_score_value(raw.first<usability::item_count>(), raw[sentiment_column]));
    if (all) {
      out.insert(out.end(), raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(usability::item_count));
      out.push_back(raw[sentiment_column]);
    }
  };
}

inline segmentation::FeatureMatrix model_features(std::span<const ScoredSurvey> surveys, const std::string& set) {
  const auto map = model_feature_map(set);
  std::vector<std::vector<double>> rows;
  std::vector<double> buf;
  for (const auto& s : surveys) {
    const auto raw = explained_row(s);
    map(raw, buf);
    rows.push_back(buf);
  }
  return segmentation::FeatureMatrix::from_rows(rows, model_feature_names(set));
}

// ---- record <-> JSON helpers ------------------------------------------------

inline json consistency_json(const ahp::ConsistencyReport& r) {
  return json{{"lambda_max", r.lambda_max}, {"ci", r.ci},       {"ri", r.ri},
              {"cr", r.cr},                 {"threshold", r.threshold}, {"accepted", r.accepted}};
}

inline json history_to_json(const quality::ProjectHistory& h) {
  json its = json::array();
  for (const auto& it : h.iterations) {
    json j{{"t", it.t},
           {"performance", it.scores.performance},
           {"accessibility", it.scores.accessibility},
           {"usability", it.scores.usability},
           {"weights", std::vector<double>(it.weights.values().begin(), it.weights.values().end())},
           {"wuiq", it.wuiq},
           {"evaluated_at", it.evaluated_at}};
    if (it.load_time_seconds) j["load_time_seconds"] = *it.load_time_seconds;
    its.push_back(std::move(j));
  }
  json baseline = nullptr;
  if (h.baseline_weights)
    baseline = std::vector<double>(h.baseline_weights->values().begin(), h.baseline_weights->values().end());
  return json{{"project_id", h.project_id}, {"baseline_weights", baseline}, {"iterations", its}};
}

inline quality::ProjectHistory history_from_json(const json& j) {
  quality::ProjectHistory h;
  try {
    h.project_id = j.at("project_id").get<std::string>();
    if (!j.at("baseline_weights").is_null())
      h.baseline_weights = ahp::WeightVector(j["baseline_weights"].get<std::vector<double>>());
    for (const auto& it : j.at("iterations")) {
      quality::EvaluationIteration e;
      e.t = it.at("t").get<int>();
      e.scores = {it.at("performance").get<double>(), it.at("accessibility").get<double>(),
                  it.at("usability").get<double>()};
      e.weights = ahp::WeightVector(it.at("weights").get<std::vector<double>>());
      e.wuiq = it.at("wuiq").get<double>();
      e.evaluated_at = it.at("evaluated_at").get<std::string>();
      if (it.contains("load_time_seconds")) e.load_time_seconds = it["load_time_seconds"].get<double>();
      h.iterations.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::store, std::string("malformed history: ") + e.what());
  }
  return h;
}

struct EvaluateOptions {
  std::optional<double> performance;
  std::optional<double> accessibility;
  std::optional<double> usability;
  std::optional<metrics::TimingRecord> timing;
};

struct SegmentOptions {
  std::optional<std::size_t> k;  // nullopt: elbow selection
  std::optional<std::uint64_t> seed;
  std::string features = "default";
  bool raw = false;  // cluster unstandardized features
};

class Engine {
 public:
  Engine(store::ProjectStore store, Settings settings, Clock clock = system_clock())
      : store_(std::move(store)), settings_(std::move(settings)), clock_(std::move(clock)) {}

  store::ProjectStore& store() noexcept { return store_; }
  const Settings& settings() const noexcept { return settings_; }

  // ---- ingestion ----

  json ingest_surveys(std::string_view document) {
    auto batch = batch::parse_survey_batch(document);
    return append_surveys(std::move(batch));
  }

  json add_survey(const json& record) {
    IssueList issues;
    auto r = batch::survey_from_json(record, issues);
    issues.throw_if_any(ErrorCode::validation, "invalid survey response");
    auto res = append_surveys({r});
    const auto scorer = make_scorer(settings_);
    const auto s = scorer->score(r.review_text);
    return json{{"respondent_id", r.respondent_id},
                {"sentiment", s.value},
                {"u_check", usability::sus_extended_score(r, s).u_check},
                {"total", res["total"]}};
  }

  json ingest_experts(std::string_view document) {
    auto experts = batch::parse_expert_batch(document);
    for (const auto& e : experts)
      if (e.matrix.labels() != store_.manifest().criteria)
        throw Error(ErrorCode::validation, "expert batch criteria differ from the project criteria", "criteria");
    return append_experts(std::move(experts));
  }

  json add_expert(const json& record) {
    IssueList issues;
    auto e = batch::expert_from_json(record, store_.manifest().criteria, issues);
    issues.throw_if_any(ErrorCode::validation, "invalid expert judgment");
    auto res = append_experts({e});
    return res["experts"][0];
  }

  // Consistency of a judgment set without persisting anything.
  json preview(const json& body) const {
    const json& judgments = body.is_object() && body.contains("judgments") ? body["judgments"] : body;
    const auto m = batch::matrix_from_judgments(judgments, store_.manifest().criteria);
    const auto a = ahp::assess({"preview", "", m, ""}, settings_.cr_threshold);
    auto j = consistency_json(a.report);
    j["weights"] = std::vector<double>(a.weights.values().begin(), a.weights.values().end());
    j["criteria"] = store_.manifest().criteria;
    return j;
  }

  json ingest_lighthouse(std::string_view document) {
    auto report = metrics::parse_lighthouse(document);
    store_.append_audit(report);
    return batch::audit_to_json(report);
  }

  json add_manual_audit(double performance, double accessibility) {
    auto report = metrics::manual_audit(performance, accessibility, "manual", clock_());
    store_.append_audit(report);
    return batch::audit_to_json(report);
  }

  // ---- weights ----

  std::optional<json> weights() const { return store_.read_artifact("weights"); }

  // Computes and freezes the baseline weights from the expert log, or stores
  // `manual` weights. Recomputing frozen weights needs `override_frozen`, and
  // is refused once any iteration has used them.
  json compute_weights(bool override_frozen = false, std::optional<std::vector<double>> manual = std::nullopt) {
    if (weights()) {
      if (!override_frozen)
        throw Error(ErrorCode::weights_frozen,
                    "baseline weights are frozen; pass the override flag to recompute them");
      if (auto h = store_.read_artifact("history"); h && !(*h)["iterations"].empty())
        throw Error(ErrorCode::weights_frozen,
                    "baseline weights were already used by recorded iterations and cannot be replaced");
    }
    const auto& criteria = store_.manifest().criteria;
    json doc{{"criteria", criteria}, {"cr_threshold", settings_.cr_threshold}, {"computed_at", clock_()}};
    if (manual) {
      if (manual->size() != criteria.size())
        throw Error(ErrorCode::validation, "one manual weight per criterion required", "weights");
      ahp::WeightVector w(*manual);
      doc["source"] = "manual";
      doc["weights"] = *manual;
      doc["experts"] = json::array();
      doc["accepted_count"] = 0;
      doc["computed_from"] = {{"experts", 0}};
    } else {
      const auto log = store_.experts();
      const auto latest = latest_judgments(log.records);
      if (latest.empty()) throw Error(ErrorCode::validation, "no expert judgments ingested yet", "experts");
      const auto agg = ahp::aggregate_experts(latest, settings_.cr_threshold);
      doc["source"] = "ahp";
      doc["weights"] = std::vector<double>(agg.weights.values().begin(), agg.weights.values().end());
      json experts = json::array();
      for (const auto& a : agg.experts) experts.push_back(assessment_json(a));
      doc["experts"] = experts;
      doc["accepted_count"] = agg.accepted_count;
      doc["computed_from"] = {{"experts", log.records.size()}};
    }
    store_.write_artifact("weights", doc);
    store_.record_audit({{"event", override_frozen ? "weights_override" : "weights_frozen"},
                         {"at", doc["computed_at"]},
                         {"source", doc["source"]}});
    return doc;
  }

  // ---- evaluation ----

  quality::ProjectHistory history() const {
    if (auto h = store_.read_artifact("history")) return history_from_json(*h);
    quality::ProjectHistory h;
    h.project_id = store_.manifest().project_id;
    return h;
  }

  json evaluate(const EvaluateOptions& opt = {}) {
    const auto w = weights();
    if (!w)
      throw Error(ErrorCode::missing_baseline, "no baseline weights: run `weights` before evaluating");
    if (store_.manifest().criteria.size() != 3)
      throw Error(ErrorCode::validation, "WUIQ evaluation needs exactly three criteria (P, A, U)");
    ahp::WeightVector baseline((*w)["weights"].get<std::vector<double>>());

    json inputs = json::object();
    metrics::MetricScores scores;
    const auto audits = store_.audits();
    if (opt.performance && opt.accessibility) {
      scores.performance = *opt.performance;
      scores.accessibility = *opt.accessibility;
      inputs["audit_source"] = "manual";
    } else {
      if (audits.records.empty())
        throw Error(ErrorCode::validation, "no audit report ingested; ingest a Lighthouse report or pass P and A",
                    "performance");
      const auto& latest = audits.records.back();
      scores.performance = opt.performance.value_or(latest.performance_score);
      scores.accessibility = opt.accessibility.value_or(latest.accessibility_score);
      inputs["audit_source"] = latest.source_url;
      inputs["audit_fetched_at"] = latest.fetched_at;
    }
    inputs["audits"] = audits.records.size();

    const auto surveys = store_.surveys();
    inputs["surveys"] = surveys.records.size();
    if (opt.usability) {
      scores.usability = *opt.usability;
      inputs["usability_source"] = "manual";
    } else {
      if (surveys.records.empty())
        throw Error(ErrorCode::validation, "no survey responses ingested; ingest surveys or pass U", "usability");
      const auto scored = score_surveys(surveys.records, *make_scorer(settings_));
      std::vector<usability::UsabilityScore> us;
      for (const auto& s : scored) us.push_back({s.response.respondent_id, s.u_check});
      scores.usability = usability::usability_aggregate(us);
      inputs["usability_source"] = "surveys";
    }

    std::optional<double> rho;
    if (opt.timing) rho = metrics::page_load_time(*opt.timing);

    auto h = history();
    if (!h.baseline_weights) h.baseline_weights = baseline;
    h = quality::append_iteration(std::move(h), scores, clock_(), rho);

    auto doc = history_to_json(h);
    json all_inputs = json::array();
    if (auto prev = store_.read_artifact("history"); prev && prev->contains("inputs")) all_inputs = (*prev)["inputs"];
    all_inputs.push_back(inputs);
    doc["inputs"] = all_inputs;
    store_.write_artifact("history", doc);
    return iteration_json(h.iterations.back(), inputs);
  }

  json iteration_json(const quality::EvaluationIteration& it, const json& inputs = json::object()) const {
    const auto c = quality::contributions(it.scores, it.weights);
    json j = history_to_json({"", std::nullopt, {it}})["iterations"][0];
    j["contributions"] = {{"performance", c.performance}, {"accessibility", c.accessibility}, {"usability", c.usability}};
    j["percent"] = quality::percent_label(it.wuiq);
    j["grade"] = quality::grade(std::clamp(it.wuiq, 0.0, 1.0), settings_.bands);
    if (!inputs.empty()) j["inputs"] = inputs;
    return j;
  }

  json history_json() const {
    const auto h = history();
    json its = json::array();
    for (const auto& it : h.iterations) its.push_back(iteration_json(it));
    auto j = history_to_json(h);
    j["iterations"] = its;
    return j;
  }

  // ---- segmentation ----

  std::optional<json> latest_segments() const { return store_.read_artifact("segments"); }

  json segment(const SegmentOptions& opt = {}) {
    const auto log = store_.surveys();
    if (log.records.empty()) throw Error(ErrorCode::validation, "no survey responses to segment");
    const auto scored = score_surveys(log.records, *make_scorer(settings_));
    const auto raw = model_features(scored, opt.features);
    segmentation::Standardized prepared{raw, segmentation::Standardization::identity(raw.cols)};
    if (!opt.raw) prepared = segmentation::standardize(raw);
    const auto seed = opt.seed.value_or(settings_.seed);
    const auto k_max = std::min(settings_.k_max, raw.rows);

    const auto curve = segmentation::scree(prepared.matrix, 1, k_max, seed, settings_.restarts);
    std::size_t k = 0;
    if (opt.k) {
      k = *opt.k;
      if (k < 1 || k > raw.rows) throw Error(ErrorCode::validation, "k must lie in 1..number of respondents", "k");
    } else {
      if (curve.size() < 3)
        throw Error(ErrorCode::validation, "automatic k needs at least three respondents; pass --k", "k");
      k = segmentation::elbow(curve);
    }
    const auto model = segmentation::best_of(prepared.matrix, k, seed, settings_.restarts);
    const auto summary = segmentation::cluster_summary(model, raw);

    json centroids = json::array();
    for (std::size_t c = 0; c < model.k; ++c)
      centroids.push_back(std::vector<double>(model.centroid(c).begin(), model.centroid(c).end()));
    json scree_j = json::array();
    for (const auto& p : curve) scree_j.push_back({{"k", p.k}, {"sse", p.sse}});
    json rows = json::array();
    for (const auto& r : summary.rows) rows.push_back({{"cluster", r.cluster}, {"size", r.size}, {"means", r.means}});
    std::vector<std::string> ids;
    for (const auto& s : scored) ids.push_back(s.response.respondent_id);

    json doc{{"k", k},
             {"k_selection", opt.k ? "fixed" : "elbow"},
             {"seed", seed},
             {"restarts", settings_.restarts},
             {"features", opt.features},
             {"feature_names", raw.names},
             {"standardized", !opt.raw},
             {"standardization", {{"mean", prepared.params.mean}, {"stddev", prepared.params.stddev}}},
             {"centroids", centroids},
             {"labels", model.labels},
             {"respondent_ids", ids},
             {"sse", model.sse},
             {"iterations_run", model.iterations_run},
             {"scree", scree_j},
             {"summary", rows},
             {"computed_from", {{"surveys", log.records.size()}}},
             {"computed_at", clock_()}};
    store_.write_artifact("segments", doc);
    store_.write_export("scree.csv", exports::scree_csv(curve));
    store_.write_export("scree.svg", exports::scree_svg(curve, k));
    store_.write_export("clusters.csv", exports::cluster_summary_csv(summary));
    return doc;
  }

  // ---- explanation ----

  json explain(std::size_t cluster, explainability::MembershipMode mode = explainability::MembershipMode::indicator,
               bool write_exports = true) const {
    const auto seg = latest_segments();
    if (!seg) throw Error(ErrorCode::not_found, "no segmentation yet: run `segment` first");
    const auto& s = *seg;
    segmentation::KMeansModel model;
    segmentation::Standardization scaling;
    std::string features;
    std::size_t used = 0;
    try {
      model.k = s.at("k").get<std::size_t>();
      for (const auto& c : s.at("centroids"))
        for (double v : c.get<std::vector<double>>()) model.centroids.push_back(v);
      model.dims = model.centroids.size() / model.k;
      model.labels = s.at("labels").get<std::vector<std::size_t>>();
      model.sse = s.at("sse").get<double>();
      scaling.mean = s.at("standardization").at("mean").get<std::vector<double>>();
      scaling.stddev = s.at("standardization").at("stddev").get<std::vector<double>>();
      features = s.at("features").get<std::string>();
      used = s.at("computed_from").at("surveys").get<std::size_t>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::store, std::string("malformed segments artifact: ") + e.what());
    }
    if (cluster >= model.k)
      throw Error(ErrorCode::validation, "cluster " + std::to_string(cluster) + " does not exist (k = " +
                                             std::to_string(model.k) + ")", "cluster");

    auto log = store_.surveys();
    if (log.records.size() < used) throw Error(ErrorCode::store, "survey log is shorter than the segmented data");
    log.records.resize(used);
    const auto scored = score_surveys(log.records, *make_scorer(settings_));
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    for (const auto& sc : scored) {
      rows.push_back(explained_row(sc));
      ids.push_back(sc.response.respondent_id);
    }
    const auto data = segmentation::FeatureMatrix::from_rows(rows, explained_feature_names());
    const auto groups = default_grouping();
    const auto result =
        explainability::explain_cluster(model, scaling, model_feature_map(features), data, ids, groups, cluster, mode);
    const auto importance = explainability::global_importance(result.explanations, groups.names());
    const auto attr = explainability::attribution_rows(result.explanations, groups.names());

    double worst = 0.0;
    for (const auto& e : result.explanations) worst = std::max(worst, e.efficiency_residual);
    json imp = json::array();
    for (const auto& g : importance) imp.push_back({{"group", g.group}, {"mean_abs_phi", g.mean_abs_phi}});
    json rows_j = json::array();
    for (const auto& r : attr)
      rows_j.push_back({{"instance_id", r.instance_id}, {"cluster", r.cluster}, {"group", r.group}, {"phi", r.phi},
                        {"value", r.value}, {"base_value", r.base_value}, {"effect", r.effect}});
    json doc{{"cluster", cluster},
             {"mode", explainability::to_string(mode)},
             {"groups", groups.names()},
             {"base_value", result.base_value},
             {"instances", result.explanations.size()},
             {"max_efficiency_residual", worst},
             {"importance", imp},
             {"rows", rows_j}};
    if (write_exports) {
      const auto tag = "cluster_" + std::to_string(cluster);
      store_.write_export("attributions_" + tag + ".csv", exports::attribution_csv(attr));
      store_.write_export("importance_" + tag + ".csv", exports::importance_csv(importance));
      store_.write_export("attributions_" + tag + ".svg",
                          exports::attribution_svg(result.explanations, groups.names(), cluster));
    }
    return doc;
  }

  // ---- report ----

  json report() const {
    const auto surveys = store_.surveys();
    const auto experts = store_.experts();
    const auto audits = store_.audits();
    json warnings = json::array();
    for (const auto* d : {&surveys.truncation_detail, &experts.truncation_detail, &audits.truncation_detail})
      if (!d->empty()) warnings.push_back(*d);

    json doc{{"project_id", store_.manifest().project_id},
             {"criteria", store_.manifest().criteria},
             {"counts", {{"surveys", surveys.records.size()}, {"experts", experts.records.size()},
                         {"audits", audits.records.size()}}},
             {"warnings", warnings}};
    const auto w = weights();
    doc["weights"] = w ? *w : json(nullptr);
    doc["history"] = history_json();
    const auto& its = doc["history"]["iterations"];
    doc["latest"] = its.empty() ? json(nullptr) : its.back();

    const auto seg = latest_segments();
    if (!seg) {
      doc["segments"] = nullptr;
      return doc;
    }
    doc["segments"] = {{"k", (*seg)["k"]},
                       {"k_selection", (*seg)["k_selection"]},
                       {"feature_names", (*seg)["feature_names"]},
                       {"scree", (*seg)["scree"]},
                       {"summary", (*seg)["summary"]}};

    // Per-cluster variant of the latest iteration with U replaced by the
    // cluster's geometric-mean usability.
    if (!its.empty()) {
      const auto used = (*seg)["computed_from"]["surveys"].get<std::size_t>();
      auto records = surveys.records;
      records.resize(std::min(used, records.size()));
      const auto scored = score_surveys(records, *make_scorer(settings_));
      const auto labels = (*seg)["labels"].get<std::vector<std::size_t>>();
      const auto latest = history().iterations.back();
      json per = json::array();
      for (std::size_t c = 0; c < (*seg)["k"].get<std::size_t>(); ++c) {
        std::vector<usability::UsabilityScore> us;
        for (std::size_t i = 0; i < scored.size() && i < labels.size(); ++i)
          if (labels[i] == c) us.push_back({scored[i].response.respondent_id, scored[i].u_check});
        if (us.empty()) continue;
        auto scores = latest.scores;
        scores.usability = usability::usability_aggregate(us);
        const double v = quality::compute_wuiq(scores, latest.weights);
        per.push_back({{"cluster", c}, {"usability", scores.usability}, {"wuiq", v},
                       {"percent", quality::percent_label(v)}});
      }
      doc["cluster_wuiq"] = {{"interpretation", "U replaced by the cluster's geometric-mean usability"},
                             {"t", latest.t},
                             {"clusters", per}};
    }
    json importance = json::array();
    for (std::size_t c = 0; c < (*seg)["k"].get<std::size_t>(); ++c) {
      auto e = explain(c, explainability::MembershipMode::indicator, false);
      importance.push_back({{"cluster", c}, {"base_value", e["base_value"]}, {"importance", e["importance"]}});
    }
    doc["explanations"] = importance;
    return doc;
  }

 private:
  json append_surveys(std::vector<usability::SurveyResponse> batch) {
    const auto log = store_.surveys();
    std::set<std::string> known;
    for (const auto& r : log.records) known.insert(r.respondent_id);
    IssueList issues;
    for (std::size_t i = 0; i < batch.size(); ++i)
      if (known.count(batch[i].respondent_id))
        issues.add("surveys[" + std::to_string(i) + "].respondent_id",
                   "respondent_id '" + batch[i].respondent_id + "' already exists in the project");
    issues.throw_if_any(ErrorCode::validation, "duplicate survey responses");
    const auto now = clock_();
    for (auto& r : batch)
      if (r.submitted_at.empty()) r.submitted_at = now;
    store_.append_surveys(batch);
    return json{{"ingested", batch.size()}, {"total", log.records.size() + batch.size()},
                {"recovered_truncation", log.truncated}};
  }

  json append_experts(std::vector<ahp::ExpertJudgment> experts) {
    const auto now = clock_();
    json out = json::array();
    for (auto& e : experts) {
      if (e.submitted_at.empty()) e.submitted_at = now;
      out.push_back(assessment_json(ahp::assess(e, settings_.cr_threshold)));
    }
    const auto log = store_.experts();
    store_.append_experts(experts);
    return json{{"ingested", experts.size()}, {"total", log.records.size() + experts.size()}, {"experts", out}};
  }

  static json assessment_json(const ahp::ExpertAssessment& a) {
    return json{{"expert_id", a.expert_id},
                {"role", a.role},
                {"weights", std::vector<double>(a.weights.values().begin(), a.weights.values().end())},
                {"consistency", consistency_json(a.report)},
                {"accepted", a.report.accepted}};
  }

  // Later submissions from the same expert replace earlier ones; order of
  // first appearance is kept.
  static std::vector<ahp::ExpertJudgment> latest_judgments(const std::vector<ahp::ExpertJudgment>& log) {
    std::vector<ahp::ExpertJudgment> out;
    std::map<std::string, std::size_t> pos;
    for (const auto& e : log) {
      auto [it, fresh] = pos.emplace(e.expert_id, out.size());
      if (fresh) out.push_back(e);
      else out[it->second] = e;
    }
    return out;
  }

  store::ProjectStore store_;
  Settings settings_;
  Clock clock_;
};

}  // namespace wuiq::pipeline
