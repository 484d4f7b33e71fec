#pragma once

// Command-line front end. `run_cli` takes the arguments after the program
// name and writes to the given streams, so tests can drive it in-process.
//
// Exit status: 0 success, 1 invalid input or usage, 2 internal error.
// Every global flag can also come from a WUIQ_* environment variable.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wuiq/error.hpp"
#include "wuiq/export.hpp"
#include "wuiq/pipeline.hpp"
#include "wuiq/quality.hpp"
#include "wuiq/service.hpp"
#include "wuiq/store.hpp"

namespace wuiq::cli {

using nlohmann::json;

inline std::string read_input(const std::string& file) {
  if (file == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::validation, "cannot open input file " + file, "file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string num(double v, int digits = 4) { return exports::fixed(v, digits); }

inline std::vector<double> parse_weight_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    double v = 0.0;
    if (!batch::detail::parse_real(part, v))
      throw Error(ErrorCode::validation, "weights must be a comma-separated list of numbers", "set");
    out.push_back(v);
  }
  return out;
}

inline void print_weights(std::ostream& out, const json& w) {
  const auto criteria = w["criteria"].get<std::vector<std::string>>();
  const auto values = w["weights"].get<std::vector<double>>();
  out << "source: " << w["source"].get<std::string>() << "\n";
  out << "omega = (";
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << num(values[i], 2);
  out << ")\n\n";
  out << std::left << std::setw(16) << "criterion" << "weight\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << std::setw(16) << criteria[i] << num(values[i]) << "\n";
  if (w["experts"].empty()) return;
  out << "\n"
      << std::setw(14) << "expert" << std::setw(14) << "role" << std::setw(12) << "lambda_max" << std::setw(10)
      << "CI" << std::setw(10) << "CR" << "status\n";
  for (const auto& e : w["experts"]) {
    const auto& c = e["consistency"];
    out << std::setw(14) << e["expert_id"].get<std::string>() << std::setw(14) << e["role"].get<std::string>()
        << std::setw(12) << num(c["lambda_max"].get<double>()) << std::setw(10) << num(c["ci"].get<double>())
        << std::setw(10) << num(c["cr"].get<double>()) << (e["accepted"].get<bool>() ? "accepted" : "rejected")
        << "\n";
  }
  out << "\naccepted " << w["accepted_count"].get<std::size_t>() << " of " << w["experts"].size()
      << " experts (CR threshold " << num(w["cr_threshold"].get<double>(), 2) << ")\n";
}

inline void print_iteration(std::ostream& out, const json& it) {
  out << "iteration t=" << it["t"].get<int>() << "  P=" << num(it["performance"].get<double>())
      << "  A=" << num(it["accessibility"].get<double>()) << "  U=" << num(it["usability"].get<double>()) << "\n";
  out << "WUIQ_" << it["t"].get<int>() << " = " << num(it["wuiq"].get<double>()) << " ("
      << it["percent"].get<std::string>() << "), grade: " << it["grade"].get<std::string>() << "\n";
  if (it.contains("load_time_seconds")) out << "page load time: " << num(it["load_time_seconds"].get<double>(), 3) << " s\n";
}

inline segmentation::ClusterSummary summary_from_json(const json& seg) {
  segmentation::ClusterSummary s;
  s.feature_names = seg["feature_names"].get<std::vector<std::string>>();
  for (const auto& r : seg["summary"])
    s.rows.push_back({r["cluster"].get<std::size_t>(), r["size"].get<std::size_t>(),
                      r["means"].get<std::vector<double>>()});
  return s;
}

inline void print_segments(std::ostream& out, const json& seg) {
  out << "k = " << seg["k"].get<std::size_t>() << " (" << seg["k_selection"].get<std::string>() << ")\n\n";
  out << std::left << std::setw(6) << "k" << "SSE\n";
  for (const auto& p : seg["scree"])
    out << std::setw(6) << p["k"].get<std::size_t>() << exports::real(p["sse"].get<double>()) << "\n";
  out << "\n" << exports::cluster_summary_table(summary_from_json(seg));
}

inline void print_importance(std::ostream& out, const json& imp) {
  out << std::left << std::setw(16) << "group" << "mean |phi|\n";
  for (const auto& g : imp) out << std::setw(16) << g["group"].get<std::string>() << num(g["mean_abs_phi"].get<double>()) << "\n";
}

inline void print_report(std::ostream& out, const json& r) {
  out << "project: " << r["project_id"].get<std::string>() << "\n";
  const auto& c = r["counts"];
  out << "records: " << c["surveys"] << " surveys, " << c["experts"] << " expert judgments, " << c["audits"]
      << " audits\n";
  for (const auto& w : r["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
  out << "\n== weights ==\n";
  if (r["weights"].is_null()) out << "not computed\n";
  else print_weights(out, r["weights"]);
  out << "\n== iterations ==\n";
  if (r["history"]["iterations"].empty()) out << "none\n";
  for (const auto& it : r["history"]["iterations"]) print_iteration(out, it);
  out << "\n== segments ==\n";
  if (r["segments"].is_null()) {
    out << "not computed\n";
    return;
  }
  print_segments(out, r["segments"]);
  if (r.contains("cluster_wuiq")) {
    out << "\nper-cluster WUIQ (" << r["cluster_wuiq"]["interpretation"].get<std::string>() << ")\n";
    for (const auto& cw : r["cluster_wuiq"]["clusters"])
      out << "  cluster " << cw["cluster"].get<std::size_t>() << ": U=" << num(cw["usability"].get<double>())
          << "  WUIQ=" << num(cw["wuiq"].get<double>()) << " (" << cw["percent"].get<std::string>() << ")\n";
  }
  for (const auto& e : r["explanations"]) {
    out << "\n== cluster " << e["cluster"].get<std::size_t>() << " attributions (base value "
        << num(e["base_value"].get<double>()) << ") ==\n";
    print_importance(out, e["importance"]);
  }
}

struct Globals {
  std::string project = ".";
  std::uint64_t seed = 0;
  double cr_threshold = 0.0;
  std::string scorer;
  std::string positive_words;
  std::string negative_words;
  std::string now;
};

inline pipeline::Settings resolve_settings(const store::Manifest& m, const Globals& g, const CLI::App& app) {
  auto s = pipeline::Settings::from_json(m.config);
  if (app.get_option("--seed")->count()) s.seed = g.seed;
  if (app.get_option("--cr-threshold")->count()) {
    if (!(g.cr_threshold >= 0.0)) throw Error(ErrorCode::validation, "cr-threshold must be non-negative", "cr-threshold");
    s.cr_threshold = g.cr_threshold;
  }
  if (app.get_option("--scorer")->count()) s.scorer = g.scorer;
  if (app.get_option("--positive-words")->count()) s.positive_words = g.positive_words;
  if (app.get_option("--negative-words")->count()) s.negative_words = g.negative_words;
  return pipeline::Settings::from_json(s.to_json());
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"wuiq - web UI-UX quality evaluation", "wuiq"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--project", g.project, "Project directory")->envname("WUIQ_PROJECT");
  app.add_option("--seed", g.seed, "Random seed for clustering")->envname("WUIQ_SEED");
  app.add_option("--cr-threshold", g.cr_threshold, "Consistency-ratio acceptance threshold")->envname("WUIQ_CR_THRESHOLD");
  app.add_option("--scorer", g.scorer, "Sentiment scorer (lexicon, neutral)")->envname("WUIQ_SCORER");
  app.add_option("--positive-words", g.positive_words, "Positive lexicon file")->envname("WUIQ_POSITIVE_WORDS");
  app.add_option("--negative-words", g.negative_words, "Negative lexicon file")->envname("WUIQ_NEGATIVE_WORDS");
  app.add_option("--now", g.now, "Fixed timestamp for every record written")->envname("WUIQ_NOW");

  auto* init = app.add_subcommand("init", "Create a project");
  std::string project_id;
  std::vector<std::string> criteria = ahp::default_criteria();
  init->add_option("--id", project_id, "Project identifier (default: directory name)");
  init->add_option("--criteria", criteria, "Criterion labels")->delimiter(',');

  auto* ingest = app.add_subcommand("ingest", "Append records from a file ('-' for stdin)");
  ingest->require_subcommand(1);
  std::string file;
  auto* ing_surveys = ingest->add_subcommand("surveys", "Survey batch (JSON or CSV)");
  auto* ing_experts = ingest->add_subcommand("experts", "Expert judgment batch (JSON)");
  auto* ing_lh = ingest->add_subcommand("lighthouse", "Lighthouse JSON report");
  for (auto* sc : {ing_surveys, ing_experts, ing_lh}) sc->add_option("file", file, "Input file")->required();

  auto* weights = app.add_subcommand("weights", "Compute and freeze the baseline criterion weights");
  bool override_frozen = false;
  std::string manual;
  bool show = false;
  weights->add_flag("--override", override_frozen, "Recompute frozen weights (only before any iteration)");
  weights->add_option("--set", manual, "Set the weights directly, e.g. 0.36,0.27,0.37");
  weights->add_flag("--show", show, "Print the current weights without computing");

  auto* evaluate = app.add_subcommand("evaluate", "Append a WUIQ iteration");
  double perf = 0, acc = 0, usab = 0, opened = 0, downloaded = 0;
  auto* o_perf = evaluate->add_option("--performance", perf, "Performance score override in [0,1]");
  auto* o_acc = evaluate->add_option("--accessibility", acc, "Accessibility score override in [0,1]");
  auto* o_usab = evaluate->add_option("--usability", usab, "Usability metric override in [0,1]");
  auto* o_open = evaluate->add_option("--opened-at", opened, "Link-open time in seconds");
  auto* o_down = evaluate->add_option("--downloaded-at", downloaded, "Content-downloaded time in seconds");
  o_open->needs(o_down);
  o_down->needs(o_open);

  auto* segment = app.add_subcommand("segment", "Cluster respondents (scree, elbow, fit)");
  std::string k_arg = "auto";
  std::string features = "default";
  bool raw = false;
  segment->add_option("--k", k_arg, "Number of clusters or 'auto'")->envname("WUIQ_K");
  segment->add_option("--features", features, "Feature set: default or all")
      ->check(CLI::IsMember({"default", "all"}));
  segment->add_flag("--raw", raw, "Cluster unstandardized features");

  auto* explain = app.add_subcommand("explain", "Shapley attributions for one cluster");
  std::size_t cluster = 0;
  std::string mode = "indicator";
  explain->add_option("--cluster", cluster, "Cluster index")->required();
  explain->add_option("--mode", mode, "Membership function: indicator or soft")
      ->check(CLI::IsMember({"indicator", "soft"}));

  auto* report = app.add_subcommand("report", "Print the consolidated report");
  bool as_json = false;
  report->add_flag("--json", as_json, "Emit JSON");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string listen = "127.0.0.1:8080";
  std::string token;
  serve->add_option("--listen", listen, "Address to bind (host:port)")->envname("WUIQ_LISTEN");
  serve->add_option("--token", token, "Require this X-WUIQ-Token header")->envname("WUIQ_TOKEN");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const pipeline::Clock clock = g.now.empty() ? pipeline::system_clock() : pipeline::fixed_clock(g.now);

    if (*init) {
      store::Manifest m;
      m.project_id = project_id;
      m.criteria = criteria;
      auto s = resolve_settings(m, g, app);
      m.config = s.to_json();
      m.audit.push_back({{"event", "created"}, {"at", clock()}});
      auto st = store::ProjectStore::init(g.project, m);
      out << "initialized project '" << st.manifest().project_id << "' at " << st.root().string() << "\n";
      return 0;
    }

    auto st = store::ProjectStore::open(g.project);
    const auto settings = resolve_settings(st.manifest(), g, app);
    pipeline::Engine engine(std::move(st), settings, clock);

    if (*ingest) {
      const auto text = read_input(file);
      if (*ing_surveys) {
        const auto r = engine.ingest_surveys(text);
        out << "ingested " << r["ingested"] << " survey responses (" << r["total"] << " total)\n";
        if (r["recovered_truncation"].get<bool>()) out << "note: a truncated trailing record was dropped\n";
      } else if (*ing_experts) {
        const auto r = engine.ingest_experts(text);
        out << "ingested " << r["ingested"] << " expert judgments (" << r["total"] << " total)\n";
        for (const auto& e : r["experts"])
          out << "  " << e["expert_id"].get<std::string>() << ": CR=" << num(e["consistency"]["cr"].get<double>())
              << " " << (e["accepted"].get<bool>() ? "accepted" : "rejected") << "\n";
      } else {
        const auto r = engine.ingest_lighthouse(text);
        out << "audit " << r["source_url"].get<std::string>() << ": performance=" << num(r["performance_score"].get<double>())
            << " accessibility=" << num(r["accessibility_score"].get<double>()) << "\n";
      }
      return 0;
    }

    if (*weights) {
      if (show) {
        const auto w = engine.weights();
        if (!w) throw Error(ErrorCode::not_found, "baseline weights have not been computed");
        print_weights(out, *w);
        return 0;
      }
      std::optional<std::vector<double>> set;
      if (!manual.empty()) set = parse_weight_list(manual);
      print_weights(out, engine.compute_weights(override_frozen, set));
      return 0;
    }

    if (*evaluate) {
      pipeline::EvaluateOptions opt;
      if (o_perf->count()) opt.performance = perf;
      if (o_acc->count()) opt.accessibility = acc;
      if (o_usab->count()) opt.usability = usab;
      if (o_open->count()) opt.timing = metrics::TimingRecord{opened, downloaded};
      print_iteration(out, engine.evaluate(opt));
      return 0;
    }

    if (*segment) {
      pipeline::SegmentOptions opt;
      opt.features = features;
      opt.raw = raw;
      if (k_arg != "auto") {
        long long k = 0;
        if (!batch::detail::parse_int(k_arg, k) || k < 1)
          throw Error(ErrorCode::validation, "--k must be a positive integer or 'auto'", "k");
        opt.k = static_cast<std::size_t>(k);
      }
      print_segments(out, engine.segment(opt));
      out << "\nexports: scree.csv scree.svg clusters.csv\n";
      return 0;
    }

    if (*explain) {
      const auto r = engine.explain(cluster, explainability::parse_mode(mode));
      out << "cluster " << cluster << " (" << mode << "), " << r["instances"] << " instances, base value "
          << num(r["base_value"].get<double>()) << "\n";
      out << "max efficiency residual: " << exports::real(r["max_efficiency_residual"].get<double>()) << "\n\n";
      print_importance(out, r["importance"]);
      const auto tag = "cluster_" + std::to_string(cluster);
      out << "\nexports: attributions_" << tag << ".csv importance_" << tag << ".csv attributions_" << tag << ".svg\n";
      return 0;
    }

    if (*report) {
      const auto r = engine.report();
      if (as_json) out << r.dump(2) << "\n";
      else print_report(out, r);
      return 0;
    }

    if (*serve) {
      service::Service svc(std::move(engine), token);
      service::serve(svc, listen, [&](int port) {
        out << "listening on " << service::parse_listen(listen).first << ":" << port << std::endl;
      });
      return 0;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]";
    if (!e.path().empty()) err << " at " << e.path();
    err << ": " << e.what() << "\n";
    for (const auto& i : e.issues()) err << "  " << (i.path.empty() ? "-" : i.path) << ": " << i.message << "\n";
    return e.code() == ErrorCode::internal ? 2 : 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace wuiq::cli
