#pragma once

// Plain-text and SVG exports for scree curves, cluster summaries and
// attribution data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wuiq/explain.hpp"
#include "wuiq/segmentation.hpp"

namespace wuiq::exports {

// Shortest round-trip decimal form.
inline std::string real(double v) { return nlohmann::json(v).dump(); }

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string display_name(const std::string& feature) {
  if (feature == "duration_months") return "Duration (months)";
  if (feature == "u_check") return "Usability Score";
  return feature;
}

inline std::string scree_csv(std::span<const segmentation::ScreePoint> points) {
  std::string out = "k,sse\n";
  for (const auto& p : points) out += std::to_string(p.k) + "," + real(p.sse) + "\n";
  return out;
}

// Columns: Cluster, one per feature (display names), Size.
inline std::string cluster_summary_csv(const segmentation::ClusterSummary& s) {
  std::string out = "Cluster";
  for (const auto& n : s.feature_names) out += "," + csv_cell(display_name(n));
  out += ",Size\n";
  for (const auto& r : s.rows) {
    out += std::to_string(r.cluster);
    for (double v : r.means) out += "," + real(v);
    out += "," + std::to_string(r.size) + "\n";
  }
  return out;
}

inline std::string cluster_summary_table(const segmentation::ClusterSummary& s, int digits = 2) {
  std::vector<std::string> header{"Cluster"};
  for (const auto& n : s.feature_names) header.push_back(display_name(n));
  header.push_back("Size");
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : s.rows) {
    std::vector<std::string> row{std::to_string(r.cluster)};
    for (double v : r.means) row.push_back(fixed(v, digits));
    row.push_back(std::to_string(r.size));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size()) out += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

inline std::string attribution_csv(std::span<const explainability::AttributionRow> rows) {
  std::string out = "instance_id,cluster,group,phi,value,base_value,effect\n";
  for (const auto& r : rows)
    out += csv_cell(r.instance_id) + "," + std::to_string(r.cluster) + "," + csv_cell(r.group) + "," + real(r.phi) +
           "," + real(r.value) + "," + real(r.base_value) + "," + r.effect + "\n";
  return out;
}

inline std::string importance_csv(std::span<const explainability::GroupImportance> imp) {
  std::string out = "group,mean_abs_phi\n";
  for (const auto& g : imp) out += csv_cell(g.group) + "," + real(g.mean_abs_phi) + "\n";
  return out;
}

inline std::string scree_svg(std::span<const segmentation::ScreePoint> points, std::size_t selected_k) {
  const double w = 480, h = 320, left = 60, right = 20, top = 30, bottom = 50;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" viewBox=\"0 0 480 320\">\n";
  out += "<rect width=\"480\" height=\"320\" fill=\"white\"/>\n";
  out += "<text x=\"240\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">Scree plot (SSE by k)</text>\n";
  if (points.empty()) return out + "</svg>\n";
  double kmin = static_cast<double>(points.front().k), kmax = static_cast<double>(points.back().k);
  double smax = 0.0;
  for (const auto& p : points) smax = std::max(smax, p.sse);
  if (smax <= 0.0) smax = 1.0;
  auto px = [&](double k) { return kmax > kmin ? left + (k - kmin) / (kmax - kmin) * (w - left - right) : (w + left - right) / 2; };
  auto py = [&](double s) { return top + (1.0 - s / smax) * (h - top - bottom); };
  out += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(h - bottom, 1) + "\" x2=\"" + fixed(w - right, 1) +
         "\" y2=\"" + fixed(h - bottom, 1) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(top, 1) + "\" x2=\"" + fixed(left, 1) + "\" y2=\"" +
         fixed(h - bottom, 1) + "\" stroke=\"black\"/>\n";
  std::string poly;
  for (const auto& p : points) poly += fixed(px(static_cast<double>(p.k)), 1) + "," + fixed(py(p.sse), 1) + " ";
  out += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" + poly + "\"/>\n";
  for (const auto& p : points) {
    const bool sel = p.k == selected_k;
    const auto x = fixed(px(static_cast<double>(p.k)), 1), y = fixed(py(p.sse), 1);
    out += "<circle cx=\"" + x + "\" cy=\"" + y + "\" r=\"" + (sel ? "6" : "3") + "\" fill=\"" +
           (sel ? "#d62728" : "#1f77b4") + "\"/>\n";
    out += "<text x=\"" + x + "\" y=\"" + fixed(h - bottom + 16, 1) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + std::to_string(p.k) + "</text>\n";
  }
  out += "<text x=\"240\" y=\"" + fixed(h - 10, 1) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">k (selected: " +
         std::to_string(selected_k) + ")</text>\n";
  return out + "</svg>\n";
}

// Horizontal mean-|phi| bars per group with each instance's phi drawn as a
// dot: red when it increases membership, blue when it decreases it.
inline std::string attribution_svg(std::span<const explainability::ShapExplanation> explanations,
                                   const std::vector<std::string>& group_names, std::size_t cluster) {
  const auto imp = explainability::global_importance(explanations, group_names);
  const double row_h = 36, left = 130, width = 560, plot_w = width - left - 20;
  const double height = 60 + row_h * static_cast<double>(imp.size());
  double extent = 0.0;
  for (const auto& e : explanations)
    for (double p : e.phi) extent = std::max(extent, std::abs(p));
  if (extent <= 0.0) extent = 1.0;
  const double mid = left + plot_w / 2;
  auto px = [&](double v) { return mid + v / extent * (plot_w / 2); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
                    fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fixed(width / 2, 1) +
         "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">Feature contribution to cluster " +
         std::to_string(cluster) + "</text>\n";
  out += "<line x1=\"" + fixed(mid, 1) + "\" y1=\"30\" x2=\"" + fixed(mid, 1) + "\" y2=\"" + fixed(height - 20, 1) +
         "\" stroke=\"#888\"/>\n";
  for (std::size_t r = 0; r < imp.size(); ++r) {
    const double y = 40 + row_h * static_cast<double>(r);
    const auto g = static_cast<std::size_t>(
        std::find(group_names.begin(), group_names.end(), imp[r].group) - group_names.begin());
    out += "<text x=\"" + fixed(left - 8, 1) + "\" y=\"" + fixed(y + 14, 1) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(imp[r].group) + "</text>\n";
    out += "<rect x=\"" + fixed(mid, 1) + "\" y=\"" + fixed(y + 4, 1) + "\" width=\"" +
           fixed(imp[r].mean_abs_phi / extent * (plot_w / 2), 2) + "\" height=\"16\" fill=\"#cccccc\"/>\n";
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      const double p = explanations[i].phi[g];
      const double jitter = static_cast<double>((i * 7919) % 17) - 8.0;
      out += "<circle cx=\"" + fixed(px(p), 2) + "\" cy=\"" + fixed(y + 12 + jitter, 1) + "\" r=\"2\" fill=\"" +
             (p > 0 ? "#d62728" : p < 0 ? "#1f77b4" : "#888888") + "\"/>\n";
    }
  }
  return out + "</svg>\n";
}

}  // namespace wuiq::exports
