#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>

#include "echeat/eval/metrics.hpp"
#include "echeat/ipdetector/ipdetector.hpp"

namespace echeat {

namespace detail {

inline std::string fmt_num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("short write to '" + path + "'");
}

}  // namespace detail

// ----------------------------------------------------------------- CSV

/// Long format, one row per (testset, model) including "overall"; values are
/// means over seeds.
inline std::string report_csv(const MetricsReport& rep) {
  std::ostringstream out;
  out << "testset,model,accuracy,auc\n";
  std::vector<std::string> names = rep.test_sets;
  names.push_back("overall");
  for (const auto& t : names) {
    for (const auto& m : rep.models) {
      const auto auc = rep.mean_auc(m, t);
      out << detail::csv_field(t) << ',' << detail::csv_field(m) << ',' << detail::fmt_num(rep.mean_accuracy(m, t), 10)
          << ',' << (auc ? detail::fmt_num(*auc, 10) : "") << '\n';
    }
  }
  return out.str();
}

/// Table layout: one row per model, one accuracy column per test set, then overall.
inline std::string report_table_csv(const MetricsReport& rep) {
  std::ostringstream out;
  out << "model";
  for (const auto& t : rep.test_sets) out << ',' << detail::csv_field(t);
  out << ",overall\n";
  for (const auto& m : rep.models) {
    out << detail::csv_field(m);
    for (const auto& t : rep.test_sets) out << ',' << detail::fmt_num(100.0 * rep.mean_accuracy(m, t), 6);
    out << ',' << detail::fmt_num(100.0 * rep.mean_accuracy(m, "overall"), 6) << '\n';
  }
  return out.str();
}

// ----------------------------------------------------------------- SVG

namespace detail {

inline constexpr int kSvgWidth = 640;
inline constexpr int kSvgHeight = 480;
inline constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
inline constexpr int kPlotW = kSvgWidth - kLeft - kRight;
inline constexpr int kPlotH = kSvgHeight - kTop - kBottom;

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

inline std::string svg_open(const std::string& title) {
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
    << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kSvgWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << xml_escape(title) << "</text>\n";
  return o.str();
}

// Axes box with 0..1 style ticks mapped from [lo, hi].
inline std::string svg_axes(double xlo, double xhi, double ylo, double yhi, const std::string& xlabel,
                            const std::string& ylabel) {
  std::ostringstream o;
  o << "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << kLeft + kPlotW << "\" y2=\""
    << kTop + kPlotH << "\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + kPlotH << "\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = kLeft + kPlotW * i / 5.0;
    const double fy = kTop + kPlotH - kPlotH * i / 5.0;
    o << "<line x1=\"" << fmt_num(fx) << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << fmt_num(fx) << "\" y2=\""
      << kTop + kPlotH + 5 << "\"/>\n"
      << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt_num(fy) << "\" x2=\"" << kLeft << "\" y2=\"" << fmt_num(fy)
      << "\"/>\n";
  }
  o << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = kLeft + kPlotW * i / 5.0;
    const double fy = kTop + kPlotH - kPlotH * i / 5.0;
    o << "<text x=\"" << fmt_num(fx) << "\" y=\"" << kTop + kPlotH + 18 << "\" text-anchor=\"middle\">"
      << fmt_num(xlo + (xhi - xlo) * i / 5.0, 3) << "</text>\n"
      << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt_num(fy + 4) << "\" text-anchor=\"end\">"
      << fmt_num(ylo + (yhi - ylo) * i / 5.0, 3) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kSvgHeight - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(xlabel) << "</text>\n"
    << "<text x=\"18\" y=\"" << kTop + kPlotH / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << kTop + kPlotH / 2 << ")\">" << xml_escape(ylabel) << "</text>\n</g>\n";
  return o.str();
}

inline std::string svg_legend(const std::vector<std::pair<std::string, std::string>>& entries, bool circles) {
  std::ostringstream o;
  o << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  const int x = kLeft + kPlotW - 190;
  int y = kTop + kPlotH - 18 * static_cast<int>(entries.size()) - 6;
  if (circles) y = kTop + 12;
  for (const auto& [label, color] : entries) {
    if (circles) {
      o << "<circle cx=\"" << x + 8 << "\" cy=\"" << y - 4 << "\" r=\"5\" fill=\"" << color << "\"/>\n";
    } else {
      o << "<line x1=\"" << x << "\" y1=\"" << y - 4 << "\" x2=\"" << x + 18 << "\" y2=\"" << y - 4 << "\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n";
    }
    o << "<text x=\"" << x + 24 << "\" y=\"" << y << "\">" << xml_escape(label) << "</text>\n";
    y += 18;
  }
  o << "</g>\n";
  return o.str();
}

}  // namespace detail

struct NamedRoc {
  std::string name;
  std::vector<RocPoint> curve;
  std::optional<double> auc;
};

/// One polyline per curve, drawn in data coordinates (unit square).
inline std::string roc_svg(const std::vector<NamedRoc>& curves, const std::string& title = "ROC") {
  if (curves.empty()) throw ValidationError("roc plot: no curves");
  using namespace detail;
  std::ostringstream o;
  o << svg_open(title) << svg_axes(0, 1, 0, 1, "False positive rate", "True positive rate");
  o << "<g id=\"curves\" fill=\"none\" transform=\"translate(" << kLeft << ',' << kTop + kPlotH << ") scale(" << kPlotW
    << ",-" << kPlotH << ")\">\n";
  o << "<polyline points=\"0,0 1,1\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\" stroke-width=\"1\" "
       "vector-effect=\"non-scaling-stroke\"/>\n";
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (curves[i].curve.empty()) throw ValidationError("roc plot: curve '" + curves[i].name + "' has no points");
    o << "<polyline stroke=\"" << palette(i) << "\" stroke-width=\"2\" vector-effect=\"non-scaling-stroke\" points=\"";
    for (std::size_t k = 0; k < curves[i].curve.size(); ++k) {
      o << (k ? " " : "") << fmt_num(curves[i].curve[k].fpr, 8) << ',' << fmt_num(curves[i].curve[k].tpr, 8);
    }
    o << "\"/>\n";
    std::string label = curves[i].name;
    if (curves[i].auc) label += " (AUC " + fmt_num(*curves[i].auc, 4) + ")";
    legend.emplace_back(label, palette(i));
  }
  o << "</g>\n" << svg_legend(legend, false) << "</svg>\n";
  return o.str();
}

/// PCA scatter: one circle per IP, colored by class.
inline std::string pca_svg(const std::vector<IpPoint>& points, const std::string& title = "IP addresses (PCA)") {
  if (points.empty()) throw ValidationError("pca plot: no points");
  using namespace detail;
  double xlo = points[0].x, xhi = xlo, ylo = points[0].y, yhi = ylo;
  for (const auto& p : points) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double m = span > 0 ? 0.08 * span : 1.0;
    lo -= m;
    hi += m;
  };
  pad(xlo, xhi);
  pad(ylo, yhi);
  const char* normal_color = "#1f77b4";
  const char* suspected_color = "#d62728";
  std::ostringstream o;
  o << svg_open(title) << svg_axes(xlo, xhi, ylo, yhi, "PC1", "PC2");
  o << "<g id=\"points\" stroke=\"black\" stroke-width=\"0.5\">\n";
  for (const auto& p : points) {
    const double px = kLeft + kPlotW * (p.x - xlo) / (xhi - xlo);
    const double py = kTop + kPlotH - kPlotH * (p.y - ylo) / (yhi - ylo);
    o << "<circle cx=\"" << fmt_num(px) << "\" cy=\"" << fmt_num(py) << "\" r=\"5\" fill=\""
      << (p.label == Label::suspected ? suspected_color : normal_color) << "\" class=\"" << to_string(p.label)
      << "\"><title>" << p.ip.str() << "</title></circle>\n";
  }
  o << "</g>\n" << svg_legend({{"normal", normal_color}, {"suspected", suspected_color}}, true) << "</svg>\n";
  return o.str();
}

inline nlohmann::ordered_json to_json(const std::vector<IpPoint>& points) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    j.push_back({{"ip", p.ip.str()}, {"x", p.x}, {"y", p.y}, {"label", std::string(to_string(p.label))}});
  }
  return j;
}

inline std::vector<IpPoint> points_from_json(const nlohmann::json& j) {
  std::vector<IpPoint> out;
  try {
    for (const auto& p : j) {
      out.push_back({IpAddress::parse(p.at("ip").get<std::string>()), p.at("x").get<double>(), p.at("y").get<double>(),
                     parse_label(p.at("label").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("PCA points: ") + e.what());
  }
  return out;
}

/// ROC curves for plotting from a report: per model (pooled) when the report
/// has several models, otherwise per test set. First seed only.
inline std::vector<NamedRoc> report_curves(const MetricsReport& rep) {
  std::vector<NamedRoc> out;
  if (rep.runs.empty()) return out;
  const std::uint64_t seed = rep.runs.front().seed;
  if (rep.models.size() > 1) {
    for (const auto& r : rep.runs)
      if (r.seed == seed && !r.overall.roc.empty()) out.push_back({r.model, r.overall.roc, r.overall.auc});
  } else {
    for (const auto& t : rep.runs.front().test_sets)
      if (!t.roc.empty()) out.push_back({t.name, t.roc, t.auc});
  }
  return out;
}

}  // namespace echeat
