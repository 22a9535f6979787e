// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sparsepose/errors.hpp"
#include "sparsepose/experiments.hpp"
#include "sparsepose/pose_io.hpp"

namespace sparsepose::experiments {

namespace {

using io::format_double;

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_curves(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "regularizer,trial,stage,estimation_error,recovery_error\n";
  for (const auto& r : report.results) {
    for (std::size_t s = 0; s < r.recovery_curve.size(); ++s) {
      out << csv_field(r.label) << ',' << r.trial << ',' << s << ',';
      if (s < r.estimation_curve.size()) out << format_double(r.estimation_curve[s]);
      out << ',' << format_double(r.recovery_curve[s]) << '\n';
    }
  }
  finish(out, path);
}

void write_summary(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "regularizer,trials,median_relative_error,q1_relative_error,q3_relative_error,"
         "median_stages_to_epsilon,reached_epsilon\n";
  for (const auto& s : report.summaries) {
    out << csv_field(s.label) << ',' << s.trials << ',' << format_double(s.median_relative_error)
        << ',' << format_double(s.q1_relative_error) << ','
        << format_double(s.q3_relative_error) << ','
        << format_double(s.median_stages_to_epsilon) << ',' << s.reached << '\n';
  }
  finish(out, path);
}

void write_comparison(const ExperimentReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "lcnr,l1,epsilon,lcnr_median_stages,l1_median_stages,lcnr_not_slower\n";
  for (const auto& c : report.comparison) {
    out << csv_field(c.lcnr_label) << ',' << csv_field(c.l1_label) << ','
        << format_double(report.epsilon) << ',' << format_double(c.lcnr_median_stages) << ','
        << format_double(c.l1_median_stages) << ',' << (c.lcnr_not_slower ? "true" : "false")
        << '\n';
  }
  finish(out, path);
}

void write_runtime(const ExperimentReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["total_seconds"] = report.total_seconds;
  nlohmann::json arms = nlohmann::json::object();
  for (const auto& s : report.summaries) arms[s.label] = {{"median_seconds", s.median_seconds}};
  j["arms"] = arms;
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

// Median recovery-error curves on a log10 axis.
void write_plot(const ExperimentReport& report, const std::filesystem::path& path) {
  constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 160, kTop = 30,
                   kBottom = 50;
  constexpr double kFloor = 1e-8;
  static const std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                     "#ff7f0e", "#9467bd", "#8c564b"};
  std::vector<std::vector<double>> curves;
  std::size_t len = 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& label : report.labels) {
    auto c = median_curve(report, label, false);
    for (double& v : c) {
      v = std::log10(std::max(v, kFloor));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    len = std::max(len, c.size());
    curves.push_back(std::move(c));
  }
  if (!std::isfinite(lo)) {
    lo = -1.0;
    hi = 1.0;
  }
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1.0);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto x_of = [&](std::size_t s) {
    return kLeft + (len > 1 ? plot_w * static_cast<double>(s) / static_cast<double>(len - 1) : 0.0);
  };
  auto y_of = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << "Median recovery error per stage</text>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (double e = lo; e <= hi; e += 1.0) {
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y_of(e) + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e"
        << static_cast<int>(e) << "</text>\n";
  }
  for (std::size_t s = 0; s < len; ++s) {
    svg << "<text x=\"" << x_of(s) << "\" y=\"" << kTop + plot_h + 16
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << s + 1
        << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">stage</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* color = kColors[k % kColors.size()];
    if (!curves[k].empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t s = 0; s < curves[k].size(); ++s) {
        svg << (s ? " " : "") << x_of(s) << ',' << y_of(curves[k][s]);
      }
      svg << "\"/>\n";
    }
    const double ly = kTop + 16.0 * static_cast<double>(k + 1);
    svg << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kRight + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kWidth - kRight + 36 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(report.labels[k])
        << "</text>\n";
  }
  svg << "</svg>\n";
  auto out = open_output(path);
  out << svg.str();
  finish(out, path);
}

}  // namespace

void export_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_curves(report, dir / "curves.csv");
  write_summary(report, dir / "summary.csv");
  write_comparison(report, dir / "comparison.csv");
  write_plot(report, dir / "plot.svg");
  write_runtime(report, dir / "runtime.json");
}

}  // namespace sparsepose::experiments
