#include "dropf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace dropf {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError("cannot write " + path);
  return out;
}

// fixed-precision helper for SVG coordinates
std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Frame {
  double width = 640, height = 400;
  double left = 56, right = 16, top = 20, bottom = 36;
  double ymin = 0, ymax = 1;

  double xpos(int hour) const {  // hour 0..23
    return left + (width - left - right) * hour / (kHours - 1);
  }
  double ypos(double v) const {
    return height - bottom - (height - top - bottom) * (v - ymin) / (ymax - ymin);
  }
};

void svg_header(std::ofstream& out, const Frame& f, const std::string& title,
                const std::string& y_label) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
      << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << px(f.width / 2) << "\" y=\"14\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"12\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(f.top) << "\" x2=\"" << px(f.left)
      << "\" y2=\"" << px(f.height - f.bottom) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(f.height - f.bottom) << "\" x2=\""
      << px(f.width - f.right) << "\" y2=\"" << px(f.height - f.bottom)
      << "\" stroke=\"black\"/>\n";
  for (int hour = 0; hour < kHours; hour += 4) {
    out << "<text x=\"" << px(f.xpos(hour)) << "\" y=\"" << px(f.height - f.bottom + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << (hour + 1) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = f.ymin + (f.ymax - f.ymin) * k / 4;
    out << "<text x=\"" << px(f.left - 6) << "\" y=\"" << px(f.ypos(v) + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    out << buf << "</text>\n";
  }
  out << "<text x=\"12\" y=\"" << px(f.height / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" "
      << "transform=\"rotate(-90 12 " << px(f.height / 2) << ")\">" << y_label << "</text>\n";
}

void polyline(std::ofstream& out, const Frame& f, const std::array<double, kHours>& values,
              const std::string& color, const std::string& dash) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\"";
  if (!dash.empty()) out << " stroke-dasharray=\"" << dash << "\"";
  out << " stroke-width=\"1.5\" points=\"";
  for (int hour = 0; hour < kHours; ++hour) {
    if (hour) out << ' ';
    out << px(f.xpos(hour)) << ',' << px(f.ypos(values[hour]));
  }
  out << "\"/>\n";
}

}  // namespace

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string per_hour_csv_name(const std::string& scenario) { return scenario + "_hourly.csv"; }
std::string profile_svg_name(const std::string& scenario) { return scenario + "_profile.svg"; }
std::string cost_svg_name(const std::string& scenario) { return scenario + "_cost.svg"; }

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["tool"] = tool;
  j["version"] = version;
  j["timestamp"] = timestamp;
  j["out_dir"] = out_dir;
  nlohmann::json ins = nlohmann::json::object();
  for (const auto& [label, p] : inputs) ins[label] = p;
  j["inputs"] = ins;
  j["scenarios"] = scenarios;
  j["outputs"] = outputs;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_per_hour_csv(const std::string& path, const LoadProfile& baseline,
                        const ScenarioResult& result) {
  auto out = open_out(path);
  out << "hour,baseline_load_mw,modified_load_mw,price_per_mwh,hourly_cost\n";
  for (int t = 0; t < kHours; ++t) {
    out << (t + 1) << ',' << format_full(baseline.hourly_mw[t]) << ','
        << format_full(result.modified_profile.hourly_mw[t]) << ','
        << format_full(result.schedule.prices[t]) << ',' << format_full(result.hourly_cost[t])
        << "\n";
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  auto out = open_out(path);
  out << "scenario,total_cost,peak_load_mw,percent_saving\n";
  for (const SummaryRow& r : rows) {
    out << r.scenario << ',' << format_full(r.total_cost) << ',' << format_full(r.peak_load_mw)
        << ',' << format_full(r.percent_saving) << "\n";
  }
}

void write_profile_svg(const std::string& path, const LoadProfile& baseline,
                       const ScenarioResult& result) {
  Frame f;
  double lo = baseline.hourly_mw[0], hi = lo;
  for (int t = 0; t < kHours; ++t) {
    lo = std::min({lo, baseline.hourly_mw[t], result.modified_profile.hourly_mw[t]});
    hi = std::max({hi, baseline.hourly_mw[t], result.modified_profile.hourly_mw[t]});
  }
  const double pad = std::max(1.0, 0.05 * (hi - lo));
  f.ymin = lo - pad;
  f.ymax = hi + pad;

  auto out = open_out(path);
  svg_header(out, f, "load profile: " + result.name, "MW");
  polyline(out, f, baseline.hourly_mw, "#888888", "4,3");
  polyline(out, f, result.modified_profile.hourly_mw, "#c0392b", "");
  out << "<text x=\"" << px(f.width - f.right) << "\" y=\"" << px(f.top + 10)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#888888\">"
      << "baseline (dashed)</text>\n";
  out << "<text x=\"" << px(f.width - f.right) << "\" y=\"" << px(f.top + 22)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#c0392b\">"
      << result.name << "</text>\n";
  out << "</svg>\n";
}

void write_cost_svg(const std::string& path, const ScenarioResult& result) {
  Frame f;
  f.ymin = 0;
  double hi = 1;
  for (int t = 0; t < kHours; ++t)
    if (std::isfinite(result.hourly_cost[t])) hi = std::max(hi, result.hourly_cost[t]);
  f.ymax = hi * 1.05;

  auto out = open_out(path);
  svg_header(out, f, "hourly operating cost: " + result.name, "$/h");
  const double slot = (f.width - f.left - f.right) / kHours;
  for (int t = 0; t < kHours; ++t) {
    if (!std::isfinite(result.hourly_cost[t])) continue;
    const double x = f.left + slot * t + slot * 0.15;
    const double y = f.ypos(result.hourly_cost[t]);
    out << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(slot * 0.7)
        << "\" height=\"" << px(f.height - f.bottom - y) << "\" fill=\"#2c6fbb\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace dropf
