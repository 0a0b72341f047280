#pragma once

#include <string>
#include <vector>

#include "dropf/scenario.hpp"

namespace dropf {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Planned outputs of a run, written to <out_dir>/manifest.json before any
// scenario executes. Every listed file exists after a successful run.
struct RunManifest {
  std::string tool;
  std::string version;
  std::string timestamp;  // ISO-8601, UTC
  std::string out_dir;
  std::vector<std::pair<std::string, std::string>> inputs;  // label -> path
  std::vector<std::string> scenarios;
  std::vector<std::string> outputs;  // paths relative to out_dir

  void write(const std::string& path) const;
};

// Per-scenario file names used by both the writer and the manifest.
std::string per_hour_csv_name(const std::string& scenario);
std::string profile_svg_name(const std::string& scenario);
std::string cost_svg_name(const std::string& scenario);

// hour, baseline_load_mw, modified_load_mw, price_per_mwh, hourly_cost
// (full-precision decimal rendering; parses back bit-exact)
void write_per_hour_csv(const std::string& path, const LoadProfile& baseline,
                        const ScenarioResult& result);

struct SummaryRow {
  std::string scenario;
  double total_cost = 0;
  double peak_load_mw = 0;
  double percent_saving = 0;
};
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// Baseline vs. modified 24-hour profile as an SVG line chart.
void write_profile_svg(const std::string& path, const LoadProfile& baseline,
                       const ScenarioResult& result);

// Hourly operating cost as an SVG bar chart.
void write_cost_svg(const std::string& path, const ScenarioResult& result);

std::string format_full(double v);  // shortest round-trip decimal

}  // namespace dropf
