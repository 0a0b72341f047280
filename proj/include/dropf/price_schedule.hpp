#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace dropf {

inline constexpr int kHours = 24;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PeriodLabel { valley, off_peak, peak };

std::string to_string(PeriodLabel label);
PeriodLabel period_label_from_string(const std::string& s);

// Daily period labels, hours indexed 0..23 (reported as 1..24).
class PeriodMap {
 public:
  explicit PeriodMap(const std::array<PeriodLabel, kHours>& labels);

  PeriodLabel label(int hour) const { return labels_[hour]; }
  std::vector<int> hours_with(PeriodLabel label) const;

  // valley = hours 1-8, off-peak = 9-16 and 23-24, peak = 17-22
  static PeriodMap default_map();

  friend bool operator==(const PeriodMap&, const PeriodMap&) = default;

 private:
  std::array<PeriodLabel, kHours> labels_;
};

enum class TariffKind { flat, tou, rtp };

struct PriceSchedule {
  std::array<double, kHours> prices{};    ///< $/MWh
  std::array<double, kHours> baseline{};  ///< rho0, $/MWh
  TariffKind tariff_kind = TariffKind::flat;

  double min_price() const;
  double max_price() const;
};

struct LoadProfile;  // demand_response.hpp

PriceSchedule flat_baseline(double price);

PriceSchedule build_tou_schedule(const PeriodMap& period_map, double valley, double off_peak,
                                 double peak, const PriceSchedule& baseline);

// Hours are ranked by baseline demand (ties broken toward the earlier hour)
// and assigned to the five levels in blocks of five from the bottom; the
// leftover 24 mod 5 hours form the top block.
PriceSchedule build_rtp_schedule(const LoadProfile& profile,
                                 const std::array<double, 5>& levels,
                                 const PriceSchedule& baseline);

struct TariffConfig {
  PeriodMap period_map = PeriodMap::default_map();
  double baseline_price = 70.0;  ///< flat rho0, $/MWh
  double tou_valley = 30.0;
  double tou_off_peak = 70.0;
  double tou_peak = 120.0;
  std::array<double, 5> rtp_levels{30.0, 50.0, 70.0, 100.0, 120.0};

  static TariffConfig load(const std::string& path);  // JSON
};

}  // namespace dropf
