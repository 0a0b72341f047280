#include "dropf/price_schedule.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "dropf/demand_response.hpp"
#include "json.hpp"

namespace dropf {

std::string to_string(PeriodLabel label) {
  switch (label) {
    case PeriodLabel::valley: return "valley";
    case PeriodLabel::off_peak: return "off_peak";
    case PeriodLabel::peak: return "peak";
  }
  return "?";
}

PeriodLabel period_label_from_string(const std::string& s) {
  if (s == "valley") return PeriodLabel::valley;
  if (s == "off_peak") return PeriodLabel::off_peak;
  if (s == "peak") return PeriodLabel::peak;
  throw ConfigError("unknown period label '" + s + "'");
}

PeriodMap::PeriodMap(const std::array<PeriodLabel, kHours>& labels) : labels_(labels) {
  std::set<PeriodLabel> used(labels.begin(), labels.end());
  if (used.size() != 3)
    throw std::invalid_argument("period map must use all of valley, off_peak, peak");
}

std::vector<int> PeriodMap::hours_with(PeriodLabel label) const {
  std::vector<int> out;
  for (int h = 0; h < kHours; ++h)
    if (labels_[h] == label) out.push_back(h);
  return out;
}

PeriodMap PeriodMap::default_map() {
  std::array<PeriodLabel, kHours> labels{};
  for (int h = 0; h < kHours; ++h) {
    if (h < 8)
      labels[h] = PeriodLabel::valley;  // hours 1-8
    else if (h < 16 || h >= 22)
      labels[h] = PeriodLabel::off_peak;  // hours 9-16, 23-24
    else
      labels[h] = PeriodLabel::peak;  // hours 17-22
  }
  return PeriodMap(labels);
}

double PriceSchedule::min_price() const {
  return *std::min_element(prices.begin(), prices.end());
}

double PriceSchedule::max_price() const {
  return *std::max_element(prices.begin(), prices.end());
}

PriceSchedule flat_baseline(double price) {
  if (!(price > 0)) throw std::invalid_argument("baseline price must be positive");
  PriceSchedule s;
  s.prices.fill(price);
  s.baseline.fill(price);
  s.tariff_kind = TariffKind::flat;
  return s;
}

PriceSchedule build_tou_schedule(const PeriodMap& period_map, double valley, double off_peak,
                                 double peak, const PriceSchedule& baseline) {
  if (!(valley > 0)) throw std::invalid_argument("TOU levels must be positive");
  if (!(valley <= off_peak && off_peak <= peak))
    throw std::invalid_argument("TOU levels must satisfy valley <= off_peak <= peak");
  PriceSchedule s;
  s.baseline = baseline.baseline;
  s.tariff_kind = TariffKind::tou;
  for (int h = 0; h < kHours; ++h) {
    switch (period_map.label(h)) {
      case PeriodLabel::valley: s.prices[h] = valley; break;
      case PeriodLabel::off_peak: s.prices[h] = off_peak; break;
      case PeriodLabel::peak: s.prices[h] = peak; break;
    }
  }
  return s;
}

PriceSchedule build_rtp_schedule(const LoadProfile& profile,
                                 const std::array<double, 5>& levels,
                                 const PriceSchedule& baseline) {
  for (double lv : levels)
    if (!(lv > 0)) throw std::invalid_argument("RTP levels must be positive");
  for (int k = 1; k < 5; ++k)
    if (!(levels[k - 1] < levels[k]))
      throw std::invalid_argument("RTP levels must be strictly increasing");

  std::array<int, kHours> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (profile.hourly_mw[a] != profile.hourly_mw[b])
      return profile.hourly_mw[a] < profile.hourly_mw[b];
    return a < b;
  });

  PriceSchedule s;
  s.baseline = baseline.baseline;
  s.tariff_kind = TariffKind::rtp;
  for (int rank = 0; rank < kHours; ++rank) {
    int level = std::min(rank / 5, 4);  // blocks of five; the 4 leftovers land on top
    s.prices[order[rank]] = levels[level];
  }
  return s;
}

TariffConfig TariffConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tariff config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("tariff config " + path + ": " + e.what());
  }

  TariffConfig cfg;
  try {
    if (j.contains("baseline_price")) cfg.baseline_price = j.at("baseline_price").get<double>();
    if (j.contains("tou_levels")) {
      const auto& t = j.at("tou_levels");
      cfg.tou_valley = t.at("valley").get<double>();
      cfg.tou_off_peak = t.at("off_peak").get<double>();
      cfg.tou_peak = t.at("peak").get<double>();
    }
    if (j.contains("rtp_levels")) {
      const auto& r = j.at("rtp_levels");
      if (r.size() != 5) throw ConfigError("rtp_levels must have exactly 5 entries");
      for (int k = 0; k < 5; ++k) cfg.rtp_levels[k] = r.at(k).get<double>();
    }
    if (j.contains("period_map")) {
      std::array<PeriodLabel, kHours> labels{};
      std::array<bool, kHours> set{};
      for (const auto& [name, hours] : j.at("period_map").items()) {
        PeriodLabel label = period_label_from_string(name);
        for (const auto& h : hours) {
          int hour = h.get<int>();
          if (hour < 1 || hour > kHours)
            throw ConfigError("period_map hour out of range: " + std::to_string(hour));
          labels[hour - 1] = label;
          set[hour - 1] = true;
        }
      }
      for (int h = 0; h < kHours; ++h)
        if (!set[h]) throw ConfigError("period_map misses hour " + std::to_string(h + 1));
      cfg.period_map = PeriodMap(labels);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("tariff config " + path + ": " + e.what());
  }
  if (!(cfg.baseline_price > 0)) throw ConfigError("baseline_price must be positive");
  return cfg;
}

}  // namespace dropf
