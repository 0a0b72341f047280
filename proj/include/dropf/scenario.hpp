#pragma once

#include <array>
#include <string>
#include <vector>

#include "dropf/demand_response.hpp"
#include "dropf/opf.hpp"

namespace dropf {

enum class ScenarioTariff { none, tou, rtp };

std::string to_string(ScenarioTariff t);

// "baseline" for none, else "<tariff>_g<percent>" (e.g. "tou_g20").
std::string default_scenario_name(ScenarioTariff tariff, double gamma);

struct ScenarioSpec {
  ScenarioTariff tariff = ScenarioTariff::none;
  double gamma = 0.0;  ///< participation fraction, ignored when tariff == none
  const NetworkCase* network = nullptr;
  const LoadProfile* profile = nullptr;
  const ElasticityMatrix* elasticity = nullptr;
  const TariffConfig* tariff_config = nullptr;
  OpfOptions opf;
  std::string name;  ///< defaults to "<tariff>_g<percent>" when empty
};

struct ScenarioResult {
  std::string name;
  ScenarioTariff tariff = ScenarioTariff::none;
  double gamma = 0.0;
  const NetworkCase* network = nullptr;
  PriceSchedule schedule;
  LoadProfile modified_profile;
  std::vector<OpfSolution> hourly_solutions;  // 24
  std::array<double, kHours> hourly_cost{};   // $/h
  double total_cost = 0.0;                    // $
  std::vector<int> failed_hours;              // 0-based; empty on success
  std::vector<std::string> warnings;

  bool ok() const { return failed_hours.empty(); }
};

// Splits the system profile onto buses in proportion to their base demand;
// reactive load keeps each bus's base power factor.
std::vector<BusLoads> disaggregate_profile(const LoadProfile& profile, const NetworkCase& net);

// Builds the tariff schedule, applies the responsive-load model at the given
// participation, disaggregates, and solves the 24 hourly OPFs in hour order.
ScenarioResult run_scenario(const ScenarioSpec& spec);

struct CostComparison {
  std::array<double, kHours> hourly_delta{};  ///< dr - base, $/h
  double total_delta = 0.0;                   ///< $
  double percent_saving = 0.0;                ///< 100 * (base - dr) / base
  double peak_demand_delta = 0.0;             ///< MW, dr peak - base peak
};

CostComparison compare_scenarios(const ScenarioResult& base, const ScenarioResult& dr);

}  // namespace dropf
