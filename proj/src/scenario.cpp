#include "dropf/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace dropf {

std::string to_string(ScenarioTariff t) {
  switch (t) {
    case ScenarioTariff::none: return "none";
    case ScenarioTariff::tou: return "tou";
    case ScenarioTariff::rtp: return "rtp";
  }
  return "?";
}

std::string default_scenario_name(ScenarioTariff tariff, double gamma) {
  if (tariff == ScenarioTariff::none) return "baseline";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_g%02d", to_string(tariff).c_str(),
                static_cast<int>(std::lround(gamma * 100)));
  return buf;
}

std::vector<BusLoads> disaggregate_profile(const LoadProfile& profile,
                                           const NetworkCase& net) {
  const double total = net.total_base_pd();
  if (!(total > 0)) throw std::invalid_argument("case has zero total base load");
  const int n = static_cast<int>(net.buses.size());

  std::vector<BusLoads> out(kHours);
  for (int t = 0; t < kHours; ++t) {
    const double scale = profile.hourly_mw[t] / total;
    BusLoads& l = out[t];
    l.pd_mw.resize(n);
    l.qd_mvar.resize(n);
    for (int b = 0; b < n; ++b) {
      l.pd_mw[b] = net.buses[b].base_pd * scale;
      l.qd_mvar[b] =
          profile.constant_power_factor ? net.buses[b].base_qd * scale : net.buses[b].base_qd;
    }
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
  if (!spec.network || !spec.profile || !spec.elasticity || !spec.tariff_config)
    throw std::invalid_argument("scenario spec is missing inputs");
  if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0))
    throw std::invalid_argument("participation factor must lie in [0, 1]");

  const TariffConfig& cfg = *spec.tariff_config;
  const PriceSchedule baseline = flat_baseline(cfg.baseline_price);

  ScenarioResult res;
  res.tariff = spec.tariff;
  res.gamma = spec.tariff == ScenarioTariff::none ? 0.0 : spec.gamma;
  res.network = spec.network;
  res.name =
      spec.name.empty() ? default_scenario_name(spec.tariff, res.gamma) : spec.name;

  switch (spec.tariff) {
    case ScenarioTariff::none:
      res.schedule = baseline;
      res.modified_profile = *spec.profile;
      break;
    case ScenarioTariff::tou:
      res.schedule = build_tou_schedule(cfg.period_map, cfg.tou_valley, cfg.tou_off_peak,
                                        cfg.tou_peak, baseline);
      break;
    case ScenarioTariff::rtp:
      res.schedule = build_rtp_schedule(*spec.profile, cfg.rtp_levels, baseline);
      break;
  }
  if (spec.tariff != ScenarioTariff::none) {
    const LoadProfile responsive =
        responsive_load(*spec.profile, res.schedule, *spec.elasticity, &res.warnings);
    res.modified_profile = apply_participation(*spec.profile, responsive, res.gamma);
  }

  const std::vector<BusLoads> hourly_loads =
      disaggregate_profile(res.modified_profile, *spec.network);

  res.hourly_solutions.resize(kHours);
  res.total_cost = 0.0;
  for (int t = 0; t < kHours; ++t) {
    try {
      res.hourly_solutions[t] = solve_opf(*spec.network, hourly_loads[t], spec.opf);
      res.hourly_cost[t] = res.hourly_solutions[t].objective;
      res.total_cost += res.hourly_cost[t];
    } catch (const SolveError& e) {
      res.failed_hours.push_back(t);
      res.warnings.push_back("hour " + std::to_string(t + 1) + ": " + e.what());
      res.hourly_cost[t] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (!res.failed_hours.empty())
    res.total_cost = std::numeric_limits<double>::quiet_NaN();
  return res;
}

CostComparison compare_scenarios(const ScenarioResult& base, const ScenarioResult& dr) {
  if (!base.network || !dr.network || !(*base.network == *dr.network))
    throw std::invalid_argument("scenario results come from different cases");
  if (!base.ok() || !dr.ok())
    throw std::invalid_argument("cannot compare scenarios with failed hours");

  CostComparison c;
  for (int t = 0; t < kHours; ++t) c.hourly_delta[t] = dr.hourly_cost[t] - base.hourly_cost[t];
  c.total_delta = dr.total_cost - base.total_cost;
  c.percent_saving =
      base.total_cost != 0.0 ? 100.0 * (base.total_cost - dr.total_cost) / base.total_cost : 0.0;
  c.peak_demand_delta = dr.modified_profile.peak_mw() - base.modified_profile.peak_mw();
  return c;
}

}  // namespace dropf
