#include "dropf/demand_response.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dropf {

namespace {

int block_index(PeriodLabel label) {
  switch (label) {
    case PeriodLabel::peak: return 0;
    case PeriodLabel::off_peak: return 1;
    case PeriodLabel::valley: return 2;
  }
  return 0;
}

}  // namespace

void LoadProfile::validate() const {
  for (int h = 0; h < kHours; ++h)
    if (!(hourly_mw[h] > 0))
      throw std::invalid_argument("load profile hour " + std::to_string(h + 1) +
                                  " must be positive");
}

double LoadProfile::peak_mw() const {
  return *std::max_element(hourly_mw.begin(), hourly_mw.end());
}

int LoadProfile::peak_hour() const {
  return static_cast<int>(std::max_element(hourly_mw.begin(), hourly_mw.end()) -
                          hourly_mw.begin());
}

LoadProfile LoadProfile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open load profile: " + path);
  LoadProfile p;
  int count = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      if (count >= kHours)
        throw ConfigError(path + ": more than " + std::to_string(kHours) + " values");
      p.hourly_mw[count++] = v;
    }
  }
  if (count != kHours)
    throw ConfigError(path + ": expected " + std::to_string(kHours) + " values, got " +
                      std::to_string(count));
  p.validate();
  return p;
}

ElasticityMatrix::ElasticityMatrix(Eigen::MatrixXd e) : e_(std::move(e)) {
  if (e_.rows() != kHours || e_.cols() != kHours)
    throw std::invalid_argument("elasticity matrix must be 24x24");
  for (int i = 0; i < kHours; ++i) {
    if (e_(i, i) > 0)
      throw std::invalid_argument("self-elasticity must be non-positive at hour " +
                                  std::to_string(i + 1));
    for (int j = 0; j < kHours; ++j)
      if (i != j && e_(i, j) < 0)
        throw std::invalid_argument("cross-elasticity must be non-negative at (" +
                                    std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
  }
}

ElasticityMatrix build_elasticity_matrix(const PeriodMap& period_map,
                                         const Eigen::Matrix3d& block,
                                         double same_period_cross) {
  for (int k = 0; k < 3; ++k) {
    if (block(k, k) > 0)
      throw std::invalid_argument("elasticity block diagonal must be non-positive");
    for (int m = 0; m < 3; ++m)
      if (k != m && block(k, m) < 0)
        throw std::invalid_argument("elasticity block off-diagonal must be non-negative");
  }
  if (same_period_cross < 0)
    throw std::invalid_argument("same-period cross-elasticity must be non-negative");

  Eigen::MatrixXd e(kHours, kHours);
  for (int i = 0; i < kHours; ++i) {
    int bi = block_index(period_map.label(i));
    for (int j = 0; j < kHours; ++j) {
      int bj = block_index(period_map.label(j));
      if (i == j)
        e(i, j) = block(bi, bi);
      else if (bi == bj)
        e(i, j) = same_period_cross;
      else
        e(i, j) = block(bi, bj);
    }
  }
  return ElasticityMatrix(std::move(e));
}

ElasticityConfig ElasticityConfig::defaults() {
  ElasticityConfig cfg;
  cfg.block << -0.1, 0.016, 0.012,  //
      0.016, -0.1, 0.01,            //
      0.012, 0.01, -0.1;
  cfg.same_period_cross = 0.0;
  return cfg;
}

ElasticityConfig ElasticityConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open elasticity config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("elasticity config " + path + ": " + e.what());
  }
  ElasticityConfig cfg = defaults();
  try {
    if (j.contains("block")) {
      const auto& b = j.at("block");
      if (b.size() != 3) throw ConfigError("elasticity block must be 3x3");
      for (int r = 0; r < 3; ++r) {
        if (b.at(r).size() != 3) throw ConfigError("elasticity block must be 3x3");
        for (int c = 0; c < 3; ++c) cfg.block(r, c) = b.at(r).at(c).get<double>();
      }
    }
    if (j.contains("same_period_cross"))
      cfg.same_period_cross = j.at("same_period_cross").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("elasticity config " + path + ": " + e.what());
  }
  return cfg;
}

double single_period_response(double p_d0, double rho, double rho0, double e_self) {
  if (!(p_d0 > 0)) throw std::invalid_argument("baseline demand must be positive");
  if (!(rho0 > 0)) throw std::invalid_argument("baseline price must be positive");
  double p = p_d0 * (1.0 + e_self * (rho - rho0) / rho0);
  return p < 0.0 ? 0.0 : p;
}

double multi_period_shift(int hour, const LoadProfile& profile, const PriceSchedule& schedule,
                          const ElasticityMatrix& e) {
  if (hour < 0 || hour >= kHours) throw std::invalid_argument("hour index out of range");
  double p = profile.hourly_mw[hour];
  for (int j = 0; j < kHours; ++j) {
    if (j == hour) continue;
    p += e.at(hour, j) * profile.hourly_mw[j] / schedule.baseline[j] *
         (schedule.prices[j] - schedule.baseline[j]);
  }
  return p;
}

std::array<double, kHours> responsive_delta(const LoadProfile& profile,
                                            const PriceSchedule& schedule,
                                            const ElasticityMatrix& e) {
  std::array<double, kHours> delta{};
  for (int i = 0; i < kHours; ++i) {
    double bracket = 0.0;
    for (int j = 0; j < kHours; ++j)
      bracket += e.at(i, j) * (schedule.prices[j] - schedule.baseline[j]) / schedule.baseline[j];
    delta[i] = profile.hourly_mw[i] * bracket;
  }
  return delta;
}

LoadProfile responsive_load(const LoadProfile& profile, const PriceSchedule& schedule,
                            const ElasticityMatrix& e, std::vector<std::string>* warnings) {
  const std::array<double, kHours> delta = responsive_delta(profile, schedule, e);
  LoadProfile out = profile;
  for (int i = 0; i < kHours; ++i) {
    double v = profile.hourly_mw[i] + delta[i];
    if (v < 0.0) {
      if (warnings)
        warnings->push_back("responsive load clamped to 0 at hour " + std::to_string(i + 1) +
                            " (model range exceeded)");
      v = 0.0;
    }
    out.hourly_mw[i] = v;
  }
  return out;
}

LoadProfile apply_participation(const LoadProfile& base, const LoadProfile& responsive,
                                double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("participation factor must lie in [0, 1]");
  LoadProfile out = base;
  for (int i = 0; i < kHours; ++i)
    out.hourly_mw[i] = (1.0 - gamma) * base.hourly_mw[i] + gamma * responsive.hourly_mw[i];
  return out;
}

}  // namespace dropf
