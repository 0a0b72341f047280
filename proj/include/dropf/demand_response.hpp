#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "dropf/price_schedule.hpp"

namespace dropf {

// 24-hour system demand, MW.
struct LoadProfile {
  std::array<double, kHours> hourly_mw{};
  bool constant_power_factor = true;  ///< bus Q tracks P when disaggregating

  void validate() const;  // every hour strictly positive
  double peak_mw() const;
  int peak_hour() const;  // 0-based, earliest on ties

  static LoadProfile load(const std::string& path);  // 24 numbers, # comments

  friend bool operator==(const LoadProfile&, const LoadProfile&) = default;
};

// Hour-to-hour price sensitivities: self terms (diagonal) <= 0, cross terms >= 0.
class ElasticityMatrix {
 public:
  explicit ElasticityMatrix(Eigen::MatrixXd e);

  double at(int i, int j) const { return e_(i, j); }
  const Eigen::MatrixXd& matrix() const { return e_; }

 private:
  Eigen::MatrixXd e_;
};

// Expands a 3x3 period-block matrix (rows/cols ordered peak, off-peak, valley)
// onto hours: the diagonal cell of a period is used only for i == j; two
// distinct hours of the same period couple through `same_period_cross`.
ElasticityMatrix build_elasticity_matrix(const PeriodMap& period_map,
                                         const Eigen::Matrix3d& block,
                                         double same_period_cross = 0.0);

struct ElasticityConfig {
  Eigen::Matrix3d block;  // peak, off-peak, valley order
  double same_period_cross = 0.0;

  static ElasticityConfig defaults();  // -0.1 self, 0.016/0.012/0.01 cross
  static ElasticityConfig load(const std::string& path);  // JSON
};

// P_d0 * {1 + e_self * (rho - rho0) / rho0}
double single_period_response(double p_d0, double rho, double rho0, double e_self);

// P_d0(i) + sum_{j != i} E(i,j) * P_d0(j) / rho0(j) * (rho(j) - rho0(j))
double multi_period_shift(int hour, const LoadProfile& profile, const PriceSchedule& schedule,
                          const ElasticityMatrix& e);

// Hour-wise demand change of the combined single/multi-period model:
//   dP(i) = P_d0(i) * sum_j E(i,j) * (rho(j) - rho0(j)) / rho0(j)
// (the j == i term carries the self-elasticity).
std::array<double, kHours> responsive_delta(const LoadProfile& profile,
                                            const PriceSchedule& schedule,
                                            const ElasticityMatrix& e);

// Baseline plus responsive_delta, clamped at zero; a clamp appends a
// model-range warning when `warnings` is given.
LoadProfile responsive_load(const LoadProfile& profile, const PriceSchedule& schedule,
                            const ElasticityMatrix& e,
                            std::vector<std::string>* warnings = nullptr);

// (1 - gamma) * base + gamma * responsive, hour-wise.
LoadProfile apply_participation(const LoadProfile& base, const LoadProfile& responsive,
                                double gamma);

}  // namespace dropf
