#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

#include "dropf/admittance.hpp"

namespace dropf {

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public SolveError {
 public:
  DivergenceError(const std::string& message, double final_mismatch)
      : SolveError(message), final_mismatch_(final_mismatch) {}
  double final_mismatch() const { return final_mismatch_; }

 private:
  double final_mismatch_;
};

class SingularMatrixError : public SolveError {
 public:
  using SolveError::SolveError;
};

// Operating point: voltages per bus (case order), injections per generator.
struct SystemState {
  Eigen::VectorXd vm;  ///< p.u.
  Eigen::VectorXd va;  ///< rad
  Eigen::VectorXd pg;  ///< MW
  Eigen::VectorXd qg;  ///< MVAr
};

struct BusLoads {
  Eigen::VectorXd pd_mw;
  Eigen::VectorXd qd_mvar;

  static BusLoads base_of(const NetworkCase& net);
};

Eigen::VectorXcd complex_voltages(const SystemState& state);

// Net complex power leaving each bus into the network (and shunts), p.u.
Eigen::VectorXcd bus_injections(const AdmittanceMatrix& y, const Eigen::VectorXcd& v);

// First derivatives of the complex injections w.r.t. bus angles / magnitudes.
void injection_derivatives(const AdmittanceMatrix& y, const Eigen::VectorXcd& v,
                           Eigen::MatrixXcd& ds_dva, Eigen::MatrixXcd& ds_dvm);

// Second derivatives of lam_p' * P(V) + lam_q' * Q(V), blocked by (va, vm).
struct InjectionHessian {
  Eigen::MatrixXd aa, av, va, vv;
};
InjectionHessian injection_lagrangian_hessian(const AdmittanceMatrix& y,
                                              const Eigen::VectorXcd& v,
                                              const Eigen::VectorXd& lam_p,
                                              const Eigen::VectorXd& lam_q);

// One branch end's P or Q as a function of (va_a, va_b, vm_a, vm_b):
//   F = k2 vm_a^2 + vm_a vm_b (c cos(va_a - va_b) + s sin(va_a - va_b))
struct EndFunction {
  double k2 = 0, c = 0, s = 0;
};
EndFunction p_end(std::complex<double> y_aa, std::complex<double> y_ab);
EndFunction q_end(std::complex<double> y_aa, std::complex<double> y_ab);

struct EndEval {
  double value = 0;
  Eigen::Vector4d grad;   // d/d(va_a, va_b, vm_a, vm_b)
  Eigen::Matrix4d hess;
};
EndEval eval_end(const EndFunction& f, double va_a, double va_b, double vm_a, double vm_b,
                 bool with_hessian = false);

struct FlowEnds {
  double p_from = 0, q_from = 0, p_to = 0, q_to = 0;  // p.u.
};
FlowEnds branch_flow(const SystemState& state, const NetworkCase& net, int branch_index,
                     const AdmittanceMatrix& y);

struct Mismatch {
  Eigen::VectorXd dp, dq;  // p.u., (generation - load - injection)
  double max_abs() const;
};
Mismatch bus_mismatch(const SystemState& state, const NetworkCase& net, const BusLoads& loads,
                      const AdmittanceMatrix& y);

// Fixed setpoints for a conventional power flow: active power per generator
// and the scheduled voltage magnitude at its bus.
struct PowerFlowControls {
  Eigen::VectorXd pg_mw;
  Eigen::VectorXd vm_setpoint;

  static PowerFlowControls from_case(const NetworkCase& net);
};

struct PowerFlowOptions {
  double tolerance = 1e-8;  ///< p.u., max |mismatch|
  int max_iterations = 30;
  bool verbose = false;
};

struct PowerFlowResult {
  SystemState state;
  int iterations = 0;
  double max_mismatch = 0;
};

// Newton-Raphson on the polar mismatch equations from a flat start. The slack
// bus absorbs the active/reactive residual; pv buses hold their setpoint
// magnitude. Throws DivergenceError / SingularMatrixError on failure.
PowerFlowResult solve_power_flow(const NetworkCase& net, const BusLoads& loads,
                                 const PowerFlowControls& controls, const AdmittanceMatrix& y,
                                 const PowerFlowOptions& options = {});

}  // namespace dropf
