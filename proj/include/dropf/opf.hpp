#pragma once

#include <string>
#include <vector>

#include "dropf/power_flow.hpp"

namespace dropf {

class InfeasibleError : public SolveError {
 public:
  InfeasibleError(const std::string& message, std::vector<std::string> binding)
      : SolveError(message), binding_(std::move(binding)) {}
  const std::vector<std::string>& binding_constraints() const { return binding_; }

 private:
  std::vector<std::string> binding_;
};

struct OpfOptions {
  double equality_tol = 1e-8;     ///< p.u., power balance
  double feasibility_tol = 1e-6;  ///< p.u., inequality constraints
  double kkt_tol = 1e-6;          ///< scaled dual/complementarity residual
  int max_iterations = 150;
  double angle_limit_rad = 1.5707963267948966;  ///< bound on branch angle differences
  bool verbose = false;
  bool allow_fallback = true;  ///< penalty loop around Newton power flow
  bool force_fallback = false;
};

struct Violation {
  std::string constraint;
  double magnitude;  // p.u.
};

struct BranchFlowMw {
  double p_from = 0, q_from = 0;  // MW / MVAr
  double p_to = 0, q_to = 0;
};

struct OpfSolution {
  SystemState state;
  double objective = 0.0;  ///< $/h
  std::vector<BranchFlowMw> branch_flows;
  std::vector<Violation> violations;          // empty when converged
  std::vector<std::string> binding_constraints;
  bool converged = false;
  int iterations = 0;
  std::string method;  // "ipm" or "penalty"
};

// a pg^2 + b pg + c, in $/h for pg in MW.
double generation_cost(double pg_mw, const Generator& gen);

// Locally optimal dispatch minimizing total generation cost subject to the
// AC balance equations, voltage/injection bounds, branch ratings, and angle
// limits. Primal-dual interior point over (va, vm, pg, qg); the reference
// bus is pinned at va = 0, vm = 1.0 p.u. Throws InfeasibleError or
// DivergenceError when no acceptable point is found.
OpfSolution solve_opf(const NetworkCase& net, const BusLoads& loads,
                      const OpfOptions& options = {});

// Post-solution constraint audit; entries exceed their tolerance.
std::vector<Violation> check_feasibility(const NetworkCase& net, const AdmittanceMatrix& y,
                                         const BusLoads& loads, const SystemState& state,
                                         const OpfOptions& options);

}  // namespace dropf
