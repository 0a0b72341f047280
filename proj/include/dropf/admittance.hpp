#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "dropf/case_model.hpp"

namespace dropf {

class SingularElementError : public CaseError {
 public:
  using CaseError::CaseError;
};

// Two-port admittance of one branch, p.u. on the system base.
struct BranchAdmittance {
  std::complex<double> yff, yft, ytf, ytt;
};

// Nodal admittance matrix indexed by bus position (not bus id).
struct AdmittanceMatrix {
  Eigen::MatrixXcd y;
  std::vector<BranchAdmittance> branch;

  int size() const { return static_cast<int>(y.rows()); }
  std::complex<double> at(int n, int m) const { return y(n, m); }
  double conductance(int n, int m) const { return y(n, m).real(); }
  double susceptance(int n, int m) const { return y(n, m).imag(); }
};

AdmittanceMatrix build_admittance(const NetworkCase& net);

}  // namespace dropf
