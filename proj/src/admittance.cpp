#include "dropf/admittance.hpp"

namespace dropf {

AdmittanceMatrix build_admittance(const NetworkCase& net) {
  const int n = static_cast<int>(net.buses.size());
  AdmittanceMatrix out;
  out.y = Eigen::MatrixXcd::Zero(n, n);
  out.branch.reserve(net.branches.size());

  for (const Branch& br : net.branches) {
    if (br.r == 0.0 && br.x == 0.0)
      throw SingularElementError("branch " + std::to_string(br.from_bus) + "-" +
                                 std::to_string(br.to_bus) + " has zero impedance");
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> ych(0.0, br.b_charging / 2.0);
    const double tau = br.tap_ratio;

    BranchAdmittance ba;
    ba.yff = (ys + ych) / (tau * tau);
    ba.yft = -ys / tau;
    ba.ytf = -ys / tau;
    ba.ytt = ys + ych;
    out.branch.push_back(ba);

    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    out.y(f, f) += ba.yff;
    out.y(f, t) += ba.yft;
    out.y(t, f) += ba.ytf;
    out.y(t, t) += ba.ytt;
  }

  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses[i];
    out.y(i, i) += std::complex<double>(b.shunt_gs, b.shunt_bs) / net.base_mva;
  }
  return out;
}

}  // namespace dropf
