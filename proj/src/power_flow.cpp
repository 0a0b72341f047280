#include "dropf/power_flow.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace dropf {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr std::complex<double> kJ{0.0, 1.0};

}  // namespace

BusLoads BusLoads::base_of(const NetworkCase& net) {
  const int n = static_cast<int>(net.buses.size());
  BusLoads loads;
  loads.pd_mw.resize(n);
  loads.qd_mvar.resize(n);
  for (int i = 0; i < n; ++i) {
    loads.pd_mw[i] = net.buses[i].base_pd;
    loads.qd_mvar[i] = net.buses[i].base_qd;
  }
  return loads;
}

VectorXcd complex_voltages(const SystemState& state) {
  const int n = static_cast<int>(state.vm.size());
  VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::polar(state.vm[i], state.va[i]);
  return v;
}

VectorXcd bus_injections(const AdmittanceMatrix& y, const VectorXcd& v) {
  return v.cwiseProduct((y.y * v).conjugate());
}

void injection_derivatives(const AdmittanceMatrix& y, const VectorXcd& v, MatrixXcd& ds_dva,
                           MatrixXcd& ds_dvm) {
  const int n = static_cast<int>(v.size());
  const VectorXcd ibus = y.y * v;
  VectorXcd vnorm(n);
  for (int i = 0; i < n; ++i) vnorm[i] = v[i] / std::abs(v[i]);

  MatrixXcd diag_v = v.asDiagonal();
  MatrixXcd y_diag_v = y.y * diag_v;

  // dS/dVa = j diag(V) conj(diag(Ibus) - Y diag(V))
  MatrixXcd inner = -y_diag_v;
  inner.diagonal() += ibus;
  ds_dva = kJ * (diag_v * inner.conjugate());

  // dS/dVm = diag(V) conj(Y diag(Vnorm)) + conj(diag(Ibus)) diag(Vnorm)
  ds_dvm = diag_v * (y.y * MatrixXcd(vnorm.asDiagonal())).conjugate();
  ds_dvm += ibus.conjugate().asDiagonal() * MatrixXcd(vnorm.asDiagonal());
}

InjectionHessian injection_lagrangian_hessian(const AdmittanceMatrix& y, const VectorXcd& v,
                                              const VectorXd& lam_p, const VectorXd& lam_q) {
  const int n = static_cast<int>(v.size());
  VectorXcd lam(n);
  for (int i = 0; i < n; ++i) lam[i] = std::complex<double>(lam_p[i], -lam_q[i]);

  const VectorXcd ibus = y.y * v;
  MatrixXcd diag_v = v.asDiagonal();
  MatrixXcd diag_lam = lam.asDiagonal();

  MatrixXcd a = (lam.cwiseProduct(v)).asDiagonal();
  MatrixXcd b = y.y * diag_v;
  MatrixXcd c = a * b.conjugate();
  MatrixXcd d = y.y.adjoint() * diag_v;
  MatrixXcd e = diag_v.conjugate() * (d * diag_lam - MatrixXcd((d * lam).asDiagonal()));
  MatrixXcd f = c - a * MatrixXcd(ibus.conjugate().asDiagonal());
  VectorXd vm_inv(n);
  for (int i = 0; i < n; ++i) vm_inv[i] = 1.0 / std::abs(v[i]);
  MatrixXcd g = vm_inv.cast<std::complex<double>>().asDiagonal();

  MatrixXcd gaa = e + f;
  MatrixXcd gva = kJ * g * (e - f);
  MatrixXcd gav = gva.transpose();
  MatrixXcd gvv = g * (c + c.transpose()) * g;

  InjectionHessian h;
  h.aa = gaa.real();
  h.av = gav.real();
  h.va = gva.real();
  h.vv = gvv.real();
  return h;
}

EndFunction p_end(std::complex<double> y_aa, std::complex<double> y_ab) {
  return {y_aa.real(), y_ab.real(), y_ab.imag()};
}

EndFunction q_end(std::complex<double> y_aa, std::complex<double> y_ab) {
  return {-y_aa.imag(), -y_ab.imag(), y_ab.real()};
}

EndEval eval_end(const EndFunction& f, double va_a, double va_b, double vm_a, double vm_b,
                 bool with_hessian) {
  const double delta = va_a - va_b;
  const double t = f.c * std::cos(delta) + f.s * std::sin(delta);
  const double u = -f.c * std::sin(delta) + f.s * std::cos(delta);

  EndEval out;
  out.value = f.k2 * vm_a * vm_a + vm_a * vm_b * t;
  out.grad << vm_a * vm_b * u, -vm_a * vm_b * u, 2.0 * f.k2 * vm_a + vm_b * t, vm_a * t;
  if (with_hessian) {
    Eigen::Matrix4d h;
    h << -vm_a * vm_b * t, vm_a * vm_b * t, vm_b * u, vm_a * u,  //
        vm_a * vm_b * t, -vm_a * vm_b * t, -vm_b * u, -vm_a * u,  //
        vm_b * u, -vm_b * u, 2.0 * f.k2, t,                       //
        vm_a * u, -vm_a * u, t, 0.0;
    out.hess = h;
  } else {
    out.hess.setZero();
  }
  return out;
}

FlowEnds branch_flow(const SystemState& state, const NetworkCase& net, int branch_index,
                     const AdmittanceMatrix& y) {
  const Branch& br = net.branches[branch_index];
  const BranchAdmittance& ba = y.branch[branch_index];
  const int f = net.bus_index(br.from_bus);
  const int t = net.bus_index(br.to_bus);
  const std::complex<double> vf = std::polar(state.vm[f], state.va[f]);
  const std::complex<double> vt = std::polar(state.vm[t], state.va[t]);
  const std::complex<double> sf = vf * std::conj(ba.yff * vf + ba.yft * vt);
  const std::complex<double> st = vt * std::conj(ba.ytf * vf + ba.ytt * vt);
  return {sf.real(), sf.imag(), st.real(), st.imag()};
}

double Mismatch::max_abs() const {
  double m = 0.0;
  if (dp.size()) m = std::max(m, dp.cwiseAbs().maxCoeff());
  if (dq.size()) m = std::max(m, dq.cwiseAbs().maxCoeff());
  return m;
}

Mismatch bus_mismatch(const SystemState& state, const NetworkCase& net, const BusLoads& loads,
                      const AdmittanceMatrix& y) {
  const int n = static_cast<int>(net.buses.size());
  VectorXd pg_bus = VectorXd::Zero(n);
  VectorXd qg_bus = VectorXd::Zero(n);
  for (size_t g = 0; g < net.generators.size(); ++g) {
    int b = net.bus_index(net.generators[g].bus);
    pg_bus[b] += state.pg[static_cast<int>(g)];
    qg_bus[b] += state.qg[static_cast<int>(g)];
  }
  const VectorXcd s = bus_injections(y, complex_voltages(state));
  Mismatch m;
  m.dp = (pg_bus - loads.pd_mw) / net.base_mva - s.real();
  m.dq = (qg_bus - loads.qd_mvar) / net.base_mva - s.imag();
  return m;
}

PowerFlowControls PowerFlowControls::from_case(const NetworkCase& net) {
  const int ng = static_cast<int>(net.generators.size());
  PowerFlowControls c;
  c.pg_mw.resize(ng);
  c.vm_setpoint.resize(ng);
  for (int g = 0; g < ng; ++g) {
    c.pg_mw[g] = net.generators[g].pg0;
    c.vm_setpoint[g] = net.generators[g].vg;
  }
  return c;
}

PowerFlowResult solve_power_flow(const NetworkCase& net, const BusLoads& loads,
                                 const PowerFlowControls& controls, const AdmittanceMatrix& y,
                                 const PowerFlowOptions& options) {
  const int n = static_cast<int>(net.buses.size());
  const int ng = static_cast<int>(net.generators.size());
  const int slack = net.slack_index();
  const double base = net.base_mva;

  std::vector<int> nonslack, pq;
  for (int i = 0; i < n; ++i) {
    if (net.buses[i].kind == BusKind::slack) continue;
    nonslack.push_back(i);
    if (net.buses[i].kind == BusKind::pq) pq.push_back(i);
  }

  // scheduled injections and voltage targets per bus
  VectorXd p_spec = -loads.pd_mw / base;
  VectorXd q_spec = -loads.qd_mvar / base;
  VectorXd vm_target = VectorXd::Constant(n, 1.0);
  std::vector<char> has_setpoint(n, 0);
  for (int g = 0; g < ng; ++g) {
    int b = net.bus_index(net.generators[g].bus);
    if (net.buses[b].kind == BusKind::pq)
      throw SolveError("power flow requires generator buses to be slack or pv (bus " +
                       std::to_string(net.generators[g].bus) + ")");
    p_spec[b] += controls.pg_mw[g] / base;
    if (!has_setpoint[b]) {
      vm_target[b] = controls.vm_setpoint[g];
      has_setpoint[b] = 1;
    }
  }

  SystemState state;
  state.vm = VectorXd::Constant(n, 1.0);
  state.va = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (net.buses[i].kind != BusKind::pq) state.vm[i] = vm_target[i];

  const int n_ns = static_cast<int>(nonslack.size());
  const int n_pq = static_cast<int>(pq.size());
  const int nx = n_ns + n_pq;

  int iterations = 0;
  double max_mismatch = 0.0;
  while (true) {
    const VectorXcd v = complex_voltages(state);
    const VectorXcd s = bus_injections(y, v);

    VectorXd rhs(nx);
    for (int k = 0; k < n_ns; ++k) rhs[k] = p_spec[nonslack[k]] - s[nonslack[k]].real();
    for (int k = 0; k < n_pq; ++k) rhs[n_ns + k] = q_spec[pq[k]] - s[pq[k]].imag();

    max_mismatch = nx ? rhs.cwiseAbs().maxCoeff() : 0.0;
    if (options.verbose)
      std::fprintf(stderr, "  pf iter %2d  max mismatch %.3e\n", iterations, max_mismatch);
    if (!std::isfinite(max_mismatch))
      throw DivergenceError("power flow diverged (non-finite mismatch)", max_mismatch);
    if (max_mismatch <= options.tolerance) break;
    if (iterations >= options.max_iterations)
      throw DivergenceError("power flow did not converge in " +
                                std::to_string(options.max_iterations) +
                                " iterations (max mismatch " + std::to_string(max_mismatch) +
                                " p.u.)",
                            max_mismatch);

    MatrixXcd ds_dva, ds_dvm;
    injection_derivatives(y, v, ds_dva, ds_dvm);

    MatrixXd jac(nx, nx);
    for (int r = 0; r < n_ns; ++r) {
      for (int k = 0; k < n_ns; ++k) jac(r, k) = ds_dva(nonslack[r], nonslack[k]).real();
      for (int k = 0; k < n_pq; ++k) jac(r, n_ns + k) = ds_dvm(nonslack[r], pq[k]).real();
    }
    for (int r = 0; r < n_pq; ++r) {
      for (int k = 0; k < n_ns; ++k) jac(n_ns + r, k) = ds_dva(pq[r], nonslack[k]).imag();
      for (int k = 0; k < n_pq; ++k) jac(n_ns + r, n_ns + k) = ds_dvm(pq[r], pq[k]).imag();
    }

    Eigen::FullPivLU<MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw SingularMatrixError("singular power-flow Jacobian at iteration " +
                                std::to_string(iterations));
    const VectorXd dx = lu.solve(rhs);

    for (int k = 0; k < n_ns; ++k) state.va[nonslack[k]] += dx[k];
    for (int k = 0; k < n_pq; ++k) state.vm[pq[k]] += dx[n_ns + k];
    ++iterations;
  }

  // distribute bus-level generation onto units: the first slack-bus unit
  // absorbs the active residual; reactive power splits evenly per bus
  const VectorXcd s = bus_injections(y, complex_voltages(state));
  state.pg = controls.pg_mw;
  state.qg = VectorXd::Zero(ng);
  for (int i = 0; i < n; ++i) {
    if (net.buses[i].kind == BusKind::pq) continue;
    std::vector<int> gens = net.generators_at(net.buses[i].id);
    if (gens.empty()) continue;
    const double qg_total = s[i].imag() * base + loads.qd_mvar[i];
    for (int g : gens) state.qg[g] = qg_total / static_cast<double>(gens.size());
    if (i == slack) {
      double pg_total = s[i].real() * base + loads.pd_mw[i];
      for (size_t k = 1; k < gens.size(); ++k) pg_total -= controls.pg_mw[gens[k]];
      state.pg[gens[0]] = pg_total;
    }
  }

  return {std::move(state), iterations, max_mismatch};
}

}  // namespace dropf
