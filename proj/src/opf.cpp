#include "dropf/opf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace dropf {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

std::string bus_tag(const NetworkCase& net, int bus_idx) {
  return "bus " + std::to_string(net.buses[bus_idx].id);
}

std::string gen_tag(const NetworkCase& net, int gen_idx) {
  return "gen " + std::to_string(gen_idx + 1) + " @bus " +
         std::to_string(net.generators[gen_idx].bus);
}

std::string branch_tag(const NetworkCase& net, int br_idx) {
  const Branch& br = net.branches[br_idx];
  return "branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);
}

// Nonlinear program behind the per-hour OPF. Variables are stacked as
// [va (non-slack) | vm (non-slack) | pg | qg], all per unit on the system
// base; the slack bus keeps va = 0 and vm = 1.
class OpfProblem {
 public:
  OpfProblem(const NetworkCase& net, const AdmittanceMatrix& y, const BusLoads& loads,
             const OpfOptions& options)
      : net_(net), y_(y), options_(options) {
    nb_ = static_cast<int>(net.buses.size());
    ng_ = static_cast<int>(net.generators.size());
    slack_ = net.slack_index();
    base_ = net.base_mva;

    pd_pu_ = loads.pd_mw / base_;
    qd_pu_ = loads.qd_mvar / base_;

    va_pos_.assign(nb_, -1);
    vm_pos_.assign(nb_, -1);
    int k = 0;
    for (int b = 0; b < nb_; ++b)
      if (b != slack_) va_pos_[b] = k++;
    n_red_ = k;
    for (int b = 0; b < nb_; ++b)
      if (b != slack_) vm_pos_[b] = k++;
    off_pg_ = k;
    off_qg_ = k + ng_;
    nx_ = k + 2 * ng_;

    gen_bus_.resize(ng_);
    for (int g = 0; g < ng_; ++g) gen_bus_[g] = net.bus_index(net.generators[g].bus);

    for (int i = 0; i < static_cast<int>(net.branches.size()); ++i)
      if (net.branches[i].s_max > 0) rated_.push_back(i);

    niq_ = 4 * n_red_ + 4 * ng_ + 2 * static_cast<int>(net.branches.size()) +
           2 * static_cast<int>(rated_.size());
  }

  int nx() const { return nx_; }
  int neq() const { return 2 * nb_; }
  int niq() const { return niq_; }
  double base() const { return base_; }
  const std::vector<int>& rated_branches() const { return rated_; }

  VectorXd initial_point() const {
    VectorXd x = VectorXd::Zero(nx_);
    for (int b = 0; b < nb_; ++b) {
      if (b == slack_) continue;
      const Bus& bus = net_.buses[b];
      double span = bus.vmax - bus.vmin;
      x[vm_pos_[b] ] = std::clamp(1.0, bus.vmin + 0.01 * span, bus.vmax - 0.01 * span);
    }
    const double total_pd = pd_pu_.sum();
    double pmax_sum = 0;
    for (const Generator& g : net_.generators) pmax_sum += g.pmax;
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net_.generators[g];
      double pspan = (gen.pmax - gen.pmin) / base_;
      double pg = pmax_sum > 0 ? total_pd * gen.pmax / pmax_sum : 0.0;
      x[off_pg_ + g] =
          std::clamp(pg, gen.pmin / base_ + 0.05 * pspan, gen.pmax / base_ - 0.05 * pspan);
      x[off_qg_ + g] = 0.5 * (gen.qmin + gen.qmax) / base_;
    }
    return x;
  }

  void voltages(const VectorXd& x, VectorXd& vm, VectorXd& va) const {
    vm.resize(nb_);
    va.resize(nb_);
    for (int b = 0; b < nb_; ++b) {
      if (b == slack_) {
        vm[b] = 1.0;
        va[b] = 0.0;
      } else {
        va[b] = x[va_pos_[b]];
        vm[b] = x[vm_pos_[b]];
      }
    }
  }

  // objective in $/h divided by base_mva (keeps multipliers near $/MWh)
  double objective(const VectorXd& x) const {
    double f = 0;
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net_.generators[g];
      const double pg = x[off_pg_ + g];
      f += gen.cost_a * base_ * pg * pg + gen.cost_b * pg + gen.cost_c / base_;
    }
    return f;
  }

  VectorXd objective_gradient(const VectorXd& x) const {
    VectorXd df = VectorXd::Zero(nx_);
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net_.generators[g];
      df[off_pg_ + g] = 2.0 * gen.cost_a * base_ * x[off_pg_ + g] + gen.cost_b;
    }
    return df;
  }

  void equalities(const VectorXd& x, VectorXd& g, MatrixXd* jg) const {
    VectorXd vm, va;
    voltages(x, vm, va);
    VectorXcd v(nb_);
    for (int b = 0; b < nb_; ++b) v[b] = std::polar(vm[b], va[b]);
    const VectorXcd s = bus_injections(y_, v);

    g.resize(neq());
    for (int b = 0; b < nb_; ++b) {
      double pg_bus = 0, qg_bus = 0;
      for (int gi = 0; gi < ng_; ++gi) {
        if (gen_bus_[gi] != b) continue;
        pg_bus += x[off_pg_ + gi];
        qg_bus += x[off_qg_ + gi];
      }
      g[b] = s[b].real() - pg_bus + pd_pu_[b];
      g[nb_ + b] = s[b].imag() - qg_bus + qd_pu_[b];
    }

    if (!jg) return;
    MatrixXcd ds_dva, ds_dvm;
    injection_derivatives(y_, v, ds_dva, ds_dvm);
    jg->setZero(neq(), nx_);
    for (int b = 0; b < nb_; ++b) {
      for (int m = 0; m < nb_; ++m) {
        if (m == slack_) continue;
        (*jg)(b, va_pos_[m]) = ds_dva(b, m).real();
        (*jg)(b, vm_pos_[m]) = ds_dvm(b, m).real();
        (*jg)(nb_ + b, va_pos_[m]) = ds_dva(b, m).imag();
        (*jg)(nb_ + b, vm_pos_[m]) = ds_dvm(b, m).imag();
      }
    }
    for (int gi = 0; gi < ng_; ++gi) {
      (*jg)(gen_bus_[gi], off_pg_ + gi) = -1.0;
      (*jg)(nb_ + gen_bus_[gi], off_qg_ + gi) = -1.0;
    }
  }

  void inequalities(const VectorXd& x, VectorXd& h, MatrixXd* jh) const {
    VectorXd vm, va;
    voltages(x, vm, va);
    h.resize(niq_);
    if (jh) jh->setZero(niq_, nx_);
    int r = 0;

    for (int b = 0; b < nb_; ++b) {
      if (b == slack_) continue;
      const Bus& bus = net_.buses[b];
      h[r] = bus.vmin - vm[b];
      if (jh) (*jh)(r, vm_pos_[b]) = -1.0;
      ++r;
      h[r] = vm[b] - bus.vmax;
      if (jh) (*jh)(r, vm_pos_[b]) = 1.0;
      ++r;
    }
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net_.generators[g];
      h[r] = gen.pmin / base_ - x[off_pg_ + g];
      if (jh) (*jh)(r, off_pg_ + g) = -1.0;
      ++r;
      h[r] = x[off_pg_ + g] - gen.pmax / base_;
      if (jh) (*jh)(r, off_pg_ + g) = 1.0;
      ++r;
      h[r] = gen.qmin / base_ - x[off_qg_ + g];
      if (jh) (*jh)(r, off_qg_ + g) = -1.0;
      ++r;
      h[r] = x[off_qg_ + g] - gen.qmax / base_;
      if (jh) (*jh)(r, off_qg_ + g) = 1.0;
      ++r;
    }
    for (size_t i = 0; i < net_.branches.size(); ++i) {
      const Branch& br = net_.branches[i];
      const int f = net_.bus_index(br.from_bus);
      const int t = net_.bus_index(br.to_bus);
      const double diff = va[f] - va[t];
      h[r] = diff - options_.angle_limit_rad;
      if (jh) {
        if (va_pos_[f] >= 0) (*jh)(r, va_pos_[f]) = 1.0;
        if (va_pos_[t] >= 0) (*jh)(r, va_pos_[t]) = -1.0;
      }
      ++r;
      h[r] = -options_.angle_limit_rad - diff;
      if (jh) {
        if (va_pos_[f] >= 0) (*jh)(r, va_pos_[f]) = -1.0;
        if (va_pos_[t] >= 0) (*jh)(r, va_pos_[t]) = 1.0;
      }
      ++r;
    }
    for (int bi : rated_) {
      const Branch& br = net_.branches[bi];
      const BranchAdmittance& ba = y_.branch[bi];
      const int f = net_.bus_index(br.from_bus);
      const int t = net_.bus_index(br.to_bus);
      const double smax2 = (br.s_max / base_) * (br.s_max / base_);

      // from end, then to end
      for (int side = 0; side < 2; ++side) {
        const int a = side == 0 ? f : t;
        const int b = side == 0 ? t : f;
        const EndFunction pf =
            side == 0 ? p_end(ba.yff, ba.yft) : p_end(ba.ytt, ba.ytf);
        const EndFunction qf =
            side == 0 ? q_end(ba.yff, ba.yft) : q_end(ba.ytt, ba.ytf);
        const EndEval pe = eval_end(pf, va[a], va[b], vm[a], vm[b]);
        const EndEval qe = eval_end(qf, va[a], va[b], vm[a], vm[b]);
        h[r] = pe.value * pe.value + qe.value * qe.value - smax2;
        if (jh) {
          const Eigen::Vector4d grad = 2.0 * (pe.value * pe.grad + qe.value * qe.grad);
          const int cols[4] = {va_pos_[a], va_pos_[b], vm_pos_[a], vm_pos_[b]};
          for (int kc = 0; kc < 4; ++kc)
            if (cols[kc] >= 0) (*jh)(r, cols[kc]) += grad[kc];
        }
        ++r;
      }
    }
  }

  MatrixXd lagrangian_hessian(const VectorXd& x, const VectorXd& lam,
                              const VectorXd& mu) const {
    MatrixXd hess = MatrixXd::Zero(nx_, nx_);
    for (int g = 0; g < ng_; ++g)
      hess(off_pg_ + g, off_pg_ + g) = 2.0 * net_.generators[g].cost_a * base_;

    VectorXd vm, va;
    voltages(x, vm, va);
    VectorXcd v(nb_);
    for (int b = 0; b < nb_; ++b) v[b] = std::polar(vm[b], va[b]);
    const InjectionHessian inj =
        injection_lagrangian_hessian(y_, v, lam.head(nb_), lam.tail(nb_));
    for (int i = 0; i < nb_; ++i) {
      if (i == slack_) continue;
      for (int j = 0; j < nb_; ++j) {
        if (j == slack_) continue;
        hess(va_pos_[i], va_pos_[j]) += inj.aa(i, j);
        hess(va_pos_[i], vm_pos_[j]) += inj.av(i, j);
        hess(vm_pos_[i], va_pos_[j]) += inj.va(i, j);
        hess(vm_pos_[i], vm_pos_[j]) += inj.vv(i, j);
      }
    }

    // flow-limit rows sit at the tail of the multiplier vector
    int r = niq_ - 2 * static_cast<int>(rated_.size());
    for (int bi : rated_) {
      const Branch& br = net_.branches[bi];
      const BranchAdmittance& ba = y_.branch[bi];
      const int f = net_.bus_index(br.from_bus);
      const int t = net_.bus_index(br.to_bus);
      for (int side = 0; side < 2; ++side) {
        const double m = mu[r];
        const int a = side == 0 ? f : t;
        const int b = side == 0 ? t : f;
        const EndFunction pf =
            side == 0 ? p_end(ba.yff, ba.yft) : p_end(ba.ytt, ba.ytf);
        const EndFunction qf =
            side == 0 ? q_end(ba.yff, ba.yft) : q_end(ba.ytt, ba.ytf);
        const EndEval pe = eval_end(pf, va[a], va[b], vm[a], vm[b], true);
        const EndEval qe = eval_end(qf, va[a], va[b], vm[a], vm[b], true);
        const Eigen::Matrix4d local =
            2.0 * (pe.grad * pe.grad.transpose() + pe.value * pe.hess +
                   qe.grad * qe.grad.transpose() + qe.value * qe.hess);
        const int cols[4] = {va_pos_[a], va_pos_[b], vm_pos_[a], vm_pos_[b]};
        for (int ki = 0; ki < 4; ++ki) {
          if (cols[ki] < 0) continue;
          for (int kj = 0; kj < 4; ++kj)
            if (cols[kj] >= 0) hess(cols[ki], cols[kj]) += m * local(ki, kj);
        }
        ++r;
      }
    }
    return hess;
  }

  std::string eq_name(int i) const {
    if (i < nb_) return "P_balance[" + bus_tag(net_, i) + "]";
    return "Q_balance[" + bus_tag(net_, i - nb_) + "]";
  }

  std::string iq_name(int i) const {
    int r = i;
    for (int b = 0; b < nb_; ++b) {
      if (b == slack_) continue;
      if (r == 0) return "vm_min[" + bus_tag(net_, b) + "]";
      if (r == 1) return "vm_max[" + bus_tag(net_, b) + "]";
      r -= 2;
    }
    for (int g = 0; g < ng_; ++g) {
      static const char* kind[4] = {"pg_min", "pg_max", "qg_min", "qg_max"};
      if (r < 4) return std::string(kind[r]) + "[" + gen_tag(net_, g) + "]";
      r -= 4;
    }
    for (size_t bi = 0; bi < net_.branches.size(); ++bi) {
      if (r == 0) return "angle_max[" + branch_tag(net_, static_cast<int>(bi)) + "]";
      if (r == 1) return "angle_min[" + branch_tag(net_, static_cast<int>(bi)) + "]";
      r -= 2;
    }
    for (int bi : rated_) {
      if (r == 0) return "smax_from[" + branch_tag(net_, bi) + "]";
      if (r == 1) return "smax_to[" + branch_tag(net_, bi) + "]";
      r -= 2;
    }
    return "h[" + std::to_string(i) + "]";
  }

  SystemState state_of(const VectorXd& x) const {
    SystemState st;
    voltages(x, st.vm, st.va);
    st.pg.resize(ng_);
    st.qg.resize(ng_);
    for (int g = 0; g < ng_; ++g) {
      st.pg[g] = x[off_pg_ + g] * base_;
      st.qg[g] = x[off_qg_ + g] * base_;
    }
    return st;
  }

 private:
  const NetworkCase& net_;
  const AdmittanceMatrix& y_;
  const OpfOptions& options_;
  int nb_ = 0, ng_ = 0, slack_ = -1;
  int n_red_ = 0, off_pg_ = 0, off_qg_ = 0, nx_ = 0, niq_ = 0;
  double base_ = 100.0;
  VectorXd pd_pu_, qd_pu_;
  std::vector<int> va_pos_, vm_pos_, gen_bus_, rated_;
};

struct IpmOutcome {
  VectorXd x;
  VectorXd h;
  bool converged = false;
  int iterations = 0;
  double feas = 0, grad = 0, comp = 0;
};

IpmOutcome run_ipm(const OpfProblem& prob, const OpfOptions& options) {
  const int nx = prob.nx();
  const int neq = prob.neq();
  const int niq = prob.niq();
  const double sigma = 0.1;
  const double xi = 0.99995;

  VectorXd x = prob.initial_point();
  VectorXd g, h;
  MatrixXd jg, jh;
  prob.equalities(x, g, &jg);
  prob.inequalities(x, h, &jh);

  VectorXd lam = VectorXd::Zero(neq);
  VectorXd z(niq), mu(niq);
  for (int i = 0; i < niq; ++i) {
    z[i] = std::max(1.0, -h[i]);
    mu[i] = 1.0 / z[i];
  }
  double gamma = 1.0;

  IpmOutcome out;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    const VectorXd df = prob.objective_gradient(x);
    const VectorXd lx = df + jg.transpose() * lam + jh.transpose() * mu;

    const double feas_eq = neq ? g.cwiseAbs().maxCoeff() : 0.0;
    const double feas_iq = niq ? h.maxCoeff() : 0.0;
    const double gradcond =
        lx.cwiseAbs().maxCoeff() /
        (1.0 + std::max(lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0,
                        mu.size() ? mu.cwiseAbs().maxCoeff() : 0.0));
    const double compcond = niq ? z.dot(mu) / (1.0 + x.cwiseAbs().maxCoeff()) : 0.0;

    out.iterations = iter;
    out.feas = std::max(feas_eq, feas_iq);
    out.grad = gradcond;
    out.comp = compcond;

    if (options.verbose)
      std::fprintf(stderr, "  opf iter %3d  eq %.3e  iq %.3e  grad %.3e  comp %.3e\n", iter,
                   feas_eq, feas_iq, gradcond, compcond);

    if (feas_eq <= options.equality_tol && feas_iq <= options.feasibility_tol &&
        gradcond <= options.kkt_tol && compcond <= options.kkt_tol) {
      out.converged = true;
      break;
    }
    if (iter == options.max_iterations) break;
    if (!std::isfinite(out.feas) || !std::isfinite(gradcond)) break;

    gamma = niq ? sigma * z.dot(mu) / niq : 0.0;

    // reduced KKT system: eliminate (dz, dmu)
    const VectorXd zinv = z.cwiseInverse();
    MatrixXd m = prob.lagrangian_hessian(x, lam, mu);
    m.noalias() += jh.transpose() * (zinv.cwiseProduct(mu)).asDiagonal() * jh;
    VectorXd n = lx + jh.transpose() * (zinv.cwiseProduct(gamma * VectorXd::Ones(niq) +
                                                          mu.cwiseProduct(h + z)) -
                                        mu);

    MatrixXd kkt = MatrixXd::Zero(nx + neq, nx + neq);
    kkt.topLeftCorner(nx, nx) = m;
    kkt.topRightCorner(nx, neq) = jg.transpose();
    kkt.bottomLeftCorner(neq, nx) = jg;
    VectorXd rhs(nx + neq);
    rhs.head(nx) = -n;
    rhs.tail(neq) = -g;

    VectorXd step;
    double reg = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd kkt_reg = kkt;
      if (reg > 0) kkt_reg.topLeftCorner(nx, nx).diagonal().array() += reg;
      Eigen::PartialPivLU<MatrixXd> lu(kkt_reg);
      step = lu.solve(rhs);
      const double resid = (kkt_reg * step - rhs).cwiseAbs().maxCoeff();
      if (step.allFinite() && resid <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff())) break;
      reg = reg == 0.0 ? 1e-8 : reg * 100.0;
      step.setZero();
    }
    if (!step.allFinite()) break;

    const VectorXd dx = step.head(nx);
    const VectorXd dlam = step.tail(neq);
    const VectorXd dz = -(h + z) - jh * dx;
    VectorXd dmu(niq);
    for (int i = 0; i < niq; ++i) dmu[i] = (gamma - mu[i] * dz[i]) / z[i] - mu[i];

    double alpha_p = 1.0, alpha_d = 1.0;
    for (int i = 0; i < niq; ++i) {
      if (dz[i] < 0) alpha_p = std::min(alpha_p, -xi * z[i] / dz[i]);
      if (dmu[i] < 0) alpha_d = std::min(alpha_d, -xi * mu[i] / dmu[i]);
    }

    x += alpha_p * dx;
    z += alpha_p * dz;
    lam += alpha_d * dlam;
    mu += alpha_d * dmu;

    prob.equalities(x, g, &jg);
    prob.inequalities(x, h, &jh);
  }

  out.x = std::move(x);
  out.h = std::move(h);
  return out;
}

std::vector<std::string> near_active(const OpfProblem& prob, const VectorXd& h,
                                     double threshold) {
  std::vector<std::string> names;
  for (int i = 0; i < h.size(); ++i)
    if (h[i] >= -threshold) names.push_back(prob.iq_name(i));
  return names;
}

OpfSolution finish_solution(const NetworkCase& net, const AdmittanceMatrix& y,
                            const BusLoads& loads, const OpfOptions& options,
                            SystemState state, int iterations, const std::string& method) {
  OpfSolution sol;
  sol.state = std::move(state);
  sol.iterations = iterations;
  sol.method = method;
  sol.objective = 0.0;
  for (size_t g = 0; g < net.generators.size(); ++g)
    sol.objective += generation_cost(sol.state.pg[static_cast<int>(g)], net.generators[g]);
  for (size_t i = 0; i < net.branches.size(); ++i) {
    const FlowEnds fe = branch_flow(sol.state, net, static_cast<int>(i), y);
    sol.branch_flows.push_back({fe.p_from * net.base_mva, fe.q_from * net.base_mva,
                                fe.p_to * net.base_mva, fe.q_to * net.base_mva});
  }
  sol.violations = check_feasibility(net, y, loads, sol.state, options);
  sol.converged = sol.violations.empty();
  return sol;
}

// Dispatch-space fallback: cyclic coordinate descent over generator active
// power with a Newton power flow resolving the network at each candidate and
// an escalating quadratic penalty on limit violations.
OpfSolution run_penalty(const NetworkCase& net, const AdmittanceMatrix& y,
                        const BusLoads& loads, const OpfOptions& options) {
  const int ng = static_cast<int>(net.generators.size());
  const int nb = static_cast<int>(net.buses.size());
  const int slack = net.slack_index();
  const std::vector<int> slack_gens = net.generators_at(net.buses[slack].id);
  const int balancer = slack_gens.front();

  PowerFlowControls controls;
  controls.pg_mw.resize(ng);
  controls.vm_setpoint.resize(ng);
  double pmax_sum = 0;
  for (const Generator& g : net.generators) pmax_sum += g.pmax;
  const double total_pd = loads.pd_mw.sum();
  for (int g = 0; g < ng; ++g) {
    const Generator& gen = net.generators[g];
    controls.pg_mw[g] = pmax_sum > 0
                            ? std::clamp(total_pd * gen.pmax / pmax_sum, gen.pmin, gen.pmax)
                            : gen.pmin;
    const Bus& bus = net.buses[net.bus_index(gen.bus)];
    controls.vm_setpoint[g] =
        net.bus_index(gen.bus) == slack ? 1.0 : std::clamp(1.0, bus.vmin, bus.vmax);
  }

  PowerFlowOptions pf_opts;
  pf_opts.tolerance = 1e-10;
  pf_opts.max_iterations = 40;

  double weight = 1e3;
  SystemState best_state;
  const auto evaluate = [&](const PowerFlowControls& c, SystemState* keep) -> double {
    PowerFlowResult pf;
    try {
      pf = solve_power_flow(net, loads, c, y, pf_opts);
    } catch (const SolveError&) {
      return std::numeric_limits<double>::infinity();
    }
    double cost = 0;
    for (int g = 0; g < ng; ++g) cost += generation_cost(pf.state.pg[g], net.generators[g]);
    double pen = 0;
    auto add = [&](double v) {
      if (v > 0) pen += v * v;
    };
    for (int g = 0; g < ng; ++g) {
      const Generator& gen = net.generators[g];
      add((gen.pmin - pf.state.pg[g]) / net.base_mva);
      add((pf.state.pg[g] - gen.pmax) / net.base_mva);
      add((gen.qmin - pf.state.qg[g]) / net.base_mva);
      add((pf.state.qg[g] - gen.qmax) / net.base_mva);
    }
    for (int b = 0; b < nb; ++b) {
      add(net.buses[b].vmin - pf.state.vm[b]);
      add(pf.state.vm[b] - net.buses[b].vmax);
    }
    for (size_t i = 0; i < net.branches.size(); ++i) {
      const Branch& br = net.branches[i];
      const FlowEnds fe = branch_flow(pf.state, net, static_cast<int>(i), y);
      if (br.s_max > 0) {
        const double smax = br.s_max / net.base_mva;
        add(std::hypot(fe.p_from, fe.q_from) - smax);
        add(std::hypot(fe.p_to, fe.q_to) - smax);
      }
      const int f = net.bus_index(br.from_bus);
      const int t = net.bus_index(br.to_bus);
      add(std::abs(pf.state.va[f] - pf.state.va[t]) - options.angle_limit_rad);
    }
    if (keep) *keep = pf.state;
    return cost + weight * pen * net.base_mva * net.base_mva;
  };

  PowerFlowControls current = controls;
  double best = evaluate(current, &best_state);
  if (!std::isfinite(best))
    throw DivergenceError("fallback dispatch search: power flow failed at the initial point",
                          0.0);

  for (int round = 0; round < 8; ++round) {
    double step = std::max(1.0, total_pd * 0.05);
    while (step > 1e-6) {
      bool improved = false;
      for (int g = 0; g < ng; ++g) {
        if (g == balancer) continue;
        const Generator& gen = net.generators[g];
        for (double dir : {+1.0, -1.0}) {
          PowerFlowControls trial = current;
          trial.pg_mw[g] = std::clamp(current.pg_mw[g] + dir * step, gen.pmin, gen.pmax);
          if (trial.pg_mw[g] == current.pg_mw[g]) continue;
          SystemState st;
          const double val = evaluate(trial, &st);
          if (val < best - 1e-12) {
            best = val;
            current = trial;
            best_state = st;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.3;
    }
    OpfSolution probe = finish_solution(net, y, loads, options, best_state, round + 1, "penalty");
    if (probe.converged) return probe;
    weight *= 30.0;
    best = evaluate(current, &best_state);
  }

  OpfSolution sol = finish_solution(net, y, loads, options, best_state, 8, "penalty");
  if (!sol.converged) {
    std::vector<std::string> names;
    for (const Violation& v : sol.violations) names.push_back(v.constraint);
    throw InfeasibleError("OPF appears infeasible; persistent violations: " +
                              std::accumulate(names.begin(), names.end(), std::string(),
                                              [](std::string acc, const std::string& s) {
                                                return acc.empty() ? s
                                                                   : std::move(acc) + ", " + s;
                                              }),
                          names);
  }
  return sol;
}

}  // namespace

double generation_cost(double pg_mw, const Generator& gen) {
  return gen.cost_a * pg_mw * pg_mw + gen.cost_b * pg_mw + gen.cost_c;
}

std::vector<Violation> check_feasibility(const NetworkCase& net, const AdmittanceMatrix& y,
                                         const BusLoads& loads, const SystemState& state,
                                         const OpfOptions& options) {
  std::vector<Violation> out;
  const double base = net.base_mva;

  const Mismatch mism = bus_mismatch(state, net, loads, y);
  for (int b = 0; b < mism.dp.size(); ++b) {
    if (std::abs(mism.dp[b]) > options.equality_tol)
      out.push_back({"P_balance[" + bus_tag(net, b) + "]", std::abs(mism.dp[b])});
    if (std::abs(mism.dq[b]) > options.equality_tol)
      out.push_back({"Q_balance[" + bus_tag(net, b) + "]", std::abs(mism.dq[b])});
  }

  for (size_t b = 0; b < net.buses.size(); ++b) {
    const Bus& bus = net.buses[b];
    const double vm = state.vm[static_cast<int>(b)];
    if (bus.vmin - vm > options.feasibility_tol)
      out.push_back({"vm_min[" + bus_tag(net, static_cast<int>(b)) + "]", bus.vmin - vm});
    if (vm - bus.vmax > options.feasibility_tol)
      out.push_back({"vm_max[" + bus_tag(net, static_cast<int>(b)) + "]", vm - bus.vmax});
  }

  for (size_t g = 0; g < net.generators.size(); ++g) {
    const Generator& gen = net.generators[g];
    const double pg = state.pg[static_cast<int>(g)] / base;
    const double qg = state.qg[static_cast<int>(g)] / base;
    const int gi = static_cast<int>(g);
    if (gen.pmin / base - pg > options.feasibility_tol)
      out.push_back({"pg_min[" + gen_tag(net, gi) + "]", gen.pmin / base - pg});
    if (pg - gen.pmax / base > options.feasibility_tol)
      out.push_back({"pg_max[" + gen_tag(net, gi) + "]", pg - gen.pmax / base});
    if (gen.qmin / base - qg > options.feasibility_tol)
      out.push_back({"qg_min[" + gen_tag(net, gi) + "]", gen.qmin / base - qg});
    if (qg - gen.qmax / base > options.feasibility_tol)
      out.push_back({"qg_max[" + gen_tag(net, gi) + "]", qg - gen.qmax / base});
  }

  for (size_t i = 0; i < net.branches.size(); ++i) {
    const Branch& br = net.branches[i];
    const int bi = static_cast<int>(i);
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    const double diff = state.va[f] - state.va[t];
    if (std::abs(diff) - options.angle_limit_rad > options.feasibility_tol)
      out.push_back({"angle[" + branch_tag(net, bi) + "]",
                     std::abs(diff) - options.angle_limit_rad});
    if (br.s_max > 0) {
      const FlowEnds fe = branch_flow(state, net, bi, y);
      const double smax = br.s_max / base;
      const double vf = std::hypot(fe.p_from, fe.q_from) - smax;
      const double vt = std::hypot(fe.p_to, fe.q_to) - smax;
      if (vf > options.feasibility_tol)
        out.push_back({"smax_from[" + branch_tag(net, bi) + "]", vf});
      if (vt > options.feasibility_tol)
        out.push_back({"smax_to[" + branch_tag(net, bi) + "]", vt});
    }
  }
  return out;
}

OpfSolution solve_opf(const NetworkCase& net, const BusLoads& loads,
                      const OpfOptions& options) {
  const AdmittanceMatrix y = build_admittance(net);
  const int slack = net.slack_index();
  if (net.buses[slack].vmin > 1.0 || net.buses[slack].vmax < 1.0)
    throw InfeasibleError("slack bus voltage bounds exclude the fixed 1.0 p.u. reference", {});

  double pmin_sum = 0, pmax_sum = 0;
  for (const Generator& g : net.generators) {
    pmin_sum += g.pmin;
    pmax_sum += g.pmax;
  }
  const double total_pd = loads.pd_mw.sum();
  if (total_pd > pmax_sum) {
    std::vector<std::string> names;
    for (size_t g = 0; g < net.generators.size(); ++g)
      names.push_back("pg_max[" + gen_tag(net, static_cast<int>(g)) + "]");
    throw InfeasibleError("total demand " + std::to_string(total_pd) +
                              " MW exceeds aggregate generation capability " +
                              std::to_string(pmax_sum) + " MW",
                          names);
  }
  if (total_pd < pmin_sum) {
    std::vector<std::string> names;
    for (size_t g = 0; g < net.generators.size(); ++g)
      names.push_back("pg_min[" + gen_tag(net, static_cast<int>(g)) + "]");
    throw InfeasibleError("total demand " + std::to_string(total_pd) +
                              " MW lies below aggregate minimum generation " +
                              std::to_string(pmin_sum) + " MW (losses are non-negative)",
                          names);
  }

  OpfProblem prob(net, y, loads, options);
  std::string ipm_diag;
  if (!options.force_fallback) {
    const IpmOutcome out = run_ipm(prob, options);
    if (out.converged) {
      OpfSolution sol = finish_solution(net, y, loads, options, prob.state_of(out.x),
                                        out.iterations, "ipm");
      sol.binding_constraints = near_active(prob, out.h, 1e-5);
      if (sol.converged) return sol;
      ipm_diag = "interior point met its stopping test but the audit found violations";
    } else {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "interior point stopped after %d iterations (feas %.3e, grad %.3e, comp "
                    "%.3e)",
                    out.iterations, out.feas, out.grad, out.comp);
      ipm_diag = buf;
    }
    if (!options.allow_fallback) throw DivergenceError(ipm_diag, 0.0);
  }

  try {
    return run_penalty(net, y, loads, options);
  } catch (const InfeasibleError&) {
    throw;
  } catch (const SolveError& e) {
    const std::string prefix = ipm_diag.empty() ? std::string() : ipm_diag + "; ";
    throw DivergenceError(prefix + e.what(), 0.0);
  }
}

}  // namespace dropf
