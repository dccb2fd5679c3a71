#include "copf/power_flow.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "copf/errors.hpp"

namespace copf::pf {

void PowerFlowSolution::resize(int T, size_t buses, size_t branches, size_t gens,
                               size_t storage) {
  periods = T;
  auto init = [T](std::vector<std::vector<double>>& v, size_t n) {
    v.assign(static_cast<size_t>(T), std::vector<double>(n, 0.0));
  };
  init(v_pu, buses);
  init(theta_rad, buses);
  init(p_from_mw, branches);
  init(p_to_mw, branches);
  init(q_from_mvar, branches);
  init(q_to_mvar, branches);
  init(p_loss_mw, branches);
  init(gen_p_mw, gens);
  init(gen_q_mvar, gens);
  init(storage_ch_mw, storage);
  init(storage_dc_mw, storage);
  for (auto& row : v_pu) row.assign(buses, 1.0);
}

namespace {

struct Indexed {
  std::vector<int> from_idx, to_idx;  // branch endpoints as bus indices
};

Indexed index_branches(const Network& net) {
  Indexed ix;
  ix.from_idx.reserve(net.branches.size());
  ix.to_idx.reserve(net.branches.size());
  for (const auto& br : net.branches) {
    const int a = net.bus_index(br.from);
    const int b = net.bus_index(br.to);
    if (a < 0 || b < 0) throw Error("branch references unknown bus");
    ix.from_idx.push_back(a);
    ix.to_idx.push_back(b);
  }
  return ix;
}

}  // namespace

PowerFlowSolution solve_dc(const Network& net, std::span<const double> injection_mw) {
  const int n = static_cast<int>(net.buses.size());
  if (static_cast<int>(injection_mw.size()) != n)
    throw Error("injection vector length does not match bus count");
  if (!net.connected()) throw SingularSystem("network graph is disconnected");
  const int slack = net.slack_index();
  if (slack < 0) throw Error("no slack bus designated");

  double sum = 0.0;
  for (double p : injection_mw) sum += p;
  const double scale = net.base_mva;
  if (std::abs(sum) > 1e-6 * std::max(1.0, scale))
    throw Error("DC injections must sum to zero (lossless model)");

  const Indexed ix = index_branches(net);

  // Reduced susceptance matrix over non-slack buses: row i of B theta = p with
  // stiffness -b >= 0 per branch.
  std::vector<int> pos(n, -1);
  int m = 0;
  for (int i = 0; i < n; ++i)
    if (i != slack) pos[i] = m++;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < n; ++i)
    if (i != slack) p(pos[i]) = injection_mw[i] / scale;

  for (size_t e = 0; e < net.branches.size(); ++e) {
    const double stiffness = -net.branches[e].b_pu;  // 1/x for an inductive line
    const int a = ix.from_idx[e], b = ix.to_idx[e];
    if (a != slack && b != slack) {
      B(pos[a], pos[a]) += stiffness;
      B(pos[b], pos[b]) += stiffness;
      B(pos[a], pos[b]) -= stiffness;
      B(pos[b], pos[a]) -= stiffness;
    } else if (a != slack) {
      B(pos[a], pos[a]) += stiffness;
    } else if (b != slack) {
      B(pos[b], pos[b]) += stiffness;
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
  if (m > 0 && !lu.isInvertible())
    throw SingularSystem("DC susceptance matrix is singular");
  const Eigen::VectorXd theta = m > 0 ? Eigen::VectorXd(lu.solve(p)) : Eigen::VectorXd();

  PowerFlowSolution sol;
  sol.resize(1, net.buses.size(), net.branches.size(), net.generators.size(),
             net.storage.size());
  for (int i = 0; i < n; ++i) sol.theta_rad[0][i] = (i == slack) ? 0.0 : theta(pos[i]);

  for (size_t e = 0; e < net.branches.size(); ++e) {
    const double dth = sol.theta_rad[0][ix.from_idx[e]] - sol.theta_rad[0][ix.to_idx[e]];
    const double flow_mw = -net.branches[e].b_pu * dth * scale;
    sol.p_from_mw[0][e] = flow_mw;
    sol.p_to_mw[0][e] = flow_mw;
    sol.p_loss_mw[0][e] = 0.0;
  }
  return sol;
}

PowerFlowSolution run_dc(const Network& net, const TimeGrid& grid, const Dispatch& dispatch) {
  const int T = grid.periods;
  const int n = static_cast<int>(net.buses.size());
  const int slack = net.slack_index();
  if (slack < 0) throw Error("no slack bus designated");

  // The slack bus generator absorbs any residual imbalance.
  const auto slack_gens = net.generators_at(slack);
  if (slack_gens.empty()) throw Error("slack bus has no generator to balance against");

  PowerFlowSolution out;
  out.resize(T, net.buses.size(), net.branches.size(), net.generators.size(),
             net.storage.size());

  for (int t = 0; t < T; ++t) {
    std::vector<double> gen_p = dispatch.gen_p_mw.at(t);
    std::vector<double> inj(n, 0.0);
    double imbalance = 0.0;
    for (size_t g = 0; g < net.generators.size(); ++g)
      imbalance += gen_p[g];
    for (const auto& l : net.loads) imbalance -= l.p_mw[t];
    for (size_t s = 0; s < net.storage.size(); ++s) {
      const double ch = dispatch.storage_ch_mw.empty() ? 0.0 : dispatch.storage_ch_mw[t][s];
      const double dc = dispatch.storage_dc_mw.empty() ? 0.0 : dispatch.storage_dc_mw[t][s];
      imbalance += dc - ch;
    }
    gen_p[slack_gens[0]] -= imbalance;

    for (size_t g = 0; g < net.generators.size(); ++g)
      inj[net.bus_index(net.generators[g].bus)] += gen_p[g];
    for (const auto& l : net.loads) inj[net.bus_index(l.bus)] -= l.p_mw[t];
    for (size_t s = 0; s < net.storage.size(); ++s) {
      const double ch = dispatch.storage_ch_mw.empty() ? 0.0 : dispatch.storage_ch_mw[t][s];
      const double dc = dispatch.storage_dc_mw.empty() ? 0.0 : dispatch.storage_dc_mw[t][s];
      inj[net.bus_index(net.storage[s].bus)] += dc - ch;
      out.storage_ch_mw[t][s] = ch;
      out.storage_dc_mw[t][s] = dc;
    }

    const PowerFlowSolution one = solve_dc(net, inj);
    out.theta_rad[t] = one.theta_rad[0];
    out.p_from_mw[t] = one.p_from_mw[0];
    out.p_to_mw[t] = one.p_to_mw[0];
    out.p_loss_mw[t] = one.p_loss_mw[0];
    out.gen_p_mw[t] = gen_p;
  }
  return out;
}

namespace {

// Branch flow terms of the AC equations evaluated at (V, theta), sending end a
// toward end b. Returns {P_ab^a, Q_ab^a} in p.u.
std::pair<double, double> branch_flow_pu(const Branch& br, double va, double vb, double tha,
                                         double thb) {
  const double dth = tha - thb;
  const double c = std::cos(dth), s = std::sin(dth);
  const double p = (va * va - va * vb * c) * br.g_pu - va * vb * s * br.b_pu;
  const double q = (va * vb * c - va * va) * br.b_pu - va * vb * s * br.g_pu;
  return {p, q};
}

}  // namespace

PowerFlowSolution solve_ac(const Network& net, const TimeGrid& grid, const Dispatch& dispatch,
                           const AcOptions& options) {
  const int T = grid.periods;
  const int n = static_cast<int>(net.buses.size());
  const int slack = net.slack_index();
  if (slack < 0) throw Error("no slack bus designated");
  if (!net.connected()) throw SingularSystem("network graph is disconnected");
  const Indexed ix = index_branches(net);
  const double base = net.base_mva;

  // Bus classification: slack; PV where generation is present; PQ otherwise.
  std::vector<char> is_pv(n, 0);
  for (const auto& g : net.generators) {
    const int b = net.bus_index(g.bus);
    if (b != slack) is_pv[b] = 1;
  }

  // Ybus from series admittances (no shunts in this model).
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (size_t e = 0; e < net.branches.size(); ++e) {
    const std::complex<double> y(net.branches[e].g_pu, net.branches[e].b_pu);
    const int a = ix.from_idx[e], b = ix.to_idx[e];
    Y(a, a) += y;
    Y(b, b) += y;
    Y(a, b) -= y;
    Y(b, a) -= y;
  }

  PowerFlowSolution out;
  out.resize(T, net.buses.size(), net.branches.size(), net.generators.size(),
             net.storage.size());

  // Unknown ordering: theta for every non-slack bus, then V for every PQ bus.
  std::vector<int> th_pos(n, -1), v_pos(n, -1);
  int nth = 0;
  for (int i = 0; i < n; ++i)
    if (i != slack) th_pos[i] = nth++;
  int nv = 0;
  for (int i = 0; i < n; ++i)
    if (i != slack && !is_pv[i]) v_pos[i] = nv++;
  const int nunk = nth + nv;

  std::vector<double> v(n, 1.0), th(n, 0.0);

  for (int t = 0; t < T; ++t) {
    // Scheduled injections in p.u.
    std::vector<double> p_sched(n, 0.0), q_sched(n, 0.0);
    for (size_t g = 0; g < net.generators.size(); ++g)
      p_sched[net.bus_index(net.generators[g].bus)] += dispatch.gen_p_mw.at(t).at(g) / base;
    for (const auto& l : net.loads) {
      const int b = net.bus_index(l.bus);
      p_sched[b] -= l.p_mw[t] / base;
      q_sched[b] -= l.q_mvar[t] / base;
    }
    for (size_t s = 0; s < net.storage.size(); ++s) {
      const double ch = dispatch.storage_ch_mw.empty() ? 0.0 : dispatch.storage_ch_mw[t][s];
      const double dc = dispatch.storage_dc_mw.empty() ? 0.0 : dispatch.storage_dc_mw[t][s];
      p_sched[net.bus_index(net.storage[s].bus)] += (dc - ch) / base;
      out.storage_ch_mw[t][s] = ch;
      out.storage_dc_mw[t][s] = dc;
    }

    if (options.flat_start || t == 0) {
      for (int i = 0; i < n; ++i) {
        v[i] = (i == slack || is_pv[i]) ? net.buses[i].v_setpoint_pu : 1.0;
        th[i] = 0.0;
      }
    } else {
      for (int i = 0; i < n; ++i)
        if (i == slack || is_pv[i]) v[i] = net.buses[i].v_setpoint_pu;
    }

    auto calc_pq = [&](std::vector<double>& pc, std::vector<double>& qc) {
      for (int i = 0; i < n; ++i) {
        double pi = 0.0, qi = 0.0;
        for (int k = 0; k < n; ++k) {
          const double g = Y(i, k).real(), b = Y(i, k).imag();
          const double dth = th[i] - th[k];
          pi += v[i] * v[k] * (g * std::cos(dth) + b * std::sin(dth));
          qi += v[i] * v[k] * (g * std::sin(dth) - b * std::cos(dth));
        }
        pc[i] = pi;
        qc[i] = qi;
      }
    };

    std::vector<double> pc(n), qc(n);
    auto mismatch_norm = [&]() {
      calc_pq(pc, qc);
      double norm = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i != slack) norm = std::max(norm, std::abs(p_sched[i] - pc[i]));
        if (i != slack && !is_pv[i]) norm = std::max(norm, std::abs(q_sched[i] - qc[i]));
      }
      return norm;
    };

    double norm = mismatch_norm();
    int iter = 0;
    while (norm > options.tol_pu) {
      if (iter >= options.max_iterations)
        throw NoConvergence("AC power flow did not converge", iter, norm);
      ++iter;

      Eigen::VectorXd f(nunk);
      for (int i = 0; i < n; ++i) {
        if (th_pos[i] >= 0) f(th_pos[i]) = p_sched[i] - pc[i];
        if (v_pos[i] >= 0) f(nth + v_pos[i]) = q_sched[i] - qc[i];
      }

      // Standard polar Jacobian.
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nunk, nunk);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
          const double g = Y(i, k).real(), b = Y(i, k).imag();
          if (g == 0.0 && b == 0.0 && i != k) continue;
          const double dth = th[i] - th[k];
          const double cs = std::cos(dth), sn = std::sin(dth);
          double dp_dth, dp_dv, dq_dth, dq_dv;
          if (i == k) {
            dp_dth = -qc[i] - b * v[i] * v[i];
            dp_dv = pc[i] / v[i] + g * v[i];
            dq_dth = pc[i] - g * v[i] * v[i];
            dq_dv = qc[i] / v[i] - b * v[i];
          } else {
            dp_dth = v[i] * v[k] * (g * sn - b * cs);
            dp_dv = v[i] * (g * cs + b * sn);
            dq_dth = -v[i] * v[k] * (g * cs + b * sn);
            dq_dv = v[i] * (g * sn - b * cs);
          }
          if (th_pos[i] >= 0 && th_pos[k] >= 0) J(th_pos[i], th_pos[k]) += dp_dth;
          if (th_pos[i] >= 0 && v_pos[k] >= 0) J(th_pos[i], nth + v_pos[k]) += dp_dv;
          if (v_pos[i] >= 0 && th_pos[k] >= 0) J(nth + v_pos[i], th_pos[k]) += dq_dth;
          if (v_pos[i] >= 0 && v_pos[k] >= 0) J(nth + v_pos[i], nth + v_pos[k]) += dq_dv;
        }
      }

      Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
      Eigen::VectorXd dx = lu.solve(f);
      if (!dx.allFinite()) throw SingularSystem("AC Jacobian is singular");

      // Damped update: halve the step while the mismatch grows.
      const std::vector<double> v0 = v, th0 = th;
      double step = 1.0;
      for (int attempt = 0; attempt < 10; ++attempt) {
        for (int i = 0; i < n; ++i) {
          if (th_pos[i] >= 0) th[i] = th0[i] + step * dx(th_pos[i]);
          if (v_pos[i] >= 0) v[i] = v0[i] + step * dx(nth + v_pos[i]);
        }
        const double new_norm = mismatch_norm();
        if (new_norm < norm || new_norm <= options.tol_pu) {
          norm = new_norm;
          break;
        }
        step *= 0.5;
        if (attempt == 9) norm = new_norm;  // accept the smallest step tried
      }
    }

    for (int i = 0; i < n; ++i) {
      out.v_pu[t][i] = v[i];
      out.theta_rad[t][i] = th[i];
    }

    // Both-end branch flows from the solved state.
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const int a = ix.from_idx[e], b = ix.to_idx[e];
      const auto [pab, qab] = branch_flow_pu(net.branches[e], v[a], v[b], th[a], th[b]);
      const auto [pba, qba] = branch_flow_pu(net.branches[e], v[b], v[a], th[b], th[a]);
      out.p_from_mw[t][e] = pab * base;
      out.p_to_mw[t][e] = -pba * base;  // receiving-end flow in the from->to orientation
      out.q_from_mvar[t][e] = qab * base;
      out.q_to_mvar[t][e] = -qba * base;
      out.p_loss_mw[t][e] = (pab + pba) * base;
    }

    // Generator outputs: scheduled P everywhere except the slack, which picks
    // up losses; Q backed out of the solved injections on PV/slack buses.
    calc_pq(pc, qc);
    out.gen_p_mw[t] = dispatch.gen_p_mw.at(t);
    for (int i = 0; i < n; ++i) {
      const auto gens = net.generators_at(i);
      if (gens.empty()) continue;
      double load_p = 0.0, load_q = 0.0;
      for (int li : net.loads_at(i)) {
        load_p += net.loads[li].p_mw[t];
        load_q += net.loads[li].q_mvar[t];
      }
      double st_p = 0.0;
      const int si = net.storage_at(i);
      if (si >= 0) st_p = out.storage_dc_mw[t][si] - out.storage_ch_mw[t][si];
      if (i == slack) {
        double other = 0.0;
        for (size_t k = 1; k < gens.size(); ++k) other += out.gen_p_mw[t][gens[k]];
        out.gen_p_mw[t][gens[0]] = pc[i] * base + load_p - st_p - other;
      }
      const double q_total = qc[i] * base + load_q;
      for (size_t k = 0; k < gens.size(); ++k)
        out.gen_q_mvar[t][gens[k]] = q_total / static_cast<double>(gens.size());
    }
  }
  return out;
}

std::vector<double> active_balance_residual_mw(const Network& net, const PowerFlowSolution& sol,
                                               int period) {
  const int n = static_cast<int>(net.buses.size());
  std::vector<double> r(n, 0.0);
  for (size_t g = 0; g < net.generators.size(); ++g)
    r[net.bus_index(net.generators[g].bus)] += sol.gen_p_mw[period][g];
  for (const auto& l : net.loads) r[net.bus_index(l.bus)] -= l.p_mw[period];
  for (size_t s = 0; s < net.storage.size(); ++s) {
    r[net.bus_index(net.storage[s].bus)] +=
        sol.storage_dc_mw[period][s] - sol.storage_ch_mw[period][s];
  }
  for (size_t e = 0; e < net.branches.size(); ++e) {
    r[net.bus_index(net.branches[e].from)] -= sol.p_from_mw[period][e];
    r[net.bus_index(net.branches[e].to)] += sol.p_to_mw[period][e];
  }
  return r;
}

std::vector<double> ac_mismatch_pu(const Network& net, const PowerFlowSolution& sol,
                                   int period) {
  const int n = static_cast<int>(net.buses.size());
  const double base = net.base_mva;
  std::vector<double> p_net(n, 0.0), q_net(n, 0.0);
  for (size_t g = 0; g < net.generators.size(); ++g) {
    const int b = net.bus_index(net.generators[g].bus);
    p_net[b] += sol.gen_p_mw[period][g];
    q_net[b] += sol.gen_q_mvar[period][g];
  }
  for (const auto& l : net.loads) {
    const int b = net.bus_index(l.bus);
    p_net[b] -= l.p_mw[period];
    q_net[b] -= l.q_mvar[period];
  }
  for (size_t s = 0; s < net.storage.size(); ++s) {
    const int b = net.bus_index(net.storage[s].bus);
    p_net[b] += sol.storage_dc_mw[period][s] - sol.storage_ch_mw[period][s];
  }

  std::vector<double> mis(2 * n, 0.0);
  for (int i = 0; i < n; ++i) {
    mis[i] = p_net[i] / base;
    mis[n + i] = q_net[i] / base;
  }
  for (size_t e = 0; e < net.branches.size(); ++e) {
    const auto& br = net.branches[e];
    const int a = net.bus_index(br.from), b = net.bus_index(br.to);
    const double va = sol.v_pu[period][a], vb = sol.v_pu[period][b];
    const double tha = sol.theta_rad[period][a], thb = sol.theta_rad[period][b];
    const auto [pab, qab] = branch_flow_pu(br, va, vb, tha, thb);
    const auto [pba, qba] = branch_flow_pu(br, vb, va, thb, tha);
    mis[a] -= pab;
    mis[b] -= pba;
    mis[n + a] -= qab;
    mis[n + b] -= qba;
  }
  return mis;
}

DualFlows split_flows(const PowerFlowSolution& sol) {
  DualFlows d;
  const size_t T = sol.p_from_mw.size();
  d.at_from.resize(T);
  d.at_to.resize(T);
  for (size_t t = 0; t < T; ++t) {
    const size_t m = sol.p_from_mw[t].size();
    d.at_from[t].resize(m);
    d.at_to[t].resize(m);
    for (size_t e = 0; e < m; ++e) {
      const double pf = sol.p_from_mw[t][e];
      const double pt = sol.p_to_mw[t][e];
      d.at_from[t][e] = {pf > 0.0 ? pf : 0.0, pf < 0.0 ? -pf : 0.0};
      d.at_to[t][e] = {pt > 0.0 ? pt : 0.0, pt < 0.0 ? -pt : 0.0};
    }
  }
  return d;
}

}  // namespace copf::pf
