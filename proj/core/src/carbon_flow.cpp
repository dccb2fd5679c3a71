#include "copf/carbon_flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "copf/errors.hpp"

namespace copf::carbon {

Matrices build_matrices(const Network& net, const pf::PowerFlowSolution& pf, int period,
                        EsModelKind es_model, std::span<const double> w_es) {
  const int n = static_cast<int>(net.buses.size());
  Matrices m;
  m.n = n;
  m.p_in_mw.assign(n, 0.0);
  m.p_b_mw.assign(n, std::vector<double>(n, 0.0));
  m.r_gen.assign(n, 0.0);
  m.load_mw.assign(n, 0.0);
  m.outflow_mw.assign(n, 0.0);
  m.dominant.assign(n, 0);

  for (size_t g = 0; g < net.generators.size(); ++g) {
    const int b = net.bus_index(net.generators[g].bus);
    const double p = pf.gen_p_mw[period][g];
    if (p <= kFlowZeroMw) continue;  // idle units add no inflow
    m.p_in_mw[b] += p;
    m.r_gen[b] += net.generators[g].emission_factor * p;
    m.w_injection_max = std::max(m.w_injection_max, net.generators[g].emission_factor);
  }

  for (const auto& l : net.loads) m.load_mw[net.bus_index(l.bus)] += l.p_mw[period];

  for (size_t s = 0; s < net.storage.size(); ++s) {
    const int b = net.bus_index(net.storage[s].bus);
    const double dc = pf.storage_dc_mw.empty() ? 0.0 : pf.storage_dc_mw[period][s];
    const double ch = pf.storage_ch_mw.empty() ? 0.0 : pf.storage_ch_mw[period][s];
    m.load_mw[b] += ch;  // charging behaves as load for sharing purposes
    if (dc > kFlowZeroMw) {
      const double w = (es_model == EsModelKind::WaterTank && s < w_es.size()) ? w_es[s] : 0.0;
      m.p_in_mw[b] += dc;
      m.r_gen[b] += w * dc;
      m.w_injection_max = std::max(m.w_injection_max, w);
    }
  }

  // Branch inflows measured at the receiving end; direction from the
  // sending-end sign. Flows below the zero threshold are dropped; ends that
  // disagree in sign only within solver noise are folded to zero, material
  // disagreement is an input fault.
  constexpr double kNoiseMw = 1e-5;
  for (size_t e = 0; e < net.branches.size(); ++e) {
    const int a = net.bus_index(net.branches[e].from);
    const int b = net.bus_index(net.branches[e].to);
    const double p_from = pf.p_from_mw[period][e];
    const double p_to = pf.p_to_mw[period][e];
    if (std::abs(p_from) <= kFlowZeroMw && std::abs(p_to) <= kFlowZeroMw) continue;
    if (p_from > 0 != p_to > 0 && std::min(std::abs(p_from), std::abs(p_to)) > kNoiseMw)
      throw ImplausibleFlow("branch " + std::to_string(e) +
                            ": ends disagree on flow direction");
    const double dir = std::abs(p_from) > kFlowZeroMw ? p_from : p_to;
    if (dir > 0.0) {
      m.p_b_mw[b][a] += std::max(p_to, 0.0);
      m.p_in_mw[b] += std::max(p_to, 0.0);
      m.outflow_mw[a] += std::max(p_from, 0.0);
    } else {
      // Reversed: node 'to' sends |p_to|, node 'from' receives |p_from|.
      m.p_b_mw[a][b] += std::max(-p_from, 0.0);
      m.p_in_mw[a] += std::max(-p_from, 0.0);
      m.outflow_mw[b] += std::max(-p_to, 0.0);
    }
  }

  for (int i = 0; i < n; ++i) {
    // Strict diagonal dominance per row of P_C = P_N - P_B.
    double offdiag = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != i) offdiag += m.p_b_mw[i][k];
    m.dominant[i] = (m.p_in_mw[i] - offdiag > kFlowZeroMw) ? 1 : 0;
  }
  return m;
}

FeasibilityVerdict check_feasibility(const Matrices& m) {
  const int n = m.n;
  FeasibilityVerdict v;
  v.witness.assign(n, {});

  std::vector<char> excluded(n, 0);
  for (int i = 0; i < n; ++i) {
    if (m.p_in_mw[i] > kFlowZeroMw) continue;
    if (m.load_mw[i] > kFlowZeroMw) {
      v.load_without_supply.push_back(i);
    } else if (m.outflow_mw[i] > kFlowZeroMw) {
      v.inconsistent.push_back(i);
    } else {
      excluded[i] = 1;
      v.excluded.push_back(i);
    }
  }

  // Multi-source BFS from the dominant rows over reversed edges. An edge
  // i -> k exists when P_C[i,k] is nonzero, i.e. node k sends power into i;
  // reach(i) means a chain of nonzero elements ends in a dominant row.
  std::vector<std::vector<int>> radj(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (i != k && m.p_b_mw[i][k] > kFlowZeroMw) radj[k].push_back(i);

  std::vector<int> next_hop(n, -1);
  std::vector<char> reach(n, 0);
  std::deque<int> queue;
  for (int i = 0; i < n; ++i)
    if (m.dominant[i]) {
      reach[i] = 1;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for (int i : radj[k])
      if (!reach[i]) {
        reach[i] = 1;
        next_hop[i] = k;
        queue.push_back(i);
      }
  }

  for (int i = 0; i < n; ++i) {
    if (excluded[i] || m.dominant[i]) continue;
    if (!reach[i]) {
      v.stranded.push_back(i);
      continue;
    }
    for (int j = i; j >= 0; j = next_hop[j]) {
      v.witness[i].push_back(j);
      if (m.dominant[j]) break;
    }
  }

  v.feasible = v.stranded.empty() && v.load_without_supply.empty() && v.inconsistent.empty();
  return v;
}

std::vector<double> solve(const Matrices& m, const FeasibilityVerdict& verdict) {
  if (!verdict.feasible) throw SingularMatrix("carbon flow system failed the feasibility check");
  const int n = m.n;

  std::vector<char> excluded(n, 0);
  for (int i : verdict.excluded) excluded[i] = 1;
  std::vector<int> pos(n, -1);
  int r = 0;
  for (int i = 0; i < n; ++i)
    if (!excluded[i]) pos[i] = r++;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  for (int i = 0; i < n; ++i) {
    if (excluded[i]) continue;
    A(pos[i], pos[i]) = m.p_in_mw[i];
    for (int k = 0; k < n; ++k)
      if (k != i && !excluded[k]) A(pos[i], pos[k]) = -m.p_b_mw[i][k];
    rhs(pos[i]) = m.r_gen[i];
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularMatrix("carbon flow matrix is numerically singular");

  const double rhs_norm = rhs.size() ? rhs.lpNorm<Eigen::Infinity>() : 0.0;
  const double res = r > 0 ? (A * x - rhs).lpNorm<Eigen::Infinity>() : 0.0;
  if (res > 1e-10 * std::max(1.0, rhs_norm))
    throw SingularMatrix("carbon flow solve residual too large: " + std::to_string(res));

  std::vector<double> w(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (!excluded[i]) w[i] = x(pos[i]);

  for (int i = 0; i < n; ++i) {
    if (w[i] < -1e-9)
      throw NegativeIntensity("nodal intensity " + std::to_string(w[i]) + " at bus index " +
                              std::to_string(i));
    if (w[i] > m.w_injection_max + 1e-9)
      throw Error("nodal intensity exceeds the largest injection intensity; inputs corrupted");
  }
  return w;
}

std::vector<double> solve(const Matrices& m) { return solve(m, check_feasibility(m)); }

std::vector<double> solve_fixed_point(const Matrices& m, double tol, long max_iterations) {
  const int n = m.n;
  for (int i = 0; i < n; ++i)
    if (!(m.p_in_mw[i] > 0))
      throw Error("fixed-point oracle requires strictly positive inflow at every node");

  std::vector<double> w(n, 0.0), next(n, 0.0);
  for (long it = 0; it < max_iterations; ++it) {
    double delta = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = m.r_gen[i];
      for (int k = 0; k < n; ++k)
        if (k != i) acc += m.p_b_mw[i][k] * w[k];
      next[i] = acc / m.p_in_mw[i];
      delta = std::max(delta, std::abs(next[i] - w[i]));
    }
    w.swap(next);
    if (delta <= tol) return w;
  }
  throw NoConvergence("fixed-point carbon flow iteration did not converge",
                      static_cast<int>(max_iterations), 0.0);
}

Solution attribute([[maybe_unused]] const Matrices& m, std::span<const double> w,
                   const Network& net, const pf::PowerFlowSolution& pf, int period) {
  Solution s;
  s.w.assign(w.begin(), w.end());
  const size_t nb = net.branches.size();
  s.r_from.assign(nb, 0.0);
  s.r_to.assign(nb, 0.0);
  s.r_loss.assign(nb, 0.0);

  for (size_t e = 0; e < nb; ++e) {
    const double p_from = pf.p_from_mw[period][e];
    const double p_to = pf.p_to_mw[period][e];
    if (std::abs(p_from) <= kFlowZeroMw && std::abs(p_to) <= kFlowZeroMw) continue;
    // Intensity of the actual sending node.
    const int a = net.bus_index(net.branches[e].from);
    const int b = net.bus_index(net.branches[e].to);
    const double w_send = (p_from >= 0.0) ? w[a] : w[b];
    s.r_from[e] = w_send * p_from;
    s.r_to[e] = w_send * p_to;
    s.r_loss[e] = w_send * pf.p_loss_mw[period][e];
  }

  s.r_load.resize(net.loads.size());
  for (size_t l = 0; l < net.loads.size(); ++l)
    s.r_load[l] = w[net.bus_index(net.loads[l].bus)] * net.loads[l].p_mw[period];

  s.r_gen.resize(net.generators.size());
  for (size_t g = 0; g < net.generators.size(); ++g)
    s.r_gen[g] = net.generators[g].emission_factor * pf.gen_p_mw[period][g];

  return s;
}

std::vector<double> conservation_residual(const Matrices& m, std::span<const double> w) {
  // Row form of the conservation law: w_i P_i^in - r_G_i - sum_k w_k P_B[i,k].
  std::vector<double> res(m.n, 0.0);
  for (int i = 0; i < m.n; ++i) {
    double acc = w[i] * m.p_in_mw[i] - m.r_gen[i];
    for (int k = 0; k < m.n; ++k)
      if (k != i) acc -= w[k] * m.p_b_mw[i][k];
    res[i] = acc;
  }
  return res;
}

}  // namespace copf::carbon
