#pragma once

// Shared network builders and random-instance generators for the test suites.

#include <cmath>
#include <random>
#include <vector>

#include "copf/carbon_flow.hpp"
#include "copf/model.hpp"
#include "copf/power_flow.hpp"

namespace copf::test {

inline Bus bus(int id, bool slack = false) {
  Bus b;
  b.id = id;
  b.slack = slack;
  b.v_min_pu = 0.9;
  b.v_max_pu = 1.1;
  b.theta_min_rad = -1.0;
  b.theta_max_rad = 1.0;
  return b;
}

inline Branch branch(int from, int to, double g, double b, double s_max = kInf) {
  Branch br;
  br.from = from;
  br.to = to;
  br.g_pu = g;
  br.b_pu = b;
  br.s_max_pu = s_max;
  return br;
}

inline Generator gen(int bus_id, int T, double pmin, double pmax, double c2, double c1,
                     double w, int index = 0) {
  Generator g;
  g.bus = bus_id;
  g.index = index;
  g.p_min_mw = broadcast(pmin, T);
  g.p_max_mw = broadcast(pmax, T);
  g.q_min_mvar = broadcast(-kInf, T);
  g.q_max_mvar = broadcast(kInf, T);
  g.cost_c2 = c2;
  g.cost_c1 = c1;
  g.emission_factor = w;
  return g;
}

inline Load load(int bus_id, int T, double p, double q = 0.0, int index = 0) {
  Load l;
  l.bus = bus_id;
  l.index = index;
  l.p_mw = broadcast(p, T);
  l.q_mvar = broadcast(q, T);
  return l;
}

/// Single-bus island: one generator with factor 2.0 serving a 100 MW load.
inline Network net_island(int T = 1) {
  Network n;
  n.buses = {bus(1, true)};
  n.generators = {gen(1, T, 0, 200, 0.0, 10.0, 2.0)};
  n.loads = {load(1, T, 100)};
  return n;
}

/// Two buses joined by a lossless line of reactance 0.1 pu (b = -10).
inline Network net_two_bus(int T = 1) {
  Network n;
  n.buses = {bus(1, true), bus(2)};
  n.branches = {branch(1, 2, 0.0, -10.0, 5.0)};
  n.generators = {gen(1, T, 0, 300, 0.01, 20.0, 2.0)};
  n.loads = {load(2, T, 80)};
  return n;
}

/// Mixing case: dirty generator exports to a bus with its own clean unit.
inline Network net_two_bus_mixing(int T = 1) {
  Network n;
  n.buses = {bus(1, true), bus(2)};
  n.branches = {branch(1, 2, 0.0, -10.0, 5.0)};
  n.generators = {gen(1, T, 0, 300, 0.005, 12.0, 2.0, 0), gen(2, T, 0, 60, 0.01, 40.0, 0.0, 0)};
  n.loads = {load(2, T, 100)};
  return n;
}

/// Dirty cheap unit at bus 1, clean expensive unit at bus 2, load at bus 3.
inline Network net_three_bus_v(int T = 1) {
  Network n;
  n.buses = {bus(1, true), bus(2), bus(3)};
  n.branches = {branch(1, 3, 0.0, -10.0, 3.0), branch(2, 3, 0.0, -10.0, 3.0)};
  n.generators = {gen(1, T, 0, 200, 0.005, 10.0, 2.0), gen(2, T, 0, 200, 0.005, 30.0, 0.0)};
  n.loads = {load(3, T, 100)};
  return n;
}

/// Three-bus triangle, two generators, one load.
inline Network net_three_bus_triangle(int T = 1) {
  Network n;
  n.buses = {bus(1, true), bus(2), bus(3)};
  n.branches = {branch(1, 2, 0.0, -8.0, 3.0), branch(1, 3, 0.0, -10.0, 3.0),
                branch(2, 3, 0.0, -12.0, 3.0)};
  n.generators = {gen(1, T, 0, 250, 0.004, 15.0, 1.0251), gen(2, T, 0, 120, 0.008, 28.0, 0.44)};
  n.loads = {load(3, T, 150)};
  return n;
}

/// Six-bus meshed system with a coal, a gas and a renewable unit.
/// Load shapes vary over the horizon; the renewable limit follows a
/// midday-peaked profile.
inline Network net_six_bus(int T = 4) {
  Network n;
  n.buses = {bus(1, true), bus(2), bus(3), bus(4), bus(5), bus(6)};
  n.branches = {branch(1, 2, 0.2, -8.0, 3.5),  branch(1, 4, 0.25, -10.0, 3.5),
                branch(2, 3, 0.2, -8.0, 3.5),  branch(2, 5, 0.25, -10.0, 3.5),
                branch(3, 6, 0.2, -8.0, 3.5),  branch(4, 5, 0.15, -6.0, 3.5),
                branch(5, 6, 0.15, -6.0, 3.5)};
  Generator coal = gen(1, T, 20, 260, 0.004, 18.0, 1.0251167562);  // 2.26 lbs/kWh
  Generator gas = gen(2, T, 10, 180, 0.009, 32.0, 0.4399845989);   // 0.97 lbs/kWh
  Generator wind = gen(3, T, 0, 90, 0.0, 1.0, 0.0);
  coal.ramp_down_mw = -120;
  coal.ramp_up_mw = 120;
  gas.ramp_down_mw = -120;
  gas.ramp_up_mw = 120;
  wind.fuel = "wind";
  coal.fuel = "coal";
  gas.fuel = "gas";
  // midday-peaked renewable availability
  for (int t = 0; t < T; ++t)
    wind.p_max_mw[t] = 30.0 + 60.0 * std::sin(3.14159265358979 * (t + 0.5) / T);
  n.generators = {coal, gas, wind};
  Load l4 = load(4, T, 90), l5 = load(5, T, 110), l6 = load(6, T, 70);
  for (int t = 0; t < T; ++t) {
    l4.p_mw[t] = 80.0 + 12.0 * t;
    l5.p_mw[t] = 100.0 + 8.0 * (T - 1 - t);
    l6.p_mw[t] = 65.0 + 5.0 * (t % 2);
  }
  n.loads = {l4, l5, l6};
  return n;
}

inline StorageUnit storage_unit(int bus_id, double p_cap = 40, double e_max = 160) {
  StorageUnit s;
  s.bus = bus_id;
  s.p_ch_max_mw = p_cap;
  s.p_dc_max_mw = p_cap;
  s.eta_ch = 0.98;
  s.eta_dc = 0.98;
  s.kappa = 0.99;
  s.e_max_mwh = e_max;
  s.e_min_mwh = 0.05 * e_max;
  s.e_init_mwh = 0.5 * e_max;
  s.degradation_cost = 0.8;
  return s;
}

/// Random connected carbon-flow instance built as a DAG of lossy flows:
/// every sink carries load, every source carries generation, T=1 power flow
/// solution included. Feasible by construction.
struct RandomFlowCase {
  Network net;
  pf::PowerFlowSolution pf;
};

inline RandomFlowCase random_flow_case(std::mt19937& rng, int n_buses) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RandomFlowCase rc;
  Network& net = rc.net;
  for (int i = 0; i < n_buses; ++i) net.buses.push_back(bus(i + 1, i == 0));

  // random tree edges directed root -> leaves, plus a few forward chords
  std::vector<std::pair<int, int>> edges;  // (upstream, downstream) bus index
  for (int i = 1; i < n_buses; ++i) {
    const int parent = static_cast<int>(unit(rng) * i);
    edges.push_back({parent, i});
  }
  const int extra = n_buses / 3;
  for (int k = 0; k < extra; ++k) {
    int a = static_cast<int>(unit(rng) * n_buses);
    int b = static_cast<int>(unit(rng) * n_buses);
    if (a == b) continue;
    if (a > b) std::swap(a, b);  // BFS order keeps the graph acyclic
    edges.push_back({a, b});
  }
  for (const auto& [a, b] : edges)
    net.branches.push_back(branch(a + 1, b + 1, 0.02, -8.0 - 8.0 * unit(rng)));

  // loads everywhere; received flows chosen downstream-first
  const int T = 1;
  std::vector<double> load_mw(n_buses);
  for (int i = 0; i < n_buses; ++i) load_mw[i] = 20.0 + 80.0 * unit(rng);
  std::vector<double> demand = load_mw;  // load + sent flows, accumulated upstream

  // About half the nodes keep a local generator covering part of their demand.
  std::vector<double> gen_frac(n_buses, 0.0);
  for (int i = 1; i < n_buses; ++i)
    if (unit(rng) < 0.5) gen_frac[i] = 0.6 * unit(rng);

  rc.pf.resize(T, n_buses, net.branches.size(), 0, 0);
  // walk edges in reverse creation order: downstream edges first
  std::vector<double> sent(net.branches.size(), 0.0), received(net.branches.size(), 0.0);
  for (int e = static_cast<int>(edges.size()) - 1; e >= 0; --e) {
    const auto [a, b] = edges[e];
    // upstream node a covers a share of b's remaining demand; the tree edge
    // takes everything the local generator will not supply
    const double share = (e >= n_buses - 1) ? 0.3 * unit(rng) : 1.0 - gen_frac[b];
    received[e] = demand[b] * share;
    demand[b] -= received[e];
    const double loss_frac = 0.02 * unit(rng);
    sent[e] = received[e] * (1.0 + loss_frac);
    demand[a] += sent[e];
  }
  // whatever demand remains at a node is served by a local generator
  int gi = 0;
  for (int i = 0; i < n_buses; ++i) {
    if (demand[i] <= 1e-9) continue;
    Generator g = gen(i + 1, T, 0, demand[i] * 2 + 10, 0.01, 20.0, 2.5 * unit(rng), gi++);
    net.generators.push_back(g);
    rc.pf.gen_p_mw[0].push_back(demand[i]);
  }
  for (int i = 0; i < n_buses; ++i) net.loads.push_back(load(i + 1, T, load_mw[i]));
  for (size_t e = 0; e < net.branches.size(); ++e) {
    rc.pf.p_from_mw[0][e] = sent[e];
    rc.pf.p_to_mw[0][e] = received[e];
    rc.pf.p_loss_mw[0][e] = sent[e] - received[e];
  }
  return rc;
}

}  // namespace copf::test
