#include "copf/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "copf/accounting.hpp"
#include "copf/carbon_flow.hpp"
#include "copf/errors.hpp"
#include "dispatch_nlp.hpp"

namespace copf::dispatch {

using detail::DispatchNlp;
using detail::FlowMode;
using detail::NlpBuild;
using detail::WarmStart;

bool CarbonPolicy::any_finite() const {
  for (const auto& row : nci_cap)
    for (double c : row)
      if (std::isfinite(c)) return true;
  for (double c : user_cap_ton)
    if (std::isfinite(c)) return true;
  for (double c : node_cap_ton)
    if (std::isfinite(c)) return true;
  return false;
}

namespace {

nlp::SolverOptions to_nlp_options(const DispatchOptions& o) {
  nlp::SolverOptions s;
  s.eq_tol = o.eq_tol;
  s.ineq_tol = 1e-8;
  s.grad_tol = o.kkt_tol * 0.5;
  s.max_outer = o.max_outer;
  s.max_inner = o.max_inner;
  s.verbose = o.verbose;
  return s;
}

nlp::SolverOptions polish_options(const DispatchOptions& o) {
  nlp::SolverOptions s = to_nlp_options(o);
  s.eq_tol = std::min(o.eq_tol, 1e-10);
  s.ineq_tol = 1e-10;
  s.grad_tol = std::min(o.kkt_tol * 0.05, 5e-8);
  return s;
}

/// Proportional-to-capacity starting dispatch with a DC flow sketch.
WarmStart initial_warm(const DispatchProblem& p) {
  const Network& net = p.network;
  const int T = p.grid.periods;
  const int ng = static_cast<int>(net.generators.size());
  WarmStart ws;
  ws.gen_p_mw.assign(T, std::vector<double>(ng, 0.0));
  for (int t = 0; t < T; ++t) {
    double load = 0.0;
    for (const auto& l : net.loads) load += l.p_mw[t];
    double pmin_sum = 0.0, range_sum = 0.0;
    for (const auto& g : net.generators) {
      pmin_sum += g.p_min_mw[t];
      range_sum += g.p_max_mw[t] - g.p_min_mw[t];
    }
    const double need = std::max(0.0, load - pmin_sum);
    const double frac = range_sum > 0 ? std::min(1.0, need / range_sum) : 0.0;
    for (int g = 0; g < ng; ++g) {
      const auto& gen = net.generators[g];
      ws.gen_p_mw[t][g] = gen.p_min_mw[t] + frac * (gen.p_max_mw[t] - gen.p_min_mw[t]);
    }
  }
  try {
    pf::Dispatch d;
    d.gen_p_mw = ws.gen_p_mw;
    const pf::PowerFlowSolution sol = pf::run_dc(net, p.grid, d);
    ws.theta = sol.theta_rad;
    ws.flow_from_mw = sol.p_from_mw;
    ws.flow_to_mw = sol.p_to_mw;
  } catch (const Error&) {
    // keep flat angles; the solver recovers
  }
  return ws;
}

WarmStart warm_from_solution(const DispatchProblem& p, const DispatchSolution& sol) {
  WarmStart ws;
  ws.gen_p_mw = sol.pf.gen_p_mw;
  ws.gen_q_mvar = sol.pf.gen_q_mvar;
  ws.theta = sol.pf.theta_rad;
  ws.v = sol.pf.v_pu;
  ws.flow_from_mw = sol.pf.p_from_mw;
  ws.flow_to_mw = sol.pf.p_to_mw;
  ws.pch_mw = sol.pf.storage_ch_mw;
  ws.pdc_mw = sol.pf.storage_dc_mw;
  ws.e_mwh = sol.e_mwh;
  ws.w = sol.w;
  ws.w_es = sol.w_es;
  if (ws.w.empty()) {
    // Seed nodal intensities by solving the carbon flow on the fixed flows.
    const int T = p.grid.periods;
    const size_t ns = p.network.storage.size();
    ws.w.assign(T, std::vector<double>(p.network.buses.size(), 0.0));
    ws.w_es.assign(T + 1, std::vector<double>(ns, 0.0));
    std::vector<StorageCarbonState> st(ns);
    for (size_t s = 0; s < ns; ++s) st[s] = storage::initial_state(p.network.storage[s]);
    for (int t = 0; t < T; ++t) {
      for (size_t s = 0; s < ns; ++s) ws.w_es[t][s] = st[s].w_es;
      try {
        std::vector<double> wes(ns, 0.0);
        for (size_t s = 0; s < ns; ++s) wes[s] = st[s].w_es;
        const auto m = carbon::build_matrices(p.network, sol.pf, t, p.es_model, wes);
        ws.w[t] = carbon::solve(m);
        for (size_t s = 0; s < ns; ++s) {
          const int b = p.network.bus_index(p.network.storage[s].bus);
          st[s] = storage::step_carbon_water_tank(
              st[s], sol.pf.storage_ch_mw[t][s], sol.pf.storage_dc_mw[t][s], ws.w[t][b],
              p.network.storage[s], p.grid.delta_hours);
        }
      } catch (const Error&) {
        const double w_dflt = 0.3 * p.network.max_emission_factor();
        ws.w[t].assign(p.network.buses.size(), w_dflt);
      }
    }
    for (size_t s = 0; s < ns; ++s) ws.w_es[T][s] = st[s].w_es;
  }
  return ws;
}

std::vector<std::vector<int>> es_dirs_from(const DispatchSolution& sol, int T, int ns) {
  std::vector<std::vector<int>> dirs(T, std::vector<int>(ns, 0));
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < ns; ++s)
      dirs[t][s] = sol.pf.storage_dc_mw[t][s] > sol.pf.storage_ch_mw[t][s] ? -1 : 1;
  return dirs;
}

std::vector<int> branch_dirs_from(const DispatchSolution& sol, int T, int ne) {
  std::vector<int> dirs(ne, 1);
  for (int e = 0; e < ne; ++e) {
    double biggest = 0.0;
    for (int t = 0; t < T; ++t) {
      const double f = sol.pf.p_from_mw[t][e];
      if (std::abs(f) > std::abs(biggest)) biggest = f;
    }
    dirs[e] = biggest >= 0.0 ? 1 : -1;
  }
  return dirs;
}

void fill_solver_stats(DispatchSolution& sol, const DispatchNlp& nlp,
                       const std::vector<double>& x, const nlp::SolveInfo& info) {
  const auto [prod, minc] = nlp.complementarity(x);
  sol.residuals.complementarity_mw2 = prod;
  sol.residuals.min_pair_mw = minc;
  sol.residuals.kkt_stationarity = info.kkt_stationarity;
  sol.outer_iterations = info.outer_iterations;
  sol.inner_iterations = info.inner_iterations;
}

}  // namespace

DispatchSolution solve_opf(const DispatchProblem& problem, const DispatchOptions& opt) {
  const int T = problem.grid.periods;
  const int ns = static_cast<int>(problem.network.storage.size());

  NlpBuild cfg;
  cfg.carbon = false;
  cfg.flow = FlowMode::Signed;
  cfg.eps_init = opt.comp_eps_init;
  cfg.eps_final = opt.comp_eps_final;

  DispatchNlp nlp0(problem, cfg);
  std::vector<double> x = nlp0.make_x0(initial_warm(problem));
  nlp0.set_objective_scale(std::max(1.0, std::abs(nlp0.objective_raw(x))));
  nlp::SolveInfo info = nlp::solve(nlp0, x, to_nlp_options(opt));
  if (info.infeasible)
    throw Infeasible("OPF infeasible: equality residual " + std::to_string(info.eq_residual),
                     "infeasible");
  DispatchSolution sol = nlp0.extract(x);

  // Pin the charge/discharge split and clean up to full accuracy.
  if (ns > 0 && opt.polish) {
    NlpBuild cfg2 = cfg;
    cfg2.es_dir = es_dirs_from(sol, T, ns);
    DispatchNlp nlp1(problem, cfg2);
    std::vector<double> x1 = nlp1.make_x0(warm_from_solution(problem, sol));
    nlp1.set_objective_scale(std::max(1.0, std::abs(nlp1.objective_raw(x1))));
    const nlp::SolveInfo info1 = nlp::solve(nlp1, x1, polish_options(opt));
    if (info1.converged) {
      sol = nlp1.extract(x1);
      fill_solver_stats(sol, nlp1, x1, info1);
      return sol;
    }
  }
  fill_solver_stats(sol, nlp0, x, info);
  if (!info.converged)
    throw NoConvergence("OPF solver did not reach its tolerances", info.outer_iterations,
                        info.eq_residual);
  return sol;
}

DispatchSolution solve_copf(const DispatchProblem& problem, const DispatchOptions& opt,
                            const DispatchSolution* warm) {
  const int T = problem.grid.periods;
  const int ne = static_cast<int>(problem.network.branches.size());
  const int ns = static_cast<int>(problem.network.storage.size());

  DispatchSolution base;
  if (warm) {
    base = *warm;
  } else {
    DispatchOptions oo = opt;
    oo.polish = true;
    base = solve_opf(problem, oo);
  }

  NlpBuild cfg;
  cfg.carbon = true;
  cfg.flow = FlowMode::DualRelaxed;
  cfg.eps_init = opt.comp_eps_init;
  cfg.eps_final = opt.comp_eps_final;

  DispatchNlp stageB(problem, cfg);
  std::vector<double> x = stageB.make_x0(warm_from_solution(problem, base));
  stageB.set_objective_scale(std::max(1.0, std::abs(stageB.objective_raw(x))));
  nlp::SolveInfo info = nlp::solve(stageB, x, to_nlp_options(opt));
  if (info.infeasible) {
    if (problem.policy.any_finite() && !problem.policy.soft)
      throw Infeasible(
          "carbon caps unattainable in hard mode; rerun with soft caps (slack-penalized)",
          "infeasible_hard_cap");
    throw Infeasible("C-OPF infeasible: equality residual " + std::to_string(info.eq_residual),
                     "infeasible");
  }
  DispatchSolution sol = stageB.extract(x);
  fill_solver_stats(sol, stageB, x, info);

  if (opt.polish) {
    NlpBuild cfg2 = cfg;
    cfg2.flow = FlowMode::DualFixed;
    cfg2.branch_dir = branch_dirs_from(sol, T, ne);
    cfg2.es_dir = es_dirs_from(sol, T, ns);
    DispatchNlp stageC(problem, cfg2);
    std::vector<double> x2 = stageC.make_x0(warm_from_solution(problem, sol));
    stageC.set_objective_scale(std::max(1.0, std::abs(stageC.objective_raw(x2))));
    const nlp::SolveInfo info2 = nlp::solve(stageC, x2, polish_options(opt));
    if (info2.converged) {
      DispatchSolution polished = stageC.extract(x2);
      fill_solver_stats(polished, stageC, x2, info2);
      return polished;
    }
  }
  if (!info.converged)
    throw NoConvergence("C-OPF solver did not reach its tolerances", info.outer_iterations,
                        std::max(info.eq_residual, info.ineq_violation));
  return sol;
}

std::vector<SweepPoint> sweep_cap(const DispatchProblem& problem, std::span<const double> caps,
                                  const DispatchOptions& opt, int workers) {
  for (size_t i = 1; i < caps.size(); ++i)
    if (!(caps[i] >= caps[i - 1])) throw Error("sweep caps must be ascending");

  const int T = problem.grid.periods;
  const int nb = static_cast<int>(problem.network.buses.size());
  std::vector<char> has_load(nb, 0);
  for (const auto& l : problem.network.loads)
    has_load[problem.network.bus_index(l.bus)] = 1;

  auto problem_for_cap = [&](double cap) {
    DispatchProblem p = problem;
    p.policy.nci_cap.assign(T, std::vector<double>(nb, kInf));
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < nb; ++i)
        if (has_load[i]) p.policy.nci_cap[t][i] = cap;
    return p;
  };

  std::vector<SweepPoint> out(caps.size());
  auto run_block = [&](size_t begin, size_t end) {
    DispatchSolution prev;
    bool have_prev = false;
    for (size_t i = begin; i < end; ++i) {
      SweepPoint& pt = out[i];
      pt.cap = caps[i];
      const DispatchProblem p = problem_for_cap(caps[i]);
      try {
        const DispatchSolution s =
            solve_copf(p, opt, have_prev ? &prev : nullptr);
        pt.feasible = true;
        pt.cost = s.objective;
        pt.emissions_ton = total_emissions_ton(p, s);
        prev = s;
        have_prev = true;
      } catch (const Infeasible& e) {
        pt.feasible = false;
        pt.note = e.kind;
      } catch (const NoConvergence& e) {
        pt.feasible = false;
        pt.note = std::string("no_convergence: ") + e.what();
      }
    }
  };

  workers = std::max(1, std::min<int>(workers, static_cast<int>(caps.size())));
  if (workers == 1) {
    run_block(0, caps.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (caps.size() + workers - 1) / workers;
    for (int wkr = 0; wkr < workers; ++wkr) {
      const size_t b = wkr * chunk;
      const size_t e = std::min(caps.size(), b + chunk);
      if (b >= e) break;
      pool.emplace_back(run_block, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

DispatchSolution solve_enum_oracle(const DispatchProblem& problem, const DispatchOptions& opt) {
  const int ne = static_cast<int>(problem.network.branches.size());
  if (problem.pf_model != PfModel::Dc)
    throw Error("enumeration oracle supports the DC model only");
  if (ne > 5) throw Error("enumeration oracle is limited to 5 branches");
  const int T = problem.grid.periods;
  const int ns = static_cast<int>(problem.network.storage.size());

  DispatchOptions oo = opt;
  oo.polish = true;
  const DispatchSolution base = solve_opf(problem, oo);

  bool found = false;
  double best_obj = 0.0;
  DispatchSolution best;
  std::vector<int> best_gamma;

  for (unsigned mask = 0; mask < (1u << ne); ++mask) {
    std::vector<int> gamma(ne, 0);
    NlpBuild cfg;
    cfg.carbon = true;
    cfg.flow = FlowMode::DualFixed;
    cfg.branch_dir.resize(ne);
    for (int e = 0; e < ne; ++e) {
      gamma[e] = (mask >> e) & 1u;
      cfg.branch_dir[e] = gamma[e] ? 1 : -1;
    }
    cfg.eps_init = opt.comp_eps_init;
    cfg.eps_final = opt.comp_eps_final;

    try {
      DispatchNlp pattern_nlp(problem, cfg);
      std::vector<double> x = pattern_nlp.make_x0(warm_from_solution(problem, base));
      pattern_nlp.set_objective_scale(std::max(1.0, std::abs(pattern_nlp.objective_raw(x))));
      nlp::SolveInfo info = nlp::solve(pattern_nlp, x, to_nlp_options(opt));
      if (!info.converged || info.infeasible) continue;
      DispatchSolution cand = pattern_nlp.extract(x);

      if (ns > 0) {  // pin the storage split as well
        NlpBuild cfg2 = cfg;
        cfg2.es_dir = es_dirs_from(cand, T, ns);
        DispatchNlp polish_nlp(problem, cfg2);
        std::vector<double> x2 = polish_nlp.make_x0(warm_from_solution(problem, cand));
        polish_nlp.set_objective_scale(std::max(1.0, std::abs(polish_nlp.objective_raw(x2))));
        const nlp::SolveInfo info2 = nlp::solve(polish_nlp, x2, polish_options(opt));
        if (!info2.converged) continue;
        cand = polish_nlp.extract(x2);
        fill_solver_stats(cand, polish_nlp, x2, info2);
      } else {
        std::vector<double> x2 = x;
        DispatchNlp polish_nlp(problem, cfg);
        polish_nlp.set_objective_scale(std::max(1.0, std::abs(polish_nlp.objective_raw(x2))));
        const nlp::SolveInfo info2 = nlp::solve(polish_nlp, x2, polish_options(opt));
        if (info2.converged) {
          cand = polish_nlp.extract(x2);
          fill_solver_stats(cand, polish_nlp, x2, info2);
        } else {
          fill_solver_stats(cand, pattern_nlp, x, info);
        }
      }

      const double tol = 1e-9 * std::max(1.0, std::abs(found ? best_obj : cand.objective));
      if (!found || cand.objective < best_obj - tol) {
        found = true;
        best_obj = cand.objective;
        best = cand;
        best_gamma = gamma;
      } else if (std::abs(cand.objective - best_obj) <= tol &&
                 std::lexicographical_compare(gamma.begin(), gamma.end(), best_gamma.begin(),
                                              best_gamma.end())) {
        best = cand;
        best_gamma = gamma;
      }
    } catch (const Error&) {
      continue;  // pattern infeasible
    }
  }
  if (!found) throw AllPatternsInfeasible("every direction pattern was infeasible");
  return best;
}

double total_emissions_ton(const DispatchProblem& problem, const DispatchSolution& sol) {
  double total = 0.0;
  for (int t = 0; t < problem.grid.periods; ++t)
    for (size_t g = 0; g < problem.network.generators.size(); ++g)
      total += problem.grid.delta_hours * problem.network.generators[g].emission_factor *
               sol.pf.gen_p_mw[t][g];
  return total;
}

Residuals evaluate_solution(const DispatchProblem& problem, const DispatchSolution& sol) {
  const Network& net = problem.network;
  const int T = problem.grid.periods;
  const int nb = static_cast<int>(net.buses.size());
  const int ne = static_cast<int>(net.branches.size());
  const double base = net.base_mva;
  const double dt = problem.grid.delta_hours;
  const bool ac = problem.pf_model == PfModel::FullAc;

  Residuals r = sol.residuals;  // keep solver-recorded stationarity
  r.balance_pu = r.balance_q_pu = r.flow_def_pu = 0.0;
  r.carbon_eq = r.es_energy_mwh = r.es_carbon = 0.0;
  r.complementarity_mw2 = r.min_pair_mw = 0.0;
  r.constraint_violation = 0.0;
  r.w_vs_recomputed = 0.0;

  for (int t = 0; t < T; ++t) {
    const auto bal = pf::active_balance_residual_mw(net, sol.pf, t);
    for (double b : bal) r.balance_pu = std::max(r.balance_pu, std::abs(b) / base);

    for (int e = 0; e < ne; ++e) {
      const auto& br = net.branches[e];
      const int a = net.bus_index(br.from), b = net.bus_index(br.to);
      if (!ac) {
        const double expr = -br.b_pu * (sol.pf.theta_rad[t][a] - sol.pf.theta_rad[t][b]);
        r.flow_def_pu =
            std::max(r.flow_def_pu, std::abs(sol.pf.p_from_mw[t][e] / base - expr));
      } else {
        const double va = sol.pf.v_pu[t][a], vb = sol.pf.v_pu[t][b];
        const double dth = sol.pf.theta_rad[t][a] - sol.pf.theta_rad[t][b];
        const double cs = std::cos(dth), sn = std::sin(dth);
        const double pf_expr = br.g_pu * (va * va - va * vb * cs) - br.b_pu * va * vb * sn;
        const double pt_expr = -br.g_pu * (vb * vb - va * vb * cs) - br.b_pu * va * vb * sn;
        r.flow_def_pu =
            std::max(r.flow_def_pu, std::abs(sol.pf.p_from_mw[t][e] / base - pf_expr));
        r.flow_def_pu =
            std::max(r.flow_def_pu, std::abs(sol.pf.p_to_mw[t][e] / base - pt_expr));
      }
      // complementarity over the stored dual pairs
      const auto& pf_pair = sol.hat.at_from[t][e];
      const auto& pt_pair = sol.hat.at_to[t][e];
      for (const auto& pair : {pf_pair, pt_pair}) {
        r.complementarity_mw2 = std::max(r.complementarity_mw2, pair.fwd_mw * pair.rev_mw);
        r.min_pair_mw = std::max(r.min_pair_mw, std::min(pair.fwd_mw, pair.rev_mw));
      }
      // thermal
      if (std::isfinite(br.s_max_pu)) {
        const double qf = ac ? sol.pf.q_from_mvar[t][e] / base : 0.0;
        const double qt = ac ? sol.pf.q_to_mvar[t][e] / base : 0.0;
        const double sf = std::hypot(sol.pf.p_from_mw[t][e] / base, qf);
        const double st = std::hypot(sol.pf.p_to_mw[t][e] / base, qt);
        r.constraint_violation =
            std::max({r.constraint_violation, (sf - br.s_max_pu) * base,
                      (st - br.s_max_pu) * base});
      }
    }

    if (ac) {
      const auto mis = pf::ac_mismatch_pu(net, sol.pf, t);
      for (int i = 0; i < nb; ++i) {
        r.balance_pu = std::max(r.balance_pu, std::abs(mis[i]));
        r.balance_q_pu = std::max(r.balance_q_pu, std::abs(mis[nb + i]));
      }
    }

    // generator limits and ramps
    for (size_t g = 0; g < net.generators.size(); ++g) {
      const auto& gen = net.generators[g];
      const double pv = sol.pf.gen_p_mw[t][g];
      r.constraint_violation = std::max({r.constraint_violation, gen.p_min_mw[t] - pv,
                                         pv - gen.p_max_mw[t]});
      if (t > 0) {
        const double d = pv - sol.pf.gen_p_mw[t - 1][g];
        if (std::isfinite(gen.ramp_up_mw))
          r.constraint_violation = std::max(r.constraint_violation, d - gen.ramp_up_mw);
        if (std::isfinite(gen.ramp_down_mw))
          r.constraint_violation = std::max(r.constraint_violation, gen.ramp_down_mw - d);
      }
    }

    // storage pairs
    for (size_t s = 0; s < net.storage.size(); ++s) {
      const double ch = sol.pf.storage_ch_mw[t][s], dc = sol.pf.storage_dc_mw[t][s];
      r.complementarity_mw2 = std::max(r.complementarity_mw2, ch * dc);
      r.min_pair_mw = std::max(r.min_pair_mw, std::min(ch, dc));
    }

    // hard caps
    if (!problem.policy.nci_cap.empty() && !sol.w.empty()) {
      for (int i = 0; i < nb; ++i) {
        const double cap = problem.policy.nci_cap[t][i];
        if (!std::isfinite(cap)) continue;
        const double slack =
            sol.nci_slack.empty() ? 0.0 : sol.nci_slack[t][i];
        r.constraint_violation =
            std::max(r.constraint_violation, sol.w[t][i] - cap - slack);
      }
    }
  }

  // storage dynamics re-check
  for (size_t s = 0; s < net.storage.size(); ++s) {
    const auto& u = net.storage[s];
    for (int t = 0; t < T; ++t) {
      if (sol.e_mwh.empty()) break;
      const double e0 = sol.e_mwh[t][s], e1 = sol.e_mwh[t + 1][s];
      const double res = e1 - u.kappa * e0 -
                         dt * (u.eta_ch * sol.pf.storage_ch_mw[t][s] -
                               sol.pf.storage_dc_mw[t][s] / u.eta_dc);
      r.es_energy_mwh = std::max(r.es_energy_mwh, std::abs(res));
      if (!sol.w_es.empty() && !sol.w.empty()) {
        const int b = net.bus_index(u.bus);
        const double mixed = u.kappa * e0 + dt * u.eta_ch * sol.pf.storage_ch_mw[t][s];
        const double res_w = sol.w_es[t + 1][s] * mixed - u.kappa * e0 * sol.w_es[t][s] -
                             dt * u.eta_ch * sol.pf.storage_ch_mw[t][s] * sol.w[t][b];
        r.es_carbon = std::max(r.es_carbon, std::abs(res_w) / std::max(1.0, mixed));
      }
    }
  }

  // carbon flow equations re-solved on the fixed flows
  if (!sol.w.empty()) {
    for (int t = 0; t < T; ++t) {
      std::vector<double> wes(net.storage.size(), 0.0);
      if (problem.es_model == EsModelKind::WaterTank && !sol.w_es.empty())
        for (size_t s = 0; s < net.storage.size(); ++s) wes[s] = sol.w_es[t][s];
      try {
        const auto m = carbon::build_matrices(net, sol.pf, t, problem.es_model, wes);
        const auto residual = carbon::conservation_residual(m, sol.w[t]);
        for (int i = 0; i < m.n; ++i)
          r.carbon_eq =
              std::max(r.carbon_eq, std::abs(residual[i]) / std::max(1.0, m.p_in_mw[i]));
        const auto verdict = carbon::check_feasibility(m);
        const auto w_ref = carbon::solve(m, verdict);
        std::vector<char> skip(nb, 0);
        for (int i : verdict.excluded) skip[i] = 1;  // intensity undefined there
        for (int i = 0; i < nb; ++i)
          if (!skip[i])
            r.w_vs_recomputed = std::max(r.w_vs_recomputed, std::abs(w_ref[i] - sol.w[t][i]));
      } catch (const Error&) {
        r.w_vs_recomputed = kInf;
      }
    }
  }
  return r;
}

}  // namespace copf::dispatch
