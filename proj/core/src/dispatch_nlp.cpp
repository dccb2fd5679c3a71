#include "dispatch_nlp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "copf/errors.hpp"

namespace copf::dispatch::detail {

int DispatchNlp::Slots::add(double lo_, double hi_) {
  lo.push_back(lo_);
  hi.push_back(hi_);
  fixed_val.push_back(0.0);
  xidx.push_back(nfree++);
  return static_cast<int>(lo.size()) - 1;
}

int DispatchNlp::Slots::add_fixed(double v) {
  lo.push_back(v);
  hi.push_back(v);
  fixed_val.push_back(v);
  xidx.push_back(-1);
  return static_cast<int>(lo.size()) - 1;
}

DispatchNlp::DispatchNlp(const DispatchProblem& problem, NlpBuild build)
    : p_(problem), cfg_(std::move(build)) {
  const Network& net = p_.network;
  ac_ = p_.pf_model == PfModel::FullAc;
  T_ = p_.grid.periods;
  nb_ = static_cast<int>(net.buses.size());
  ne_ = static_cast<int>(net.branches.size());
  ng_ = static_cast<int>(net.generators.size());
  ns_ = static_cast<int>(net.storage.size());
  nl_ = static_cast<int>(net.loads.size());
  base_ = net.base_mva;
  dt_ = p_.grid.delta_hours;
  slack_ = net.slack_index();
  if (slack_ < 0) throw Error("dispatch requires a slack bus (angle reference)");
  if (cfg_.carbon && cfg_.flow == FlowMode::Signed)
    throw Error("carbon model requires the dual flow parameterization");
  track_wes_ = cfg_.carbon && p_.es_model == EsModelKind::WaterTank;
  eps_ = cfg_.eps_init;

  for (const auto& br : net.branches) {
    abus_.push_back(net.bus_index(br.from));
    bbus_.push_back(net.bus_index(br.to));
  }
  for (const auto& g : net.generators) gbus_.push_back(net.bus_index(g.bus));
  for (const auto& l : net.loads) lbus_.push_back(net.bus_index(l.bus));
  for (const auto& s : net.storage) sbus_.push_back(net.bus_index(s.bus));

  if (cfg_.es_dir.empty()) cfg_.es_dir.assign(T_, std::vector<int>(ns_, 0));
  if (cfg_.flow == FlowMode::DualFixed && static_cast<int>(cfg_.branch_dir.size()) != ne_)
    throw Error("DualFixed mode needs one direction per branch");

  // ---- slots ----
  s_pg_.resize(T_ * ng_);
  s_qg_.assign(T_ * ng_, -1);
  s_th_.resize(T_ * nb_);
  s_v_.assign(T_ * nb_, -1);
  s_ff_i_.resize(T_ * ne_);
  s_fr_i_.resize(T_ * ne_);
  s_ff_j_.assign(T_ * ne_, -1);
  s_fr_j_.assign(T_ * ne_, -1);
  s_pch_.resize(T_ * ns_);
  s_pdc_.resize(T_ * ns_);
  s_w_.assign(T_ * nb_, -1);
  s_e_.resize((T_ + 1) * ns_);
  s_wes_.assign((T_ + 1) * ns_, -1);
  s_anci_.assign(T_ * nb_, -1);
  s_auser_.assign(nl_, -1);
  s_anode_.assign(nb_, -1);
  nci_finite_.assign(T_ * nb_, 0);
  user_finite_.assign(nl_, 0);
  node_finite_.assign(nb_, 0);

  const auto& pol = p_.policy;
  for (int t = 0; t < T_; ++t)
    for (int i = 0; i < nb_; ++i)
      if (!pol.nci_cap.empty() && std::isfinite(pol.nci_cap[t][i]))
        nci_finite_[t * nb_ + i] = 1;
  for (int l = 0; l < nl_; ++l)
    if (!pol.user_cap_ton.empty() && std::isfinite(pol.user_cap_ton[l])) user_finite_[l] = 1;
  for (int i = 0; i < nb_; ++i)
    if (!pol.node_cap_ton.empty() && std::isfinite(pol.node_cap_ton[i])) node_finite_[i] = 1;

  for (int t = 0; t < T_; ++t) {
    for (int g = 0; g < ng_; ++g) {
      const auto& gen = net.generators[g];
      s_pg_[t * ng_ + g] = slots_.add(gen.p_min_mw[t] / base_, gen.p_max_mw[t] / base_);
      if (ac_)
        s_qg_[t * ng_ + g] = slots_.add(gen.q_min_mvar[t] / base_, gen.q_max_mvar[t] / base_);
    }
    for (int i = 0; i < nb_; ++i) {
      if (i == slack_)
        s_th_[t * nb_ + i] = slots_.add_fixed(0.0);
      else
        s_th_[t * nb_ + i] = slots_.add(net.buses[i].theta_min_rad, net.buses[i].theta_max_rad);
      if (ac_) s_v_[t * nb_ + i] = slots_.add(net.buses[i].v_min_pu, net.buses[i].v_max_pu);
    }
    for (int e = 0; e < ne_; ++e) {
      const int k = t * ne_ + e;
      switch (cfg_.flow) {
        case FlowMode::Signed:
          s_ff_i_[k] = slots_.add(-kInf, kInf);
          s_fr_i_[k] = slots_.add_fixed(0.0);
          if (ac_) {
            s_ff_j_[k] = slots_.add(-kInf, kInf);
            s_fr_j_[k] = slots_.add_fixed(0.0);
          }
          break;
        case FlowMode::DualRelaxed:
          s_ff_i_[k] = slots_.add(0.0, kInf);
          s_fr_i_[k] = slots_.add(0.0, kInf);
          if (ac_) {
            s_ff_j_[k] = slots_.add(0.0, kInf);
            s_fr_j_[k] = slots_.add(0.0, kInf);
          }
          break;
        case FlowMode::DualFixed: {
          const bool fwd = cfg_.branch_dir[e] >= 0;
          s_ff_i_[k] = fwd ? slots_.add(0.0, kInf) : slots_.add_fixed(0.0);
          s_fr_i_[k] = fwd ? slots_.add_fixed(0.0) : slots_.add(0.0, kInf);
          if (ac_) {
            s_ff_j_[k] = fwd ? slots_.add(0.0, kInf) : slots_.add_fixed(0.0);
            s_fr_j_[k] = fwd ? slots_.add_fixed(0.0) : slots_.add(0.0, kInf);
          }
          break;
        }
      }
    }
    for (int s = 0; s < ns_; ++s) {
      const auto& u = net.storage[s];
      const int dir = cfg_.es_dir[t][s];
      s_pch_[t * ns_ + s] =
          dir >= 0 ? slots_.add(0.0, u.p_ch_max_mw / base_) : slots_.add_fixed(0.0);
      s_pdc_[t * ns_ + s] =
          dir <= 0 ? slots_.add(0.0, u.p_dc_max_mw / base_) : slots_.add_fixed(0.0);
    }
    if (cfg_.carbon) {
      // natural nodal intensity range from proportional sharing; the zero
      // floor also blocks degenerate nodes from acting as carbon sinks
      double w_nat = net.max_emission_factor();
      for (const auto& su : net.storage) w_nat = std::max(w_nat, su.w_es_init);
      const double w_hi = w_nat * 1.01 + 1e-6;
      for (int i = 0; i < nb_; ++i) s_w_[t * nb_ + i] = slots_.add(0.0, w_hi);
    }
    if (pol.soft)
      for (int i = 0; i < nb_; ++i)
        if (nci_finite_[t * nb_ + i] && cfg_.carbon)
          s_anci_[t * nb_ + i] = slots_.add(0.0, kInf);
  }
  for (int s = 0; s < ns_; ++s) {
    const auto& u = net.storage[s];
    s_e_[s] = slots_.add_fixed(u.e_init_mwh / base_);
    if (track_wes_) s_wes_[s] = slots_.add_fixed(u.w_es_init);
  }
  double w_nat = net.max_emission_factor();
  for (const auto& su : net.storage) w_nat = std::max(w_nat, su.w_es_init);
  for (int k = 1; k <= T_; ++k)
    for (int s = 0; s < ns_; ++s) {
      const auto& u = net.storage[s];
      s_e_[k * ns_ + s] = slots_.add(u.e_min_mwh / base_, u.e_max_mwh / base_);
      if (track_wes_) s_wes_[k * ns_ + s] = slots_.add(0.0, w_nat * 1.01 + 1e-6);
    }
  if (pol.soft && cfg_.carbon) {
    for (int l = 0; l < nl_; ++l)
      if (user_finite_[l]) s_auser_[l] = slots_.add(0.0, kInf);
    for (int i = 0; i < nb_; ++i)
      if (node_finite_[i]) s_anode_[i] = slots_.add(0.0, kInf);
  }
  nfree_ = slots_.nfree;

  // ---- row counts ----
  neq_ = T_ * nb_ + T_ * ne_ + T_ * ns_ + ns_;  // balP, fd_from, es energy, periodic
  if (ac_) neq_ += T_ * nb_ + T_ * ne_;         // balQ, fd_to
  if (cfg_.carbon) neq_ += T_ * nb_;
  if (track_wes_) neq_ += T_ * ns_;

  nineq_ = 0;
  for (int g = 0; g < ng_; ++g) {
    if (std::isfinite(net.generators[g].ramp_up_mw)) nineq_ += T_ - 1;
    if (std::isfinite(net.generators[g].ramp_down_mw)) nineq_ += T_ - 1;
  }
  for (int e = 0; e < ne_; ++e)
    if (std::isfinite(net.branches[e].s_max_pu)) nineq_ += ac_ ? 2 * T_ : T_;
  if (cfg_.flow == FlowMode::DualRelaxed) {
    nineq_ += T_ * ne_ * (ac_ ? 2 : 1);
    has_products_ = true;
  }
  for (int t = 0; t < T_; ++t)
    for (int s = 0; s < ns_; ++s)
      if (cfg_.es_dir[t][s] == 0) {
        ++nineq_;
        has_products_ = true;
      }
  if (cfg_.carbon) {
    for (int k = 0; k < T_ * nb_; ++k)
      if (nci_finite_[k]) ++nineq_;
    for (int l = 0; l < nl_; ++l)
      if (user_finite_[l]) ++nineq_;
    for (int i = 0; i < nb_; ++i)
      if (node_finite_[i]) ++nineq_;
  }
}

void DispatchNlp::var_bounds(std::span<double> lo, std::span<double> hi) const {
  for (size_t slot = 0; slot < slots_.lo.size(); ++slot) {
    const int x = slots_.xidx[slot];
    if (x >= 0) {
      lo[x] = slots_.lo[slot];
      hi[x] = slots_.hi[slot];
    }
  }
}

double DispatchNlp::flow_from(std::span<const double> x, int t, int e) const {
  return slots_.value(ffi(t, e), x) - slots_.value(fri(t, e), x);
}

double DispatchNlp::flow_to(std::span<const double> x, int t, int e) const {
  if (!ac_) return flow_from(x, t, e);
  return slots_.value(ffj(t, e), x) - slots_.value(frj(t, e), x);
}

double DispatchNlp::objective_raw(std::span<const double> x) const {
  const Network& net = p_.network;
  double f = 0.0;
  for (int t = 0; t < T_; ++t) {
    for (int g = 0; g < ng_; ++g) {
      const auto& gen = net.generators[g];
      const double pmw = slots_.value(pg(t, g), x) * base_;
      f += gen.cost_c2 * pmw * pmw + gen.cost_c1 * pmw + gen.cost_c0;
      f += p_.emission_price * gen.emission_factor * pmw;
    }
    for (int s = 0; s < ns_; ++s) {
      const double mw =
          (slots_.value(pch(t, s), x) + slots_.value(pdc(t, s), x)) * base_;
      f += net.storage[s].degradation_cost * mw;
    }
    for (int i = 0; i < nb_; ++i) {
      const int a = s_anci_[t * nb_ + i];
      if (a >= 0) f += p_.policy.slack_penalty * slots_.value(a, x);
    }
  }
  for (int l = 0; l < nl_; ++l)
    if (s_auser_[l] >= 0) f += p_.policy.slack_penalty * slots_.value(s_auser_[l], x);
  for (int i = 0; i < nb_; ++i)
    if (s_anode_[i] >= 0) f += p_.policy.slack_penalty * slots_.value(s_anode_[i], x);
  return f;
}

double DispatchNlp::objective(std::span<const double> x, std::span<double> grad) const {
  const Network& net = p_.network;
  const double inv = 1.0 / f_scale_;
  if (!grad.empty()) {
    for (int t = 0; t < T_; ++t) {
      for (int g = 0; g < ng_; ++g) {
        const auto& gen = net.generators[g];
        const double pmw = slots_.value(pg(t, g), x) * base_;
        const double d =
            (2.0 * gen.cost_c2 * pmw + gen.cost_c1 + p_.emission_price * gen.emission_factor) *
            base_;
        slots_.acc(pg(t, g), d * inv, grad);
      }
      for (int s = 0; s < ns_; ++s) {
        const double d = net.storage[s].degradation_cost * base_ * inv;
        slots_.acc(pch(t, s), d, grad);
        slots_.acc(pdc(t, s), d, grad);
      }
      for (int i = 0; i < nb_; ++i) {
        const int a = s_anci_[t * nb_ + i];
        if (a >= 0) slots_.acc(a, p_.policy.slack_penalty * inv, grad);
      }
    }
    for (int l = 0; l < nl_; ++l)
      if (s_auser_[l] >= 0) slots_.acc(s_auser_[l], p_.policy.slack_penalty * inv, grad);
    for (int i = 0; i < nb_; ++i)
      if (s_anode_[i] >= 0) slots_.acc(s_anode_[i], p_.policy.slack_penalty * inv, grad);
  }
  return objective_raw(x) * inv;
}

void DispatchNlp::walk_eq(std::span<const double> x, std::span<double> c,
                          std::span<const double> v, std::span<double> g) const {
  const Network& net = p_.network;
  int k = 0;
  const bool want_c = !c.empty();
  const bool want_g = !v.empty();
  auto val = [&](int slot) { return slots_.value(slot, x); };

  for (int t = 0; t < T_; ++t) {
    // -- active power balance --
    std::vector<double> plbus(nb_, 0.0);
    for (int l = 0; l < nl_; ++l) plbus[lbus_[l]] += net.loads[l].p_mw[t] / base_;

    for (int i = 0; i < nb_; ++i) {
      double cv = -plbus[i];
      const double m = want_g ? v[k] : 0.0;
      for (int gi = 0; gi < ng_; ++gi)
        if (gbus_[gi] == i) {
          cv += val(pg(t, gi));
          if (want_g) slots_.acc(pg(t, gi), m, g);
        }
      for (int s = 0; s < ns_; ++s)
        if (sbus_[s] == i) {
          cv += val(pdc(t, s)) - val(pch(t, s));
          if (want_g) {
            slots_.acc(pdc(t, s), m, g);
            slots_.acc(pch(t, s), -m, g);
          }
        }
      for (int e = 0; e < ne_; ++e) {
        if (abus_[e] == i) {
          cv -= flow_from(x, t, e);
          if (want_g) {
            slots_.acc(ffi(t, e), -m, g);
            slots_.acc(fri(t, e), m, g);
          }
        }
        if (bbus_[e] == i) {
          cv += flow_to(x, t, e);
          if (want_g) {
            if (ac_) {
              slots_.acc(ffj(t, e), m, g);
              slots_.acc(frj(t, e), -m, g);
            } else {
              slots_.acc(ffi(t, e), m, g);
              slots_.acc(fri(t, e), -m, g);
            }
          }
        }
      }
      if (want_c) c[k] = cv;
      ++k;
    }

    // -- reactive power balance (AC) --
    if (ac_) {
      std::vector<double> qlbus(nb_, 0.0);
      for (int l = 0; l < nl_; ++l) qlbus[lbus_[l]] += net.loads[l].q_mvar[t] / base_;
      for (int i = 0; i < nb_; ++i) {
        double cv = -qlbus[i];
        const double m = want_g ? v[k] : 0.0;
        for (int gi = 0; gi < ng_; ++gi)
          if (gbus_[gi] == i) {
            cv += val(qg(t, gi));
            if (want_g) slots_.acc(qg(t, gi), m, g);
          }
        for (int e = 0; e < ne_; ++e) {
          const bool at_from = abus_[e] == i, at_to = bbus_[e] == i;
          if (!at_from && !at_to) continue;
          const int a = abus_[e], b = bbus_[e];
          const auto& br = net.branches[e];
          const double va = val(vv(t, a)), vb = val(vv(t, b));
          const double dth = val(th(t, a)) - val(th(t, b));
          const double cs = std::cos(dth), sn = std::sin(dth);
          if (at_from) {
            // outgoing reactive flow measured at the from end
            cv -= br.b_pu * (va * vb * cs - va * va) - br.g_pu * va * vb * sn;
            if (want_g) {
              slots_.acc(vv(t, a), -m * (br.b_pu * (vb * cs - 2 * va) - br.g_pu * vb * sn), g);
              slots_.acc(vv(t, b), -m * (br.b_pu * va * cs - br.g_pu * va * sn), g);
              const double dth_term = -br.b_pu * va * vb * sn - br.g_pu * va * vb * cs;
              slots_.acc(th(t, a), -m * dth_term, g);
              slots_.acc(th(t, b), m * dth_term, g);
            }
          } else {
            // outgoing reactive flow measured at the to end
            cv -= br.b_pu * (va * vb * cs - vb * vb) + br.g_pu * va * vb * sn;
            if (want_g) {
              slots_.acc(vv(t, a), -m * (br.b_pu * vb * cs + br.g_pu * vb * sn), g);
              slots_.acc(vv(t, b), -m * (br.b_pu * (va * cs - 2 * vb) + br.g_pu * va * sn), g);
              const double dth_term = -br.b_pu * va * vb * sn + br.g_pu * va * vb * cs;
              slots_.acc(th(t, a), -m * dth_term, g);
              slots_.acc(th(t, b), m * dth_term, g);
            }
          }
        }
        if (want_c) c[k] = cv;
        ++k;
      }
    }

    // -- flow definitions --
    for (int e = 0; e < ne_; ++e) {
      const int a = abus_[e], b = bbus_[e];
      const auto& br = net.branches[e];
      const double m = want_g ? v[k] : 0.0;
      double cv;
      if (!ac_) {
        cv = flow_from(x, t, e) + br.b_pu * (val(th(t, a)) - val(th(t, b)));
        if (want_g) {
          slots_.acc(ffi(t, e), m, g);
          slots_.acc(fri(t, e), -m, g);
          slots_.acc(th(t, a), m * br.b_pu, g);
          slots_.acc(th(t, b), -m * br.b_pu, g);
        }
      } else {
        const double va = val(vv(t, a)), vb = val(vv(t, b));
        const double dth = val(th(t, a)) - val(th(t, b));
        const double cs = std::cos(dth), sn = std::sin(dth);
        const double pexpr = br.g_pu * (va * va - va * vb * cs) - br.b_pu * va * vb * sn;
        cv = flow_from(x, t, e) - pexpr;
        if (want_g) {
          slots_.acc(ffi(t, e), m, g);
          slots_.acc(fri(t, e), -m, g);
          slots_.acc(vv(t, a), -m * (br.g_pu * (2 * va - vb * cs) - br.b_pu * vb * sn), g);
          slots_.acc(vv(t, b), -m * (-br.g_pu * va * cs - br.b_pu * va * sn), g);
          const double dth_term = br.g_pu * va * vb * sn - br.b_pu * va * vb * cs;
          slots_.acc(th(t, a), -m * dth_term, g);
          slots_.acc(th(t, b), m * dth_term, g);
        }
      }
      if (want_c) c[k] = cv;
      ++k;
    }
    if (ac_) {
      for (int e = 0; e < ne_; ++e) {
        const int a = abus_[e], b = bbus_[e];
        const auto& br = net.branches[e];
        const double m = want_g ? v[k] : 0.0;
        const double va = val(vv(t, a)), vb = val(vv(t, b));
        const double dth = val(th(t, a)) - val(th(t, b));
        const double cs = std::cos(dth), sn = std::sin(dth);
        const double pexpr = -br.g_pu * (vb * vb - va * vb * cs) - br.b_pu * va * vb * sn;
        const double cv = flow_to(x, t, e) - pexpr;
        if (want_g) {
          slots_.acc(ffj(t, e), m, g);
          slots_.acc(frj(t, e), -m, g);
          slots_.acc(vv(t, b), -m * (-br.g_pu * (2 * vb - va * cs) - br.b_pu * va * sn), g);
          slots_.acc(vv(t, a), -m * (br.g_pu * vb * cs - br.b_pu * vb * sn), g);
          const double dth_term = -br.g_pu * va * vb * sn - br.b_pu * va * vb * cs;
          slots_.acc(th(t, a), -m * dth_term, g);
          slots_.acc(th(t, b), m * dth_term, g);
        }
        if (want_c) c[k] = cv;
        ++k;
      }
    }

    // -- nodal carbon intensity equations --
    if (cfg_.carbon) {
      for (int i = 0; i < nb_; ++i) {
        const double m = want_g ? v[k] : 0.0;
        const double wi = val(wn(t, i));
        double inflow = 0.0;  // generation + hat inflow + discharge
        double rhs = 0.0;     // carbon inflow
        for (int gi = 0; gi < ng_; ++gi)
          if (gbus_[gi] == i) {
            const double pv = val(pg(t, gi));
            inflow += pv;
            rhs += net.generators[gi].emission_factor * pv;
            if (want_g)
              slots_.acc(pg(t, gi), m * (wi - net.generators[gi].emission_factor), g);
          }
        for (int e = 0; e < ne_; ++e) {
          int in_slot = -1, other = -1;
          if (bbus_[e] == i) {  // receives the forward component
            in_slot = ac_ ? ffj(t, e) : ffi(t, e);
            other = abus_[e];
          } else if (abus_[e] == i) {  // receives the reverse component
            in_slot = fri(t, e);
            other = bbus_[e];
          } else {
            continue;
          }
          const double hatv = val(in_slot);
          const double wother = val(wn(t, other));
          inflow += hatv;
          rhs += wother * hatv;
          if (want_g) {
            slots_.acc(in_slot, m * (wi - wother), g);
            slots_.acc(wn(t, other), -m * hatv, g);
          }
        }
        for (int s = 0; s < ns_; ++s)
          if (sbus_[s] == i) {
            const double dc = val(pdc(t, s));
            const double wes_cur = track_wes_ ? val(wes(t, s)) : 0.0;
            inflow += dc;
            rhs += wes_cur * dc;
            if (want_g) {
              slots_.acc(pdc(t, s), m * (wi - wes_cur), g);
              if (track_wes_) slots_.acc(wes(t, s), -m * dc, g);
            }
          }
        if (want_g) slots_.acc(wn(t, i), m * inflow, g);
        if (want_c) c[k] = wi * inflow - rhs;
        ++k;
      }
    }

    // -- storage energy dynamics --
    for (int s = 0; s < ns_; ++s) {
      const auto& u = net.storage[s];
      const double m = want_g ? v[k] : 0.0;
      const double cv = val(es(t + 1, s)) - u.kappa * val(es(t, s)) -
                        dt_ * (u.eta_ch * val(pch(t, s)) - val(pdc(t, s)) / u.eta_dc);
      if (want_g) {
        slots_.acc(es(t + 1, s), m, g);
        slots_.acc(es(t, s), -m * u.kappa, g);
        slots_.acc(pch(t, s), -m * dt_ * u.eta_ch, g);
        slots_.acc(pdc(t, s), m * dt_ / u.eta_dc, g);
      }
      if (want_c) c[k] = cv;
      ++k;
    }

    // -- storage carbon intensity dynamics (water tank) --
    if (track_wes_) {
      for (int s = 0; s < ns_; ++s) {
        const auto& u = net.storage[s];
        const double m = want_g ? v[k] : 0.0;
        const double e_cur = val(es(t, s));
        const double ch = val(pch(t, s));
        const double w_next = val(wes(t + 1, s));
        const double w_cur = val(wes(t, s));
        const double w_node = val(wn(t, sbus_[s]));
        const double mixed = u.kappa * e_cur + dt_ * u.eta_ch * ch;
        const double cv = w_next * mixed - u.kappa * e_cur * w_cur - dt_ * u.eta_ch * ch * w_node;
        if (want_g) {
          slots_.acc(wes(t + 1, s), m * mixed, g);
          slots_.acc(es(t, s), m * u.kappa * (w_next - w_cur), g);
          slots_.acc(pch(t, s), m * dt_ * u.eta_ch * (w_next - w_node), g);
          slots_.acc(wes(t, s), -m * u.kappa * e_cur, g);
          slots_.acc(wn(t, sbus_[s]), -m * dt_ * u.eta_ch * ch, g);
        }
        if (want_c) c[k] = cv;
        ++k;
      }
    }
  }

  // -- periodicity --
  for (int s = 0; s < ns_; ++s) {
    const double m = want_g ? v[k] : 0.0;
    if (want_c) c[k] = val(es(T_, s)) - net.storage[s].e_init_mwh / base_;
    if (want_g) slots_.acc(es(T_, s), m, g);
    ++k;
  }
  assert(k == neq_);
}

void DispatchNlp::walk_ineq(std::span<const double> x, std::span<double> c,
                            std::span<const double> v, std::span<double> g) const {
  const Network& net = p_.network;
  int k = 0;
  const bool want_c = !c.empty();
  const bool want_g = !v.empty();
  auto val = [&](int slot) { return slots_.value(slot, x); };

  // ramping
  for (int gi = 0; gi < ng_; ++gi) {
    const auto& gen = net.generators[gi];
    if (std::isfinite(gen.ramp_up_mw)) {
      for (int t = 1; t < T_; ++t) {
        const double m = want_g ? v[k] : 0.0;
        if (want_c) c[k] = val(pg(t, gi)) - val(pg(t - 1, gi)) - gen.ramp_up_mw / base_;
        if (want_g) {
          slots_.acc(pg(t, gi), m, g);
          slots_.acc(pg(t - 1, gi), -m, g);
        }
        ++k;
      }
    }
    if (std::isfinite(gen.ramp_down_mw)) {
      for (int t = 1; t < T_; ++t) {
        const double m = want_g ? v[k] : 0.0;
        if (want_c) c[k] = gen.ramp_down_mw / base_ - (val(pg(t, gi)) - val(pg(t - 1, gi)));
        if (want_g) {
          slots_.acc(pg(t, gi), -m, g);
          slots_.acc(pg(t - 1, gi), m, g);
        }
        ++k;
      }
    }
  }

  // thermal limits
  for (int e = 0; e < ne_; ++e) {
    const auto& br = net.branches[e];
    if (!std::isfinite(br.s_max_pu)) continue;
    const double cap2 = br.s_max_pu * br.s_max_pu;
    for (int t = 0; t < T_; ++t) {
      {
        const double m = want_g ? v[k] : 0.0;
        const double pf = flow_from(x, t, e);
        double q = 0.0;
        if (ac_) {
          const int a = abus_[e], b = bbus_[e];
          const double va = val(vv(t, a)), vb = val(vv(t, b));
          const double dth = val(th(t, a)) - val(th(t, b));
          const double cs = std::cos(dth), sn = std::sin(dth);
          q = br.b_pu * (va * vb * cs - va * va) - br.g_pu * va * vb * sn;
          if (want_g) {
            slots_.acc(vv(t, a), m * 2 * q * (br.b_pu * (vb * cs - 2 * va) - br.g_pu * vb * sn),
                       g);
            slots_.acc(vv(t, b), m * 2 * q * (br.b_pu * va * cs - br.g_pu * va * sn), g);
            const double dq = -br.b_pu * va * vb * sn - br.g_pu * va * vb * cs;
            slots_.acc(th(t, a), m * 2 * q * dq, g);
            slots_.acc(th(t, b), -m * 2 * q * dq, g);
          }
        }
        if (want_c) c[k] = pf * pf + q * q - cap2;
        if (want_g) {
          slots_.acc(ffi(t, e), m * 2 * pf, g);
          slots_.acc(fri(t, e), -m * 2 * pf, g);
        }
        ++k;
      }
      if (ac_) {
        const double m = want_g ? v[k] : 0.0;
        const double pt = flow_to(x, t, e);
        const int a = abus_[e], b = bbus_[e];
        const double va = val(vv(t, a)), vb = val(vv(t, b));
        const double dth = val(th(t, a)) - val(th(t, b));
        const double cs = std::cos(dth), sn = std::sin(dth);
        const double q = -br.b_pu * (va * vb * cs - vb * vb) - br.g_pu * va * vb * sn;
        if (want_c) c[k] = pt * pt + q * q - cap2;
        if (want_g) {
          slots_.acc(ffj(t, e), m * 2 * pt, g);
          slots_.acc(frj(t, e), -m * 2 * pt, g);
          slots_.acc(vv(t, a), m * 2 * q * (-br.b_pu * vb * cs - br.g_pu * vb * sn), g);
          slots_.acc(vv(t, b), m * 2 * q * (-br.b_pu * (va * cs - 2 * vb) - br.g_pu * va * sn),
                     g);
          const double dq = br.b_pu * va * vb * sn - br.g_pu * va * vb * cs;
          slots_.acc(th(t, a), m * 2 * q * dq, g);
          slots_.acc(th(t, b), -m * 2 * q * dq, g);
        }
        ++k;
      }
    }
  }

  // relaxed complementarity products (branches)
  if (cfg_.flow == FlowMode::DualRelaxed) {
    for (int t = 0; t < T_; ++t)
      for (int e = 0; e < ne_; ++e) {
        {
          const double m = want_g ? v[k] : 0.0;
          const double f = val(ffi(t, e)), r = val(fri(t, e));
          if (want_c) c[k] = f * r - eps_;
          if (want_g) {
            slots_.acc(ffi(t, e), m * r, g);
            slots_.acc(fri(t, e), m * f, g);
          }
          ++k;
        }
        if (ac_) {
          const double m = want_g ? v[k] : 0.0;
          const double f = val(ffj(t, e)), r = val(frj(t, e));
          if (want_c) c[k] = f * r - eps_;
          if (want_g) {
            slots_.acc(ffj(t, e), m * r, g);
            slots_.acc(frj(t, e), m * f, g);
          }
          ++k;
        }
      }
  }

  // relaxed complementarity (storage)
  for (int t = 0; t < T_; ++t)
    for (int s = 0; s < ns_; ++s)
      if (cfg_.es_dir[t][s] == 0) {
        const double m = want_g ? v[k] : 0.0;
        const double ch = val(pch(t, s)), dc = val(pdc(t, s));
        if (want_c) c[k] = ch * dc - eps_;
        if (want_g) {
          slots_.acc(pch(t, s), m * dc, g);
          slots_.acc(pdc(t, s), m * ch, g);
        }
        ++k;
      }

  // carbon caps
  if (cfg_.carbon) {
    for (int t = 0; t < T_; ++t)
      for (int i = 0; i < nb_; ++i)
        if (nci_finite_[t * nb_ + i]) {
          const double m = want_g ? v[k] : 0.0;
          const int a = s_anci_[t * nb_ + i];
          double cv = val(wn(t, i)) - p_.policy.nci_cap[t][i];
          if (want_g) slots_.acc(wn(t, i), m, g);
          if (a >= 0) {
            cv -= val(a);
            if (want_g) slots_.acc(a, -m, g);
          }
          if (want_c) c[k] = cv;
          ++k;
        }
    for (int l = 0; l < nl_; ++l)
      if (user_finite_[l]) {
        const double m = want_g ? v[k] : 0.0;
        const double cap = p_.policy.user_cap_ton[l];
        const double scale = 1.0 / std::max(1.0, cap);
        double cv = -cap;
        for (int t = 0; t < T_; ++t) {
          cv += dt_ * val(wn(t, lbus_[l])) * net.loads[l].p_mw[t];
          if (want_g) slots_.acc(wn(t, lbus_[l]), m * scale * dt_ * net.loads[l].p_mw[t], g);
        }
        if (s_auser_[l] >= 0) {
          cv -= val(s_auser_[l]);
          if (want_g) slots_.acc(s_auser_[l], -m * scale, g);
        }
        if (want_c) c[k] = cv * scale;
        ++k;
      }
    for (int i = 0; i < nb_; ++i)
      if (node_finite_[i]) {
        const double m = want_g ? v[k] : 0.0;
        const double cap = p_.policy.node_cap_ton[i];
        const double scale = 1.0 / std::max(1.0, cap);
        double cv = -cap;
        for (int t = 0; t < T_; ++t) {
          double pl = 0.0;
          for (int l = 0; l < nl_; ++l)
            if (lbus_[l] == i) pl += net.loads[l].p_mw[t];
          cv += dt_ * val(wn(t, i)) * pl;
          if (want_g) slots_.acc(wn(t, i), m * scale * dt_ * pl, g);
        }
        if (s_anode_[i] >= 0) {
          cv -= val(s_anode_[i]);
          if (want_g) slots_.acc(s_anode_[i], -m * scale, g);
        }
        if (want_c) c[k] = cv * scale;
        ++k;
      }
  }
  assert(k == nineq_);
}

void DispatchNlp::eq(std::span<const double> x, std::span<double> c) const {
  walk_eq(x, c, {}, {});
}
void DispatchNlp::ineq(std::span<const double> x, std::span<double> c) const {
  walk_ineq(x, c, {}, {});
}
void DispatchNlp::eq_jtv(std::span<const double> x, std::span<const double> v,
                         std::span<double> out) const {
  walk_eq(x, {}, v, out);
}
void DispatchNlp::ineq_jtv(std::span<const double> x, std::span<const double> v,
                           std::span<double> out) const {
  walk_ineq(x, {}, v, out);
}

void DispatchNlp::outer_update(int outer) {
  if (!has_products_) return;
  eps_ = std::max(cfg_.eps_final, cfg_.eps_init * std::pow(0.25, outer));
}

bool DispatchNlp::homotopy_done() const {
  return !has_products_ || eps_ <= cfg_.eps_final * 1.0000001;
}

std::vector<double> DispatchNlp::make_x0(const WarmStart& ws) const {
  const Network& net = p_.network;
  std::vector<double> x(nfree_, 0.0);
  auto put = [&](int slot, double value) {
    if (slots_.xidx[slot] >= 0) x[slots_.xidx[slot]] = value;
  };
  const double sigma = 1e-4;  // interior margin for relaxed dual pairs

  for (int t = 0; t < T_; ++t) {
    for (int gi = 0; gi < ng_; ++gi) {
      put(pg(t, gi), ws.gen_p_mw.empty() ? 0.0 : ws.gen_p_mw[t][gi] / base_);
      if (ac_) put(qg(t, gi), ws.gen_q_mvar.empty() ? 0.0 : ws.gen_q_mvar[t][gi] / base_);
    }
    for (int i = 0; i < nb_; ++i) {
      put(th(t, i), ws.theta.empty() ? 0.0 : ws.theta[t][i]);
      if (ac_) put(vv(t, i), ws.v.empty() ? net.buses[i].v_setpoint_pu : ws.v[t][i]);
    }
    for (int e = 0; e < ne_; ++e) {
      const double f = ws.flow_from_mw.empty() ? 0.0 : ws.flow_from_mw[t][e] / base_;
      const double ft = ws.flow_to_mw.empty() ? f : ws.flow_to_mw[t][e] / base_;
      switch (cfg_.flow) {
        case FlowMode::Signed:
          put(ffi(t, e), f);
          if (ac_) put(ffj(t, e), ft);
          break;
        case FlowMode::DualRelaxed:
          put(ffi(t, e), std::max(f, 0.0) + sigma);
          put(fri(t, e), std::max(-f, 0.0) + sigma);
          if (ac_) {
            put(ffj(t, e), std::max(ft, 0.0) + sigma);
            put(frj(t, e), std::max(-ft, 0.0) + sigma);
          }
          break;
        case FlowMode::DualFixed:
          put(ffi(t, e), std::max(f, 0.0));
          put(fri(t, e), std::max(-f, 0.0));
          if (ac_) {
            put(ffj(t, e), std::max(ft, 0.0));
            put(frj(t, e), std::max(-ft, 0.0));
          }
          break;
      }
    }
    for (int s = 0; s < ns_; ++s) {
      put(pch(t, s), ws.pch_mw.empty() ? 0.0 : ws.pch_mw[t][s] / base_);
      put(pdc(t, s), ws.pdc_mw.empty() ? 0.0 : ws.pdc_mw[t][s] / base_);
    }
    if (cfg_.carbon) {
      const double w_dflt = 0.3 * net.max_emission_factor();
      for (int i = 0; i < nb_; ++i)
        put(wn(t, i), ws.w.empty() ? w_dflt : ws.w[t][i]);
      if (p_.policy.soft)
        for (int i = 0; i < nb_; ++i) {
          const int a = s_anci_[t * nb_ + i];
          if (a < 0) continue;
          const double wv = ws.w.empty() ? 0.0 : ws.w[t][i];
          put(a, std::max(0.0, wv - p_.policy.nci_cap[t][i]) + 1e-4);
        }
    }
  }
  for (int s = 0; s < ns_; ++s)
    for (int kk = 1; kk <= T_; ++kk) {
      put(es(kk, s),
          ws.e_mwh.empty() ? net.storage[s].e_init_mwh / base_ : ws.e_mwh[kk][s] / base_);
      if (track_wes_)
        put(wes(kk, s), ws.w_es.empty() ? net.storage[s].w_es_init : ws.w_es[kk][s]);
    }
  for (int l = 0; l < nl_; ++l)
    if (s_auser_[l] >= 0) put(s_auser_[l], 1e-3);
  for (int i = 0; i < nb_; ++i)
    if (s_anode_[i] >= 0) put(s_anode_[i], 1e-3);
  return x;
}

DispatchSolution DispatchNlp::extract(std::span<const double> x) const {
  const Network& net = p_.network;
  DispatchSolution sol;
  sol.pf.resize(T_, nb_, ne_, ng_, ns_);
  sol.hat.at_from.assign(T_, std::vector<pf::DualFlowPair>(ne_));
  sol.hat.at_to.assign(T_, std::vector<pf::DualFlowPair>(ne_));
  auto val = [&](int slot) { return slots_.value(slot, x); };

  for (int t = 0; t < T_; ++t) {
    for (int i = 0; i < nb_; ++i) {
      sol.pf.theta_rad[t][i] = val(th(t, i));
      sol.pf.v_pu[t][i] = ac_ ? val(vv(t, i)) : 1.0;
    }
    for (int gi = 0; gi < ng_; ++gi) {
      sol.pf.gen_p_mw[t][gi] = val(pg(t, gi)) * base_;
      if (ac_) sol.pf.gen_q_mvar[t][gi] = val(qg(t, gi)) * base_;
    }
    for (int e = 0; e < ne_; ++e) {
      const double f = flow_from(x, t, e) * base_;
      const double ft = flow_to(x, t, e) * base_;
      sol.pf.p_from_mw[t][e] = f;
      sol.pf.p_to_mw[t][e] = ft;
      sol.pf.p_loss_mw[t][e] = f - ft;
      if (ac_) {
        const int a = abus_[e], b = bbus_[e];
        const auto& br = net.branches[e];
        const double va = val(vv(t, a)), vb = val(vv(t, b));
        const double dth = val(th(t, a)) - val(th(t, b));
        const double cs = std::cos(dth), sn = std::sin(dth);
        sol.pf.q_from_mvar[t][e] =
            (br.b_pu * (va * vb * cs - va * va) - br.g_pu * va * vb * sn) * base_;
        sol.pf.q_to_mvar[t][e] =
            (-br.b_pu * (va * vb * cs - vb * vb) - br.g_pu * va * vb * sn) * base_;
      }
      if (cfg_.flow == FlowMode::Signed) {
        sol.hat.at_from[t][e] = {std::max(f, 0.0), std::max(-f, 0.0)};
        sol.hat.at_to[t][e] = {std::max(ft, 0.0), std::max(-ft, 0.0)};
      } else {
        sol.hat.at_from[t][e] = {val(ffi(t, e)) * base_, val(fri(t, e)) * base_};
        if (ac_)
          sol.hat.at_to[t][e] = {val(ffj(t, e)) * base_, val(frj(t, e)) * base_};
        else
          sol.hat.at_to[t][e] = sol.hat.at_from[t][e];
      }
    }
    for (int s = 0; s < ns_; ++s) {
      sol.pf.storage_ch_mw[t][s] = val(pch(t, s)) * base_;
      sol.pf.storage_dc_mw[t][s] = val(pdc(t, s)) * base_;
    }
  }
  if (cfg_.carbon) {
    sol.w.assign(T_, std::vector<double>(nb_, 0.0));
    for (int t = 0; t < T_; ++t)
      for (int i = 0; i < nb_; ++i) sol.w[t][i] = val(wn(t, i));
    if (p_.policy.soft) {
      sol.nci_slack.assign(T_, std::vector<double>(nb_, 0.0));
      for (int t = 0; t < T_; ++t)
        for (int i = 0; i < nb_; ++i)
          if (s_anci_[t * nb_ + i] >= 0) sol.nci_slack[t][i] = val(s_anci_[t * nb_ + i]);
    }
  }
  sol.e_mwh.assign(T_ + 1, std::vector<double>(ns_, 0.0));
  for (int kk = 0; kk <= T_; ++kk)
    for (int s = 0; s < ns_; ++s) sol.e_mwh[kk][s] = val(es(kk, s)) * base_;
  if (track_wes_) {
    sol.w_es.assign(T_ + 1, std::vector<double>(ns_, 0.0));
    for (int kk = 0; kk <= T_; ++kk)
      for (int s = 0; s < ns_; ++s) sol.w_es[kk][s] = val(wes(kk, s));
  }
  sol.objective = objective_raw(x);
  return sol;
}

std::pair<double, double> DispatchNlp::complementarity(std::span<const double> x) const {
  double prod = 0.0, minc = 0.0;
  auto look = [&](int sf, int sr) {
    const double f = slots_.value(sf, x) * base_;
    const double r = slots_.value(sr, x) * base_;
    prod = std::max(prod, f * r);
    minc = std::max(minc, std::min(std::abs(f), std::abs(r)));
  };
  for (int t = 0; t < T_; ++t) {
    if (cfg_.flow != FlowMode::Signed)
      for (int e = 0; e < ne_; ++e) {
        look(ffi(t, e), fri(t, e));
        if (ac_) look(ffj(t, e), frj(t, e));
      }
    for (int s = 0; s < ns_; ++s) look(pch(t, s), pdc(t, s));
  }
  return {prod, minc};
}

}  // namespace copf::dispatch::detail
