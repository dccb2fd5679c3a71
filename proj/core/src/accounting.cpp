#include "copf/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "copf/errors.hpp"

namespace copf::accounting {

PeriodLedger attribute_period(const carbon::Solution& cf, std::span<const EsPeriodState> es,
                              EsModelKind kind) {
  PeriodLedger out;
  out.gen_rate = cf.r_gen;
  out.load_rate = cf.r_load;
  out.scope1_gen = std::accumulate(cf.r_gen.begin(), cf.r_gen.end(), 0.0);
  out.scope2_load = std::accumulate(cf.r_load.begin(), cf.r_load.end(), 0.0);
  out.scope2_loss = std::accumulate(cf.r_loss.begin(), cf.r_loss.end(), 0.0);

  out.es_rate.assign(es.size(), 0.0);
  for (size_t s = 0; s < es.size(); ++s) {
    const double charge_side = es[s].w_node * es[s].p_ch_mw;
    const double discharge_side =
        kind == EsModelKind::WaterTank ? es[s].w_es * es[s].p_dc_mw : 0.0;
    out.es_rate[s] = charge_side - discharge_side;
    out.scope2_es += out.es_rate[s];
  }
  return out;
}

EmissionLedger aggregate_horizon(std::span<const PeriodLedger> ledgers, const TimeGrid& grid,
                                 EsModelKind kind) {
  EmissionLedger out;
  out.kind = kind;
  out.grid = grid;
  out.periods.assign(ledgers.begin(), ledgers.end());
  if (ledgers.empty()) return out;

  const double dt = grid.delta_hours;
  out.gen_total.assign(ledgers.front().gen_rate.size(), 0.0);
  out.load_total.assign(ledgers.front().load_rate.size(), 0.0);
  out.es_total.assign(ledgers.front().es_rate.size(), 0.0);
  for (const auto& p : ledgers) {
    for (size_t g = 0; g < p.gen_rate.size(); ++g) out.gen_total[g] += dt * p.gen_rate[g];
    for (size_t l = 0; l < p.load_rate.size(); ++l) out.load_total[l] += dt * p.load_rate[l];
    for (size_t s = 0; s < p.es_rate.size(); ++s) out.es_total[s] += dt * p.es_rate[s];
    out.loss_total += dt * p.scope2_loss;
    out.scope1_total += dt * p.scope1_gen;
    out.scope2_load_total += dt * p.scope2_load;
    out.scope2_es_total += dt * p.scope2_es;
  }
  return out;
}

AuditReport audit_conservation(const EmissionLedger& ledger, EsModelKind kind) {
  AuditReport r;
  r.identity = kind == EsModelKind::WaterTank
                   ? "scope1 = load + loss + (w*P_ch - w_es*P_dc)"
                   : "scope1 = load + loss + w*P_ch (discharge enters carbon-free)";
  r.period_residual_rel.reserve(ledger.periods.size());
  bool ok = true;
  for (const auto& p : ledger.periods) {
    const double attributed = p.scope2_load + p.scope2_loss + p.scope2_es;
    const double denom = std::max(1.0, std::abs(p.scope1_gen));
    const double rel = std::abs(p.scope1_gen - attributed) / denom;
    r.period_residual_rel.push_back(rel);
    ok = ok && rel <= 1e-8;
  }
  const double total_attr =
      ledger.scope2_load_total + ledger.loss_total + ledger.scope2_es_total;
  r.horizon_residual_rel = std::abs(ledger.scope1_total - total_attr) /
                           std::max(1.0, std::abs(ledger.scope1_total));
  ok = ok && r.horizon_residual_rel <= 1e-8;
  r.pass = ok;
  return r;
}

HorizonResult simulate_horizon(const Network& net, const TimeGrid& grid,
                               const pf::PowerFlowSolution& pf, EsModelKind kind) {
  const int T = grid.periods;
  const size_t ns = net.storage.size();
  HorizonResult out;
  out.carbon.reserve(T);
  out.es_states.assign(T + 1, {});

  std::vector<StorageCarbonState> state(ns);
  for (size_t s = 0; s < ns; ++s) state[s] = storage::initial_state(net.storage[s]);
  out.es_states[0] = state;

  std::vector<PeriodLedger> ledgers;
  ledgers.reserve(T);

  for (int t = 0; t < T; ++t) {
    std::vector<double> w_es(ns, 0.0);
    for (size_t s = 0; s < ns; ++s) w_es[s] = state[s].w_es;

    const carbon::Matrices m = carbon::build_matrices(net, pf, t, kind, w_es);
    const carbon::FeasibilityVerdict verdict = carbon::check_feasibility(m);
    if (!verdict.feasible)
      throw Infeasible("carbon flow infeasible in period " + std::to_string(t),
                       "carbon_flow_infeasible");
    const std::vector<double> w = carbon::solve(m, verdict);
    carbon::Solution cf = carbon::attribute(m, w, net, pf, t);

    std::vector<EsPeriodState> es(ns);
    for (size_t s = 0; s < ns; ++s) {
      const int b = net.bus_index(net.storage[s].bus);
      es[s].p_ch_mw = pf.storage_ch_mw.empty() ? 0.0 : pf.storage_ch_mw[t][s];
      es[s].p_dc_mw = pf.storage_dc_mw.empty() ? 0.0 : pf.storage_dc_mw[t][s];
      es[s].w_node = w[b];
      es[s].w_es = state[s].w_es;
    }
    ledgers.push_back(attribute_period(cf, es, kind));
    out.carbon.push_back(std::move(cf));

    // The internal state always follows the water-tank dynamics; the model
    // kind only changes how discharge enters the flow and the ledger.
    for (size_t s = 0; s < ns; ++s)
      state[s] = storage::step_carbon_water_tank(state[s], es[s].p_ch_mw, es[s].p_dc_mw,
                                                 es[s].w_node, net.storage[s],
                                                 grid.delta_hours);
    out.es_states[t + 1] = state;
  }

  out.ledger = aggregate_horizon(ledgers, grid, kind);
  return out;
}

}  // namespace copf::accounting
