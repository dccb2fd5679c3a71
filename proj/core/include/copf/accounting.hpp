#pragma once

#include <span>
#include <string>
#include <vector>

#include "copf/carbon_flow.hpp"
#include "copf/model.hpp"
#include "copf/power_flow.hpp"
#include "copf/storage_carbon.hpp"

namespace copf::accounting {

/// Scope-1/Scope-2 rates for one period (ton/h).
struct PeriodLedger {
  double scope1_gen = 0.0;
  double scope2_load = 0.0;
  double scope2_loss = 0.0;
  double scope2_es = 0.0;  // net rate per the active storage model
  std::vector<double> gen_rate;   // per generator
  std::vector<double> load_rate;  // per load
  std::vector<double> es_rate;    // per storage unit
};

/// Per-period ledgers plus horizon totals (ton).
struct EmissionLedger {
  EsModelKind kind = EsModelKind::WaterTank;
  TimeGrid grid;
  std::vector<PeriodLedger> periods;
  std::vector<double> gen_total;   // per generator
  std::vector<double> load_total;  // per load
  std::vector<double> es_total;    // per storage unit
  double loss_total = 0.0;
  double scope1_total = 0.0;
  double scope2_load_total = 0.0;
  double scope2_es_total = 0.0;
};

struct AuditReport {
  bool pass = false;
  std::vector<double> period_residual_rel;  // per period, relative residual
  double horizon_residual_rel = 0.0;
  std::string identity;  // which balance identity was audited
};

/// Per-storage-unit view of one period used by the ledger.
struct EsPeriodState {
  double p_ch_mw = 0.0;
  double p_dc_mw = 0.0;
  double w_node = 0.0;  // nodal intensity at the unit's bus
  double w_es = 0.0;    // internal intensity at the start of the period
};

/// Scope attribution for one solved period.
PeriodLedger attribute_period(const carbon::Solution& cf, std::span<const EsPeriodState> es,
                              EsModelKind kind);

/// Horizon totals: every entry is sum_t delta_t * rate_t.
EmissionLedger aggregate_horizon(std::span<const PeriodLedger> ledgers, const TimeGrid& grid,
                                 EsModelKind kind);

/// Audits the carbon conservation identity each period:
///   water tank:        scope1 = load + loss + (w P_ch - w_es P_dc)
///   load/clean gen:    scope1 = load + loss +  w P_ch     (re-derived identity)
/// Relative residuals use max(1 ton/h, scope1) as denominator.
AuditReport audit_conservation(const EmissionLedger& ledger, EsModelKind kind);

/// Full carbon accounting pipeline over a solved power flow horizon: carbon
/// flow solve per period, storage carbon state stepping, scope attribution.
struct HorizonResult {
  std::vector<carbon::Solution> carbon;           // per period
  std::vector<std::vector<StorageCarbonState>> es_states;  // [t][unit], t = 0..T
  EmissionLedger ledger;
};

HorizonResult simulate_horizon(const Network& net, const TimeGrid& grid,
                               const pf::PowerFlowSolution& pf, EsModelKind kind);

}  // namespace copf::accounting
