#include "copf/storage_carbon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "copf/errors.hpp"

namespace copf::storage {

namespace {
constexpr double kSimultaneousTolMw = 1e-6;
}

void sanitize_powers(double& p_ch_mw, double& p_dc_mw) {
  if (std::min(p_ch_mw, p_dc_mw) > kSimultaneousTolMw)
    throw SimultaneousChargeDischarge("storage charges and discharges simultaneously (" +
                                      std::to_string(p_ch_mw) + " MW / " +
                                      std::to_string(p_dc_mw) + " MW)");
  if (p_ch_mw < p_dc_mw)
    p_ch_mw = 0.0;
  else
    p_dc_mw = 0.0;
}

double step_energy(const StorageCarbonState& state, double p_ch_mw, double p_dc_mw,
                   const StorageUnit& unit, double delta_hours) {
  if (p_ch_mw < -kSimultaneousTolMw || p_dc_mw < -kSimultaneousTolMw ||
      p_ch_mw > unit.p_ch_max_mw + kSimultaneousTolMw ||
      p_dc_mw > unit.p_dc_max_mw + kSimultaneousTolMw)
    throw Error("storage power setpoint outside its capacity range");
  // clamp solver noise at the box edges
  p_ch_mw = std::clamp(p_ch_mw, 0.0, unit.p_ch_max_mw);
  p_dc_mw = std::clamp(p_dc_mw, 0.0, unit.p_dc_max_mw);
  if (p_ch_mw > 0 && p_dc_mw > 0) sanitize_powers(p_ch_mw, p_dc_mw);

  const double e_next = unit.kappa * state.e_mwh +
                        delta_hours * (unit.eta_ch * p_ch_mw - p_dc_mw / unit.eta_dc);
  const double slack = 1e-9 * std::max(1.0, unit.e_max_mwh);
  if (e_next < unit.e_min_mwh - slack || e_next > unit.e_max_mwh + slack)
    throw EnergyBoundViolation("stored energy " + std::to_string(e_next) +
                               " MWh leaves [" + std::to_string(unit.e_min_mwh) + ", " +
                               std::to_string(unit.e_max_mwh) + "]");
  return e_next;
}

StorageCarbonState step_carbon_water_tank(const StorageCarbonState& state, double p_ch_mw,
                                          double p_dc_mw, double w_node,
                                          const StorageUnit& unit, double delta_hours) {
  if (w_node < 0) throw Error("nodal intensity must be nonnegative");
  if (p_ch_mw > 0 && p_dc_mw > 0) sanitize_powers(p_ch_mw, p_dc_mw);
  const double e_next = step_energy(state, p_ch_mw, p_dc_mw, unit, delta_hours);

  // Virtual emission balance.
  const double e_virtual_next =
      unit.kappa * state.e_virtual +
      delta_hours * (w_node * unit.eta_ch * p_ch_mw - state.w_es * p_dc_mw / unit.eta_dc);

  // Equivalent intensity form; the discharge term is dropped from lambda by
  // construction (it is zero whenever the weight differs from one).
  const double mixed = unit.kappa * state.e_mwh + delta_hours * unit.eta_ch * p_ch_mw;
  const double lambda = unit.kappa * state.e_mwh / mixed;
  const double w_next = lambda * state.w_es + (1.0 - lambda) * w_node;

  const double w_from_balance = e_virtual_next / e_next;
  if (std::abs(w_from_balance - w_next) > 1e-9 * std::max(1.0, std::abs(w_next)))
    throw Error("water-tank carbon dynamics inconsistency: " +
                std::to_string(w_from_balance) + " vs " + std::to_string(w_next));

  StorageCarbonState next;
  next.e_mwh = e_next;
  next.e_virtual = e_virtual_next;
  next.w_es = w_from_balance;
  next.lambda = lambda;
  return next;
}

double discharge_intensity(const StorageCarbonState& state, EsModelKind kind) {
  return kind == EsModelKind::WaterTank ? state.w_es : 0.0;
}

double account_owner(std::span<const TrajectoryStep> trajectory, EsModelKind kind,
                     double delta_hours) {
  double total = 0.0;
  for (const auto& step : trajectory) {
    total += delta_hours * step.w_node * step.p_ch_mw;
    if (kind == EsModelKind::WaterTank) total -= delta_hours * step.w_es * step.p_dc_mw;
  }
  return total;
}

StorageCarbonState initial_state(const StorageUnit& unit) {
  StorageCarbonState s;
  s.e_mwh = unit.e_init_mwh;
  s.w_es = unit.w_es_init;
  s.e_virtual = unit.w_es_init * unit.e_init_mwh;
  s.lambda = 1.0;
  return s;
}

}  // namespace copf::storage
