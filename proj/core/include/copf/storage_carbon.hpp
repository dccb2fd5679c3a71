#pragma once

#include <span>
#include <vector>

#include "copf/model.hpp"

namespace copf {

/// Carbon footprint model used for energy storage.
///  - WaterTank: tracks virtually stored emissions; discharge carries the
///    internal intensity and leakage follows energy loss.
///  - LoadCleanGen: charging is a load, discharging a carbon-free generator.
enum class EsModelKind { WaterTank, LoadCleanGen };

struct StorageCarbonState {
  double e_mwh = 0.0;       // stored energy
  double e_virtual = 0.0;   // virtually stored emissions, ton
  double w_es = 0.0;        // internal intensity E/e, ton/MWh
  double lambda = 1.0;      // mixing weight of the last step
};

struct TrajectoryStep {
  double p_ch_mw = 0.0;
  double p_dc_mw = 0.0;
  double w_node = 0.0;  // nodal intensity while the step ran, ton/MWh
  double w_es = 0.0;    // internal intensity at the start of the step
};

namespace storage {

/// Sanitize a charge/discharge pair against solver noise: zero the smaller
/// when both are marginally positive; reject genuinely simultaneous use.
/// Throws SimultaneousChargeDischarge when min(p_ch, p_dc) > 1e-6 MW.
void sanitize_powers(double& p_ch_mw, double& p_dc_mw);

/// One step of the storage energy dynamics:
/// e' = kappa e + delta (eta_ch P_ch - P_dc / eta_dc).
/// Throws EnergyBoundViolation when e' leaves [e_min, e_max].
double step_energy(const StorageCarbonState& state, double p_ch_mw, double p_dc_mw,
                   const StorageUnit& unit, double delta_hours);

/// One step of the water-tank carbon dynamics. Both equivalent forms (virtual
/// emission balance and the convex-combination intensity update) are evaluated
/// and must agree to 1e-9.
StorageCarbonState step_carbon_water_tank(const StorageCarbonState& state, double p_ch_mw,
                                          double p_dc_mw, double w_node,
                                          const StorageUnit& unit, double delta_hours);

/// Intensity at which discharged power enters the grid carbon flow.
double discharge_intensity(const StorageCarbonState& state, EsModelKind kind);

/// Owner-attributed emissions (ton) over a trajectory:
///   WaterTank:    sum delta (w_node P_ch - w_es P_dc)
///   LoadCleanGen: sum delta  w_node P_ch
double account_owner(std::span<const TrajectoryStep> trajectory, EsModelKind kind,
                     double delta_hours);

/// Initial state of a unit.
StorageCarbonState initial_state(const StorageUnit& unit);

}  // namespace storage
}  // namespace copf
