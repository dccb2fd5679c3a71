#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "copf/units.hpp"

namespace copf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Discretization of the scheduling horizon.
struct TimeGrid {
  int periods = 1;            // T
  double delta_hours = 1.0;   // interval length in hours
};

struct Bus {
  int id = 0;
  bool slack = false;
  double v_min_pu = 0.9;
  double v_max_pu = 1.1;
  double theta_min_rad = -1.0;
  double theta_max_rad = 1.0;
  double v_setpoint_pu = 1.0;  // target magnitude when the bus hosts generation
};

/// Series admittance convention: g >= 0, b < 0 for an inductive line, exactly
/// as the branch terms enter the AC flow equations. The DC flow of a branch is
/// p = -b * (theta_from - theta_to).
struct Branch {
  int from = 0;
  int to = 0;
  double g_pu = 0.0;
  double b_pu = 0.0;
  double s_max_pu = kInf;  // apparent power capacity
};

struct Generator {
  int bus = 0;
  int index = 0;  // position among the generators of this bus
  std::vector<double> p_min_mw, p_max_mw;      // per period
  std::vector<double> q_min_mvar, q_max_mvar;  // per period
  double ramp_down_mw = -kInf;  // <= 0, per step
  double ramp_up_mw = kInf;     // >= 0, per step
  double cost_c2 = 0.0;         // $/MW^2
  double cost_c1 = 0.0;         // $/MW
  double cost_c0 = 0.0;         // $
  double emission_factor = 0.0; // ton/MWh
  std::string fuel;             // label only (coal, gas, wind, ...)
};

struct Load {
  int bus = 0;
  int index = 0;
  std::vector<double> p_mw;    // per period, >= 0
  std::vector<double> q_mvar;  // per period
};

struct StorageUnit {
  int bus = 0;
  double p_ch_max_mw = 0.0;
  double p_dc_max_mw = 0.0;
  double eta_ch = 1.0;   // (0, 1]
  double eta_dc = 1.0;   // (0, 1]
  double kappa = 1.0;    // (0, 1], stored-energy retention per step
  double e_min_mwh = 0.0;  // must stay positive so E/e is well-defined
  double e_max_mwh = 0.0;
  double e_init_mwh = 0.0;
  double degradation_cost = 0.0;  // $/MW on |charge| + |discharge|
  double w_es_init = 0.0;         // ton/MWh, initial internal intensity
};

/// Immutable grid description. Devices are stored flat and refer to buses by id;
/// all per-period sequences have the same length T as the TimeGrid they were
/// validated against.
struct Network {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<StorageUnit> storage;
  double base_mva = 100.0;
  EmissionUnit emission_unit = EmissionUnit::TonPerMwh;  // unit used at I/O

  /// Index of the bus with the given id, or -1.
  int bus_index(int id) const;
  /// Index of the slack bus, or -1 if none is marked.
  int slack_index() const;
  /// Indices into generators / loads / storage for one bus.
  std::vector<int> generators_at(int bus_idx) const;
  std::vector<int> loads_at(int bus_idx) const;
  int storage_at(int bus_idx) const;  // -1 if none

  /// Largest generation emission factor (ton/MWh).
  double max_emission_factor() const;
  /// True if all branches reachable from bus 0 cover the whole bus set.
  bool connected() const;
};

/// Broadcast a scalar limit to a dense per-period sequence.
std::vector<double> broadcast(double value, int periods);

}  // namespace copf
