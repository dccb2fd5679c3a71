#include "copf/validation.hpp"

#include <set>
#include <string>

namespace copf {

namespace {

void add(ValidationReport& r, std::string code, std::string message, std::string where) {
  r.violations.push_back({std::move(code), std::move(message), std::move(where)});
}

bool check_series(ValidationReport& r, const std::vector<double>& v, int T,
                  const std::string& name, const std::string& where) {
  if (static_cast<int>(v.size()) != T) {
    add(r, "series_length", name + " must have one entry per period", where);
    return false;
  }
  return true;
}

}  // namespace

ValidationReport validate(const Network& net, const TimeGrid& grid) {
  ValidationReport r;
  const int T = grid.periods;

  if (T < 1) add(r, "bad_time_grid", "number of periods must be >= 1", "time_grid");
  if (!(grid.delta_hours > 0)) add(r, "bad_time_grid", "delta_t must be positive", "time_grid");

  if (net.buses.empty()) {
    add(r, "empty_network", "network has no buses", "network");
    return r;
  }
  if (!(net.base_mva > 0)) add(r, "bad_base", "baseMVA must be positive", "network");

  std::set<int> ids;
  int slack_count = 0;
  for (const auto& bus : net.buses) {
    const std::string where = "bus " + std::to_string(bus.id);
    if (!ids.insert(bus.id).second) add(r, "duplicate_bus_id", "bus identifier reused", where);
    if (bus.slack) ++slack_count;
    if (!(bus.v_min_pu > 0)) add(r, "bad_voltage_limits", "V_min must be positive", where);
    if (!(bus.v_min_pu <= bus.v_max_pu))
      add(r, "bad_voltage_limits", "V_min must not exceed V_max", where);
    if (!(bus.theta_min_rad <= bus.theta_max_rad))
      add(r, "bad_angle_limits", "theta_min must not exceed theta_max", where);
  }
  if (slack_count != 1)
    add(r, "slack_count", "exactly one bus must be marked slack, found " +
                              std::to_string(slack_count), "network");

  for (size_t i = 0; i < net.branches.size(); ++i) {
    const auto& br = net.branches[i];
    const std::string where = "branch " + std::to_string(i);
    if (net.bus_index(br.from) < 0 || net.bus_index(br.to) < 0)
      add(r, "dangling_branch", "dangling branch endpoint", where);
    if (br.from == br.to) add(r, "self_loop", "branch connects a bus to itself", where);
    if (!(br.s_max_pu > 0)) add(r, "bad_capacity", "s_max must be positive", where);
    if (br.g_pu == 0.0 && br.b_pu == 0.0)
      add(r, "zero_admittance", "(g, b) must not both be zero", where);
  }

  for (size_t gi = 0; gi < net.generators.size(); ++gi) {
    const auto& g = net.generators[gi];
    const std::string where = "generator " + std::to_string(gi);
    if (net.bus_index(g.bus) < 0) add(r, "dangling_generator", "generator references unknown bus", where);
    const bool lengths_ok = check_series(r, g.p_min_mw, T, "p_min", where) &&
                            check_series(r, g.p_max_mw, T, "p_max", where) &&
                            check_series(r, g.q_min_mvar, T, "q_min", where) &&
                            check_series(r, g.q_max_mvar, T, "q_max", where);
    if (lengths_ok) {
      for (int t = 0; t < T; ++t) {
        if (g.p_min_mw[t] > g.p_max_mw[t])
          add(r, "bad_p_limits", "P_min exceeds P_max in period " + std::to_string(t), where);
        if (g.q_min_mvar[t] > g.q_max_mvar[t])
          add(r, "bad_q_limits", "Q_min exceeds Q_max in period " + std::to_string(t), where);
      }
    }
    if (!(g.ramp_down_mw <= 0.0 && 0.0 <= g.ramp_up_mw))
      add(r, "bad_ramp", "ramp limits must satisfy down <= 0 <= up", where);
    if (g.cost_c2 < 0) add(r, "bad_cost", "quadratic cost coefficient must be nonnegative", where);
    if (g.emission_factor < 0)
      add(r, "bad_emission_factor", "emission factor must be nonnegative", where);
  }

  for (size_t li = 0; li < net.loads.size(); ++li) {
    const auto& l = net.loads[li];
    const std::string where = "load " + std::to_string(li);
    if (net.bus_index(l.bus) < 0) add(r, "dangling_load", "load references unknown bus", where);
    if (check_series(r, l.p_mw, T, "p", where)) {
      for (int t = 0; t < T; ++t)
        if (l.p_mw[t] < 0)
          add(r, "negative_load", "active load must be nonnegative in period " + std::to_string(t), where);
    }
    check_series(r, l.q_mvar, T, "q", where);
  }

  std::set<int> storage_buses;
  for (size_t si = 0; si < net.storage.size(); ++si) {
    const auto& s = net.storage[si];
    const std::string where = "storage " + std::to_string(si);
    if (net.bus_index(s.bus) < 0) add(r, "dangling_storage", "storage references unknown bus", where);
    if (!storage_buses.insert(s.bus).second)
      add(r, "storage_per_bus", "at most one storage unit per bus", where);
    if (!(s.e_min_mwh > 0))
      add(r, "storage_e_min",
          "e_min must be positive to keep internal carbon intensity well-defined", where);
    if (!(s.e_min_mwh <= s.e_init_mwh && s.e_init_mwh <= s.e_max_mwh))
      add(r, "storage_energy_bounds", "need e_min <= e_init <= e_max", where);
    if (!(s.eta_ch > 0 && s.eta_ch <= 1)) add(r, "storage_eta", "eta_ch must be in (0, 1]", where);
    if (!(s.eta_dc > 0 && s.eta_dc <= 1)) add(r, "storage_eta", "eta_dc must be in (0, 1]", where);
    if (!(s.kappa > 0 && s.kappa <= 1)) add(r, "storage_kappa", "kappa must be in (0, 1]", where);
    if (s.p_ch_max_mw < 0 || s.p_dc_max_mw < 0)
      add(r, "storage_power", "charge/discharge capacities must be nonnegative", where);
    if (s.w_es_init < 0) add(r, "storage_w_init", "initial intensity must be nonnegative", where);
  }

  if (!net.buses.empty() && !net.connected())
    add(r, "disconnected", "network graph is not connected", "network");

  return r;
}

}  // namespace copf
