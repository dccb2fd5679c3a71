#pragma once

#include <span>
#include <vector>

#include "copf/model.hpp"

namespace copf::pf {

/// Signed flow convention: all branch quantities are measured positive in the
/// from->to orientation. p_from is the sending-end flow P^i_ij, p_to the
/// receiving-end flow P^j_ij; their difference is the branch loss, which is
/// nonnegative for g >= 0 regardless of the actual flow direction.
struct PowerFlowSolution {
  int periods = 0;
  // [t][bus]
  std::vector<std::vector<double>> v_pu, theta_rad;
  // [t][branch]
  std::vector<std::vector<double>> p_from_mw, p_to_mw;
  std::vector<std::vector<double>> q_from_mvar, q_to_mvar;
  std::vector<std::vector<double>> p_loss_mw;
  // [t][generator]
  std::vector<std::vector<double>> gen_p_mw, gen_q_mvar;
  // [t][storage]
  std::vector<std::vector<double>> storage_ch_mw, storage_dc_mw;

  void resize(int T, size_t buses, size_t branches, size_t gens, size_t storage);
};

/// Nonnegative decomposition of one signed flow: signed = fwd - rev and at
/// most one of the pair is nonzero.
struct DualFlowPair {
  double fwd_mw = 0.0;  // from->to component
  double rev_mw = 0.0;  // to->from component
};

struct DualFlows {
  // [t][branch]
  std::vector<std::vector<DualFlowPair>> at_from;  // measured at the from end
  std::vector<std::vector<DualFlowPair>> at_to;    // measured at the to end
};

/// Generator / storage setpoints driving a power flow evaluation.
struct Dispatch {
  std::vector<std::vector<double>> gen_p_mw;      // [t][generator]
  std::vector<std::vector<double>> storage_ch_mw; // [t][storage], may be empty
  std::vector<std::vector<double>> storage_dc_mw; // [t][storage], may be empty
};

struct AcOptions {
  double tol_pu = 1e-8;   // mismatch infinity-norm target
  int max_iterations = 50;
  bool flat_start = true;
};

/// Lossless DC power flow for one period. Injections are per-bus net active
/// power (MW) and must sum to zero; the slack bus carries the angle reference.
/// Returns a single-period solution with p_from == p_to and zero losses.
/// Throws SingularSystem when the network is disconnected.
PowerFlowSolution solve_dc(const Network& net, std::span<const double> injection_mw);

/// DC power flow over the whole horizon from explicit setpoints. The slack
/// generator setpoint is adjusted so injections balance exactly each period.
PowerFlowSolution run_dc(const Network& net, const TimeGrid& grid, const Dispatch& dispatch);

/// Full AC Newton-Raphson power flow over the horizon. Buses hosting
/// generators are held at their voltage setpoint (PV), the slack bus fixes
/// angle and magnitude, remaining buses are PQ. Reactive limits are not
/// enforced during the solve. Throws NoConvergence.
PowerFlowSolution solve_ac(const Network& net, const TimeGrid& grid, const Dispatch& dispatch,
                           const AcOptions& options = {});

/// Mismatch of the nodal active balance (generation - load + discharge -
/// charge - branch outflows), MW, for one period; used for independent checks.
std::vector<double> active_balance_residual_mw(const Network& net, const PowerFlowSolution& sol,
                                               int period);

/// AC equation residuals re-evaluated from scratch at the solution state:
/// per-bus P and Q mismatch in p.u. for one period.
std::vector<double> ac_mismatch_pu(const Network& net, const PowerFlowSolution& sol, int period);

/// Sign-split every branch end flow into its nonnegative dual pair.
/// Exact: fwd - rev reproduces the signed flow bit-for-bit.
DualFlows split_flows(const PowerFlowSolution& sol);

}  // namespace copf::pf
