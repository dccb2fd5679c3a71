#pragma once

#include <span>
#include <vector>

#include "copf/model.hpp"
#include "copf/power_flow.hpp"
#include "copf/storage_carbon.hpp"

namespace copf::carbon {

/// One-period carbon flow system: (P_N - P_B) w = r_G.
///
/// p_in is the diagonal of P_N (total nodal power inflow, MW). p_b[i][k] holds
/// the branch inflow P_ki^i measured at the receiving node i. r_gen collects
/// the nodal carbon injections (ton/h): generator emissions plus, under the
/// water-tank storage model, discharge at the unit's internal intensity.
struct Matrices {
  int n = 0;
  std::vector<double> p_in_mw;
  std::vector<std::vector<double>> p_b_mw;
  std::vector<double> r_gen;
  std::vector<double> load_mw;       // per-bus load (plus storage charging), diagnostics
  std::vector<double> outflow_mw;    // per-bus branch outflow, diagnostics
  std::vector<char> dominant;        // strict diagonal dominance (row in J)
  double w_injection_max = 0.0;      // largest intensity among carbon sources

  double p_c(int i, int k) const {   // element of P_C = P_N - P_B
    return (i == k) ? p_in_mw[i] : -p_b_mw[i][k];
  }
};

struct FeasibilityVerdict {
  bool feasible = false;
  std::vector<int> stranded;             // rows violating the reachability condition
  std::vector<int> load_without_supply;  // positive load but zero inflow
  std::vector<int> inconsistent;         // outflow from a node with zero inflow
  std::vector<int> excluded;             // zero-flux rows solved as w = 0
  std::vector<std::vector<int>> witness; // per bus: chain of hops to a dominant row
};

struct Solution {
  std::vector<double> w;              // nodal carbon intensity, ton/MWh
  std::vector<double> r_from, r_to;   // per branch, ton/h, signed like the power flows
  std::vector<double> r_loss;         // per branch, ton/h, >= 0
  std::vector<double> r_load;         // per load, ton/h
  std::vector<double> r_gen;          // per generator, ton/h
};

/// Threshold below which a branch flow is treated as zero when orienting the
/// carbon flow graph.
inline constexpr double kFlowZeroMw = 1e-9;

/// Assemble the one-period carbon flow system from a power flow solution.
/// Branch direction comes from the sending-end sign; inflows are measured at
/// the receiving end. Under the water-tank model, storage discharge enters as
/// a carbon source at intensity w_es (one entry per storage unit); under the
/// load/clean-generator model it enters at intensity zero.
/// Throws ImplausibleFlow when the two branch ends disagree on direction.
Matrices build_matrices(const Network& net, const pf::PowerFlowSolution& pf, int period,
                        EsModelKind es_model = EsModelKind::WaterTank,
                        std::span<const double> w_es = {});

/// Reachability test of the invertibility condition: every row without strict
/// diagonal dominance must trace upstream, through nonzero off-diagonal
/// entries, to a dominant row.
FeasibilityVerdict check_feasibility(const Matrices& m);

/// Direct dense solve of P_C w = r_G. Requires a FEASIBLE verdict; excluded
/// rows are pinned at w = 0. Throws SingularMatrix or NegativeIntensity.
std::vector<double> solve(const Matrices& m, const FeasibilityVerdict& verdict);

/// Convenience: check then solve.
std::vector<double> solve(const Matrices& m);

/// Independent fixed-point iteration w <- P_N^{-1} (r_G + P_B w), the
/// component form of the nodal intensity equation. Requires strictly positive
/// inflow everywhere. Converges on feasible instances; used as a test oracle.
std::vector<double> solve_fixed_point(const Matrices& m, double tol = 1e-12,
                                      long max_iterations = 1000000);

/// Proportional-sharing attribution of carbon flow rates onto branches,
/// loads and generators for one period.
Solution attribute(const Matrices& m, std::span<const double> w, const Network& net,
                   const pf::PowerFlowSolution& pf, int period);

/// Per-node carbon conservation residual (ton/h): carbon inflow minus carbon
/// outflow, including storage terms. Independent audit of a solved period.
std::vector<double> conservation_residual(const Matrices& m, std::span<const double> w);

}  // namespace copf::carbon
