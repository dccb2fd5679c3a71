#pragma once

#include <span>
#include <string>
#include <vector>

#include "copf/model.hpp"
#include "copf/power_flow.hpp"
#include "copf/storage_carbon.hpp"

namespace copf::dispatch {

enum class PfModel { Dc, FullAc };

/// Regulatory carbon limits attached to a dispatch problem. Empty containers
/// and +inf entries mean "unconstrained".
struct CarbonPolicy {
  std::vector<std::vector<double>> nci_cap;  // [t][bus], ton/MWh
  std::vector<double> user_cap_ton;          // per load, over the horizon
  std::vector<double> node_cap_ton;          // per bus, over the horizon
  bool soft = false;
  double slack_penalty = 0.0;  // $/ton ($ per ton/MWh for intensity slack)

  bool any_finite() const;
};

struct DispatchProblem {
  Network network;
  TimeGrid grid;
  CarbonPolicy policy;
  PfModel pf_model = PfModel::Dc;
  EsModelKind es_model = EsModelKind::WaterTank;
  double emission_price = 0.0;  // $/ton on generation-side rates (optional)
};

/// Constraint residual maxima, re-checked independently of the solver.
struct Residuals {
  double balance_pu = 0.0;          // nodal active balance
  double balance_q_pu = 0.0;        // nodal reactive balance (AC)
  double flow_def_pu = 0.0;         // stored flows vs the flow equations
  double carbon_eq = 0.0;           // nodal carbon equation (relative)
  double es_energy_mwh = 0.0;       // storage energy dynamics
  double es_carbon = 0.0;           // storage intensity dynamics
  double complementarity_mw2 = 0.0; // max dual-pair product, branch ends and storage
  double min_pair_mw = 0.0;         // max over pairs of min(fwd, rev)
  double constraint_violation = 0.0;// caps/ramps/thermal/bounds, physical units
  double kkt_stationarity = 0.0;    // scaled, recorded by the solver
  double w_vs_recomputed = 0.0;     // |w - carbon_flow.solve(flows)|, evaluate only
};
using ResidualReport = Residuals;

struct DispatchSolution {
  pf::PowerFlowSolution pf;
  pf::DualFlows hat;                        // nonnegative dual pairs per branch end
  std::vector<std::vector<double>> w;       // [t][bus] nodal intensities
  std::vector<std::vector<double>> e_mwh;   // [k][storage], k = 0..T states
  std::vector<std::vector<double>> w_es;    // [k][storage], k = 0..T states
  std::vector<std::vector<double>> nci_slack;  // [t][bus], soft mode only
  double objective = 0.0;                   // $
  Residuals residuals;
  int outer_iterations = 0;
  long inner_iterations = 0;
};

struct DispatchOptions {
  double eq_tol = 1e-8;          // p.u.-scaled equality feasibility target
  double kkt_tol = 1e-6;         // scaled stationarity target
  double comp_eps_init = 1e-2;   // complementarity relaxation start (p.u.^2)
  double comp_eps_final = 1e-8;
  int max_outer = 60;
  int max_inner = 2500;
  bool polish = true;            // direction-fixed clean-up solve at the end
  bool verbose = false;
};

struct SweepPoint {
  double cap = 0.0;      // ton/MWh, uniform over load buses
  bool feasible = false;
  double cost = 0.0;     // $
  double emissions_ton = 0.0;  // horizon scope-1 total
  std::string note;
};

/// Economic dispatch without carbon variables or constraints.
DispatchSolution solve_opf(const DispatchProblem& problem, const DispatchOptions& opt = {});

/// Carbon-aware dispatch: dual-flow reformulation with relaxed complementarity
/// driven tight, warm-started from the OPF solution (or the supplied one).
/// Throws Infeasible when hard caps are unattainable.
DispatchSolution solve_copf(const DispatchProblem& problem, const DispatchOptions& opt = {},
                            const DispatchSolution* warm = nullptr);

/// Parametric study over ascending uniform intensity caps applied at load
/// buses; each point warm-starts from the previous. Infeasible points are
/// recorded and the sweep continues. workers > 1 fans contiguous blocks out
/// across threads (warm starts then chain within a block).
std::vector<SweepPoint> sweep_cap(const DispatchProblem& problem, std::span<const double> caps,
                                  const DispatchOptions& opt = {}, int workers = 1);

/// Exhaustive enumeration over branch direction patterns for tiny DC
/// instances; certifies solve_copf. Ties break on the lexicographically
/// smallest pattern (reverse direction preferred per branch, in branch order).
DispatchSolution solve_enum_oracle(const DispatchProblem& problem,
                                   const DispatchOptions& opt = {});

/// Re-derive every constraint residual from the stored solution, including the
/// nodal intensities recomputed through the linear carbon flow solve.
Residuals evaluate_solution(const DispatchProblem& problem, const DispatchSolution& sol);

/// Horizon scope-1 emissions of a dispatch (ton).
double total_emissions_ton(const DispatchProblem& problem, const DispatchSolution& sol);

}  // namespace copf::dispatch
