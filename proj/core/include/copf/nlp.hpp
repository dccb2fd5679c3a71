#pragma once

#include <span>
#include <vector>

namespace copf::nlp {

/// Smooth nonlinear program
///   min f(x)  s.t.  c_E(x) = 0,  c_I(x) <= 0,  lo <= x <= hi.
/// Problems are expected to arrive well scaled (rows and objective O(1)).
struct Problem {
  virtual ~Problem() = default;

  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual int num_ineq() const = 0;
  virtual void var_bounds(std::span<double> lo, std::span<double> hi) const = 0;

  /// Objective value; accumulates the gradient into grad when nonempty.
  virtual double objective(std::span<const double> x, std::span<double> grad) const = 0;
  virtual void eq(std::span<const double> x, std::span<double> c) const = 0;
  virtual void ineq(std::span<const double> x, std::span<double> c) const = 0;
  /// out += J_E(x)^T v
  virtual void eq_jtv(std::span<const double> x, std::span<const double> v,
                      std::span<double> out) const = 0;
  /// out += J_I(x)^T v
  virtual void ineq_jtv(std::span<const double> x, std::span<const double> v,
                        std::span<double> out) const = 0;

  /// Homotopy hook called once per outer iteration (e.g. to tighten a
  /// complementarity relaxation). homotopy_done() gates convergence.
  virtual void outer_update(int /*outer*/) {}
  virtual bool homotopy_done() const { return true; }
};

struct SolverOptions {
  double eq_tol = 1e-8;    // infinity-norm target on all constraint residuals
  double ineq_tol = 1e-8;  // tolerated positive part of c_I at the end
  double grad_tol = 1e-7;  // stationarity of the augmented Lagrangian
  double rho_init = 10.0;
  double rho_max = 1e11;
  int max_outer = 80;
  int max_inner = 3000;
  bool verbose = false;
};

struct SolveInfo {
  bool converged = false;
  bool infeasible = false;  // the penalty loop stalled at a violated point
  int outer_iterations = 0;
  long inner_iterations = 0;
  double objective = 0.0;
  double eq_residual = 0.0;       // ||c_E||_inf at the final point
  double ineq_violation = 0.0;    // max(0, c_I) at the final point
  double kkt_stationarity = 0.0;  // ||grad_x L||_inf with final multipliers
  std::vector<double> eq_multipliers;
  std::vector<double> ineq_multipliers;
};

/// Augmented Lagrangian homotopy: multiplier/penalty terms for equalities,
/// inequalities and bounds (Powell-Hestenes-Rockafellar form), minimized by a
/// quasi-Newton method (dense BFGS below ~1200 unknowns, L-BFGS above) with a
/// strong Wolfe line search. x is the start point on entry and the solution
/// on exit.
SolveInfo solve(Problem& problem, std::vector<double>& x, const SolverOptions& options = {});

}  // namespace copf::nlp
