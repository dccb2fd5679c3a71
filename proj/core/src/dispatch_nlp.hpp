#pragma once

// Internal: assembly of the multi-period dispatch NLP in per-unit scaling.
// Shared by solve_opf / solve_copf / the enumeration oracle.

#include <span>
#include <vector>

#include "copf/dispatch.hpp"
#include "copf/nlp.hpp"

namespace copf::dispatch::detail {

enum class FlowMode {
  Signed,       // one free-sign flow variable per branch end (OPF)
  DualRelaxed,  // nonnegative pair + relaxed product constraint
  DualFixed     // direction pinned, reverse component fixed at zero
};

struct NlpBuild {
  bool carbon = false;
  FlowMode flow = FlowMode::Signed;
  std::vector<int> branch_dir;           // per branch, +1 from->to / -1 (DualFixed)
  std::vector<std::vector<int>> es_dir;  // [t][s]: 0 relaxed, +1 charge, -1 discharge
  double eps_init = 1e-2;
  double eps_final = 1e-8;
};

/// Physical-unit warm start; missing vectors fall back to neutral defaults.
struct WarmStart {
  std::vector<std::vector<double>> gen_p_mw;   // [t][g]
  std::vector<std::vector<double>> gen_q_mvar; // [t][g] (AC)
  std::vector<std::vector<double>> theta;      // [t][bus]
  std::vector<std::vector<double>> v;          // [t][bus] (AC)
  std::vector<std::vector<double>> flow_from_mw;  // [t][branch] signed
  std::vector<std::vector<double>> flow_to_mw;    // [t][branch] signed (AC)
  std::vector<std::vector<double>> pch_mw, pdc_mw;  // [t][s]
  std::vector<std::vector<double>> e_mwh;      // [k][s], k = 0..T
  std::vector<std::vector<double>> w;          // [t][bus]
  std::vector<std::vector<double>> w_es;       // [k][s]
};

class DispatchNlp : public nlp::Problem {
 public:
  DispatchNlp(const DispatchProblem& problem, NlpBuild build);

  // nlp::Problem
  int num_vars() const override { return nfree_; }
  int num_eq() const override { return neq_; }
  int num_ineq() const override { return nineq_; }
  void var_bounds(std::span<double> lo, std::span<double> hi) const override;
  double objective(std::span<const double> x, std::span<double> grad) const override;
  void eq(std::span<const double> x, std::span<double> c) const override;
  void ineq(std::span<const double> x, std::span<double> c) const override;
  void eq_jtv(std::span<const double> x, std::span<const double> v,
              std::span<double> out) const override;
  void ineq_jtv(std::span<const double> x, std::span<const double> v,
                std::span<double> out) const override;
  void outer_update(int outer) override;
  bool homotopy_done() const override;

  void set_objective_scale(double s) { f_scale_ = s; }

  std::vector<double> make_x0(const WarmStart& ws) const;
  double objective_raw(std::span<const double> x) const;  // $
  DispatchSolution extract(std::span<const double> x) const;

  /// Max complementarity product (MW^2) and max min-component (MW) over all
  /// dual pairs (branch ends and storage) at the point x.
  std::pair<double, double> complementarity(std::span<const double> x) const;

 private:
  struct Slots {
    std::vector<double> lo, hi, fixed_val;
    std::vector<int> xidx;  // -1 when fixed
    int add(double lo_, double hi_);
    int add_fixed(double v);
    double value(int slot, std::span<const double> x) const {
      return xidx[slot] < 0 ? fixed_val[slot] : x[xidx[slot]];
    }
    void acc(int slot, double dv, std::span<double> g) const {
      if (xidx[slot] >= 0) g[xidx[slot]] += dv;
    }
    int nfree = 0;
  };

  // Row walkers: compute values and/or accumulate v[k] * grad_row. A single
  // walk defines the row ordering for both the residual and the Jacobian.
  void walk_eq(std::span<const double> x, std::span<double> c, std::span<const double> v,
               std::span<double> g) const;
  void walk_ineq(std::span<const double> x, std::span<double> c, std::span<const double> v,
                 std::span<double> g) const;

  double flow_from(std::span<const double> x, int t, int e) const;
  double flow_to(std::span<const double> x, int t, int e) const;

  const DispatchProblem& p_;
  NlpBuild cfg_;
  bool ac_ = false;
  bool track_wes_ = false;  // carbon + water tank
  int T_ = 0, nb_ = 0, ne_ = 0, ng_ = 0, ns_ = 0, nl_ = 0;
  int slack_ = 0;
  double base_ = 100.0, dt_ = 1.0;
  double f_scale_ = 1.0;
  double eps_ = 1e-2;
  bool has_products_ = false;

  std::vector<int> abus_, bbus_, gbus_, lbus_, sbus_;

  Slots slots_;
  // slot ids
  std::vector<int> s_pg_, s_qg_, s_th_, s_v_;
  std::vector<int> s_ff_i_, s_fr_i_, s_ff_j_, s_fr_j_;  // flow pairs
  std::vector<int> s_pch_, s_pdc_;
  std::vector<int> s_w_;
  std::vector<int> s_e_;    // [k*ns+s], k = 0..T (k=0 fixed)
  std::vector<int> s_wes_;  // same layout
  std::vector<int> s_anci_;             // [t*nb+i], -1 when absent
  std::vector<int> s_auser_, s_anode_;  // -1 when absent

  std::vector<char> nci_finite_;  // [t*nb+i]
  std::vector<char> user_finite_, node_finite_;

  int nfree_ = 0, neq_ = 0, nineq_ = 0;

  int pg(int t, int g) const { return s_pg_[t * ng_ + g]; }
  int qg(int t, int g) const { return s_qg_[t * ng_ + g]; }
  int th(int t, int i) const { return s_th_[t * nb_ + i]; }
  int vv(int t, int i) const { return s_v_[t * nb_ + i]; }
  int ffi(int t, int e) const { return s_ff_i_[t * ne_ + e]; }
  int fri(int t, int e) const { return s_fr_i_[t * ne_ + e]; }
  int ffj(int t, int e) const { return s_ff_j_[t * ne_ + e]; }
  int frj(int t, int e) const { return s_fr_j_[t * ne_ + e]; }
  int pch(int t, int s) const { return s_pch_[t * ns_ + s]; }
  int pdc(int t, int s) const { return s_pdc_[t * ns_ + s]; }
  int wn(int t, int i) const { return s_w_[t * nb_ + i]; }
  int es(int k, int s) const { return s_e_[k * ns_ + s]; }
  int wes(int k, int s) const { return s_wes_[k * ns_ + s]; }
};

}  // namespace copf::dispatch::detail
