#include <doctest.h>

#include <random>

#include "copf/nlp.hpp"
#include "dispatch_nlp.hpp"
#include "support/fixtures.hpp"

using namespace copf;
using dispatch::detail::DispatchNlp;
using dispatch::detail::FlowMode;
using dispatch::detail::NlpBuild;
using dispatch::detail::WarmStart;

namespace {

// min (x0-2)^2 + (x1+1)^2  s.t.  x0 + x1 = 1,  x0 - x1 <= 0.5,  x >= 0
struct ToyProblem : nlp::Problem {
  int num_vars() const override { return 2; }
  int num_eq() const override { return 1; }
  int num_ineq() const override { return 1; }
  void var_bounds(std::span<double> lo, std::span<double> hi) const override {
    lo[0] = lo[1] = 0.0;
    hi[0] = hi[1] = kInf;
  }
  double objective(std::span<const double> x, std::span<double> g) const override {
    if (!g.empty()) {
      g[0] += 2 * (x[0] - 2);
      g[1] += 2 * (x[1] + 1);
    }
    return (x[0] - 2) * (x[0] - 2) + (x[1] + 1) * (x[1] + 1);
  }
  void eq(std::span<const double> x, std::span<double> c) const override {
    c[0] = x[0] + x[1] - 1.0;
  }
  void ineq(std::span<const double> x, std::span<double> c) const override {
    c[0] = x[0] - x[1] - 0.5;
  }
  void eq_jtv(std::span<const double>, std::span<const double> v,
              std::span<double> out) const override {
    out[0] += v[0];
    out[1] += v[0];
  }
  void ineq_jtv(std::span<const double>, std::span<const double> v,
                std::span<double> out) const override {
    out[0] += v[0];
    out[1] -= v[0];
  }
};

void check_gradients(DispatchNlp& p, const std::vector<double>& x0, double tol = 5e-5) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = p.num_vars();
  const int me = p.num_eq(), mi = p.num_ineq();

  std::vector<double> vE(me), vI(mi);
  for (auto& v : vE) v = u(rng);
  for (auto& v : vI) v = u(rng);

  // analytic: grad of f + vE.cE + vI.cI
  std::vector<double> ga(n, 0.0);
  p.objective(x0, ga);
  if (me) p.eq_jtv(x0, vE, ga);
  if (mi) p.ineq_jtv(x0, vI, ga);

  auto scalar = [&](const std::vector<double>& x) {
    double s = p.objective(x, {});
    std::vector<double> c(me), ci(mi);
    if (me) {
      p.eq(x, c);
      for (int k = 0; k < me; ++k) s += vE[k] * c[k];
    }
    if (mi) {
      p.ineq(x, ci);
      for (int k = 0; k < mi; ++k) s += vI[k] * ci[k];
    }
    return s;
  };

  int checked = 0;
  for (int i = 0; i < n && checked < 120; i += std::max(1, n / 120), ++checked) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[i]));
    auto xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (scalar(xp) - scalar(xm)) / (2 * h);
    CAPTURE(i);
    CHECK(std::abs(fd - ga[i]) <= tol * std::max(1.0, std::abs(fd)));
  }
}

std::vector<double> random_point(DispatchNlp& p, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.9);
  std::vector<double> lo(p.num_vars()), hi(p.num_vars());
  p.var_bounds(lo, hi);
  std::vector<double> x(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) {
    const double l = std::isfinite(lo[i]) ? lo[i] : -1.0;
    const double h2 = std::isfinite(hi[i]) ? hi[i] : l + 2.0;
    x[i] = l + u(rng) * (h2 - l);
  }
  return x;
}

}  // namespace

TEST_CASE("augmented Lagrangian solves a toy QP with active constraints") {
  ToyProblem p;
  std::vector<double> x = {0.1, 0.1};
  nlp::SolverOptions opt;
  const auto info = nlp::solve(p, x, opt);
  CHECK(info.converged);
  // KKT point: x0 + x1 = 1, x0 - x1 = 0.5 active -> (0.75, 0.25)
  CHECK(x[0] == doctest::Approx(0.75).epsilon(1e-5));
  CHECK(x[1] == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(info.eq_residual <= 1e-8);
}

TEST_CASE("gradients: DC OPF mode") {
  dispatch::DispatchProblem prob;
  prob.network = test::net_six_bus(3);
  prob.network.storage.push_back(test::storage_unit(5));
  prob.grid = {3, 1.0};
  NlpBuild cfg;
  cfg.carbon = false;
  cfg.flow = FlowMode::Signed;
  DispatchNlp nlp(prob, cfg);
  check_gradients(nlp, random_point(nlp, 1));
}

TEST_CASE("gradients: DC C-OPF relaxed with policy") {
  dispatch::DispatchProblem prob;
  prob.network = test::net_six_bus(3);
  prob.network.storage.push_back(test::storage_unit(5));
  prob.grid = {3, 1.0};
  prob.policy.nci_cap.assign(3, std::vector<double>(6, 0.8));
  prob.policy.user_cap_ton.assign(prob.network.loads.size(), 500.0);
  prob.policy.node_cap_ton.assign(6, 800.0);
  prob.emission_price = 3.0;
  NlpBuild cfg;
  cfg.carbon = true;
  cfg.flow = FlowMode::DualRelaxed;
  DispatchNlp nlp(prob, cfg);
  check_gradients(nlp, random_point(nlp, 2));
}

TEST_CASE("gradients: DC C-OPF relaxed, soft policy") {
  dispatch::DispatchProblem prob;
  prob.network = test::net_six_bus(2);
  prob.grid = {2, 1.0};
  prob.policy.nci_cap.assign(2, std::vector<double>(6, 0.6));
  prob.policy.soft = true;
  prob.policy.slack_penalty = 1e4;
  NlpBuild cfg;
  cfg.carbon = true;
  cfg.flow = FlowMode::DualRelaxed;
  DispatchNlp nlp(prob, cfg);
  check_gradients(nlp, random_point(nlp, 3));
}

TEST_CASE("gradients: DC C-OPF direction-fixed") {
  dispatch::DispatchProblem prob;
  prob.network = test::net_three_bus_v(2);
  prob.network.storage.push_back(test::storage_unit(3));
  prob.grid = {2, 1.0};
  prob.policy.nci_cap.assign(2, std::vector<double>(3, 1.0));
  NlpBuild cfg;
  cfg.carbon = true;
  cfg.flow = FlowMode::DualFixed;
  cfg.branch_dir = {1, -1};
  cfg.es_dir = {{1}, {-1}};
  DispatchNlp nlp(prob, cfg);
  check_gradients(nlp, random_point(nlp, 4));
}

TEST_CASE("gradients: AC OPF and AC C-OPF") {
  dispatch::DispatchProblem prob;
  prob.network = test::net_three_bus_triangle(2);
  for (auto& g : prob.network.generators) {
    g.q_min_mvar = broadcast(-80.0, 2);
    g.q_max_mvar = broadcast(80.0, 2);
  }
  prob.grid = {2, 1.0};
  prob.pf_model = dispatch::PfModel::FullAc;

  SUBCASE("signed flows") {
    NlpBuild cfg;
    cfg.carbon = false;
    cfg.flow = FlowMode::Signed;
    DispatchNlp nlp(prob, cfg);
    check_gradients(nlp, random_point(nlp, 5));
  }
  SUBCASE("dual relaxed with caps") {
    prob.policy.nci_cap.assign(2, std::vector<double>(3, 0.9));
    NlpBuild cfg;
    cfg.carbon = true;
    cfg.flow = FlowMode::DualRelaxed;
    DispatchNlp nlp(prob, cfg);
    check_gradients(nlp, random_point(nlp, 6));
  }
}

TEST_CASE("warm start and extraction round-trip the slot layout") {
  dispatch::DispatchProblem prob;
  prob.network = test::net_six_bus(2);
  prob.network.storage.push_back(test::storage_unit(5));
  prob.grid = {2, 1.0};
  NlpBuild cfg;
  cfg.carbon = true;
  cfg.flow = FlowMode::DualRelaxed;
  DispatchNlp nlp(prob, cfg);

  WarmStart ws;
  const int T = 2, ng = 3, nb = 6, ne = 7;
  ws.gen_p_mw.assign(T, std::vector<double>(ng, 50.0));
  ws.theta.assign(T, std::vector<double>(nb, 0.01));
  ws.theta[0][0] = 0.0;
  ws.flow_from_mw.assign(T, std::vector<double>(ne, 12.0));
  ws.pch_mw.assign(T, {5.0});
  ws.pdc_mw.assign(T, {0.0});
  ws.e_mwh.assign(T + 1, {80.0});
  ws.w.assign(T, std::vector<double>(nb, 0.5));
  ws.w_es.assign(T + 1, {0.2});

  const auto x = nlp.make_x0(ws);
  const auto sol = nlp.extract(x);
  CHECK(sol.pf.gen_p_mw[1][2] == doctest::Approx(50.0));
  CHECK(sol.w[0][3] == doctest::Approx(0.5));
  CHECK(sol.e_mwh[2][0] == doctest::Approx(80.0));
  // dual pair keeps the interior margin but reproduces the signed flow closely
  CHECK(sol.pf.p_from_mw[0][0] == doctest::Approx(12.0).epsilon(1e-9));
}
