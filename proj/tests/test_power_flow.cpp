#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "copf/errors.hpp"
#include "copf/power_flow.hpp"
#include "support/fixtures.hpp"

using namespace copf;

TEST_CASE("DC two-bus analytic solution") {
  const Network n = test::net_two_bus();  // x = 0.1 pu line, base 100 MVA
  const std::vector<double> inj = {50.0, -50.0};  // 0.5 pu sent
  const auto sol = pf::solve_dc(n, inj);
  CHECK(sol.theta_rad[0][0] == doctest::Approx(0.0));
  CHECK(sol.theta_rad[0][1] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(sol.p_from_mw[0][0] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(sol.p_to_mw[0][0] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(sol.p_loss_mw[0][0] == 0.0);
}

TEST_CASE("DC zero injections give the zero state") {
  const Network n = test::net_two_bus();
  const std::vector<double> inj = {0.0, 0.0};
  const auto sol = pf::solve_dc(n, inj);
  CHECK(sol.theta_rad[0][1] == 0.0);
  CHECK(sol.p_from_mw[0][0] == 0.0);
}

TEST_CASE("DC random tree reproduces injections at every node") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Network n;
    const int nb = 6;
    for (int i = 0; i < nb; ++i) n.buses.push_back(test::bus(i + 1, i == 0));
    for (int i = 1; i < nb; ++i) {
      const int parent = static_cast<int>(u(rng) * i);
      n.branches.push_back(test::branch(parent + 1, i + 1, 0.0, -4.0 - 10.0 * u(rng)));
    }
    n.generators.push_back(test::gen(1, 1, 0, 1000, 0, 1, 0));
    n.loads.push_back(test::load(2, 1, 10));

    std::vector<double> inj(nb, 0.0);
    double sum = 0.0;
    for (int i = 1; i < nb; ++i) {
      inj[i] = 100.0 * (u(rng) - 0.5);
      sum += inj[i];
    }
    inj[0] = -sum;

    const auto sol = pf::solve_dc(n, inj);

    // oracle: dense solve of B theta = p in per unit
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nb - 1, nb - 1);
    Eigen::VectorXd p(nb - 1);
    for (int i = 1; i < nb; ++i) p(i - 1) = inj[i] / n.base_mva;
    for (const auto& br : n.branches) {
      const int a = n.bus_index(br.from), b = n.bus_index(br.to);
      const double k = -br.b_pu;
      if (a > 0) B(a - 1, a - 1) += k;
      if (b > 0) B(b - 1, b - 1) += k;
      if (a > 0 && b > 0) {
        B(a - 1, b - 1) -= k;
        B(b - 1, a - 1) -= k;
      }
    }
    const Eigen::VectorXd th = B.fullPivLu().solve(p);
    for (int i = 1; i < nb; ++i)
      CHECK(sol.theta_rad[0][i] == doctest::Approx(th(i - 1)).epsilon(1e-10));

    // flows out of each node reproduce its injection
    std::vector<double> res(nb, 0.0);
    for (int i = 0; i < nb; ++i) res[i] = inj[i];
    for (size_t e = 0; e < n.branches.size(); ++e) {
      res[n.bus_index(n.branches[e].from)] -= sol.p_from_mw[0][e];
      res[n.bus_index(n.branches[e].to)] += sol.p_to_mw[0][e];
    }
    for (int i = 0; i < nb; ++i) CHECK(std::abs(res[i]) <= 1e-10 * 100.0);
  }
}

TEST_CASE("DC rejects unbalanced injections and disconnected graphs") {
  const Network n = test::net_two_bus();
  CHECK_THROWS_AS((void)pf::solve_dc(n, std::vector<double>{50.0, -20.0}), Error);
  Network broken = n;
  broken.buses.push_back(test::bus(3));
  CHECK_THROWS_AS((void)pf::solve_dc(broken, std::vector<double>{50.0, -50.0, 0.0}),
                  SingularSystem);
}

namespace {

Network two_bus_ac() {
  Network n;
  n.buses = {test::bus(1, true), test::bus(2)};
  // r + jx = 0.02 + j0.1
  const double r = 0.02, x = 0.1, z2 = r * r + x * x;
  n.branches = {test::branch(1, 2, r / z2, -x / z2, 5.0)};
  n.generators = {test::gen(1, 1, 0, 300, 0.01, 20, 1.0)};
  n.loads = {test::load(2, 1, 50, 10)};
  return n;
}

}  // namespace

TEST_CASE("AC no-load flat network converges immediately") {
  Network n = two_bus_ac();
  n.loads[0].p_mw[0] = 0.0;
  n.loads[0].q_mvar[0] = 0.0;
  pf::Dispatch d;
  d.gen_p_mw = {{0.0}};
  const auto sol = pf::solve_ac(n, {1, 1.0}, d);
  CHECK(sol.p_from_mw[0][0] == doctest::Approx(0.0).scale(1).epsilon(1e-10));
  CHECK(sol.v_pu[0][1] == doctest::Approx(1.0));
}

TEST_CASE("AC two-bus lossy line") {
  const Network n = two_bus_ac();
  pf::Dispatch d;
  d.gen_p_mw = {{0.0}};  // slack picks up everything
  const auto sol = pf::solve_ac(n, {1, 1.0}, d);

  CHECK(sol.p_loss_mw[0][0] > 0.0);
  CHECK(sol.p_from_mw[0][0] > sol.p_to_mw[0][0]);
  CHECK(sol.p_to_mw[0][0] == doctest::Approx(50.0).epsilon(1e-6));

  // independent residual evaluation at the returned state
  const auto mis = pf::ac_mismatch_pu(n, sol, 0);
  for (double m : mis) CHECK(std::abs(m) <= 1e-8);
}

TEST_CASE("AC loss is nonnegative for nonnegative conductance") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Network n = two_bus_ac();
    n.loads[0].p_mw[0] = 20.0 + 60.0 * u(rng);
    n.loads[0].q_mvar[0] = 20.0 * (u(rng) - 0.5);
    pf::Dispatch d;
    d.gen_p_mw = {{0.0}};
    const auto sol = pf::solve_ac(n, {1, 1.0}, d);
    CHECK(sol.p_loss_mw[0][0] >= 0.0);
  }
}

TEST_CASE("split_flows sign cases and recombination identity") {
  pf::PowerFlowSolution sol;
  sol.resize(1, 2, 3, 0, 0);
  sol.p_from_mw[0] = {3.2, -1.5, 0.0};
  sol.p_to_mw[0] = {3.0, -1.6, 0.0};
  const auto d = pf::split_flows(sol);
  CHECK(d.at_from[0][0].fwd_mw == 3.2);
  CHECK(d.at_from[0][0].rev_mw == 0.0);
  CHECK(d.at_from[0][1].fwd_mw == 0.0);
  CHECK(d.at_from[0][1].rev_mw == 1.5);
  CHECK(d.at_from[0][2].fwd_mw == 0.0);
  CHECK(d.at_from[0][2].rev_mw == 0.0);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    pf::PowerFlowSolution s2;
    s2.resize(1, 2, 1, 0, 0);
    s2.p_from_mw[0][0] = u(rng);
    s2.p_to_mw[0][0] = u(rng);
    const auto dd = pf::split_flows(s2);
    // exact recombination and complementarity
    CHECK(dd.at_from[0][0].fwd_mw - dd.at_from[0][0].rev_mw == s2.p_from_mw[0][0]);
    CHECK(dd.at_to[0][0].fwd_mw - dd.at_to[0][0].rev_mw == s2.p_to_mw[0][0]);
    CHECK(dd.at_from[0][0].fwd_mw * dd.at_from[0][0].rev_mw == 0.0);
  }
}
