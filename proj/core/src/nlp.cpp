#include "copf/nlp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <vector>

namespace copf::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Multiplier formulation for an inequality c <= 0:
//   psi(c) = (max(0, mu + rho c)^2 - mu^2) / (2 rho),  d psi = max(0, mu + rho c).
double psi(double c, double mu, double rho, double& dpsi) {
  const double t = mu + rho * c;
  if (t > 0.0) {
    dpsi = t;
    return (t * t - mu * mu) / (2.0 * rho);
  }
  dpsi = 0.0;
  return -mu * mu / (2.0 * rho);
}

struct Work {
  Problem& p;
  const SolverOptions& opt;
  int n, me, mi;
  std::vector<double> lo, hi;

  std::vector<double> mu_eq, mu_in, mu_lo, mu_hi;
  double rho;

  std::vector<double> ce, ci, vE, vI;

  explicit Work(Problem& prob, const SolverOptions& o)
      : p(prob), opt(o), n(prob.num_vars()), me(prob.num_eq()), mi(prob.num_ineq()) {
    lo.assign(n, -kInf);
    hi.assign(n, kInf);
    p.var_bounds(lo, hi);
    mu_eq.assign(me, 0.0);
    mu_in.assign(mi, 0.0);
    mu_lo.assign(n, 0.0);
    mu_hi.assign(n, 0.0);
    rho = o.rho_init;
    ce.resize(me);
    ci.resize(mi);
    vE.resize(me);
    vI.resize(mi);
  }

  double merit(std::span<const double> x, std::span<double> grad) {
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double a = p.objective(x, want_grad ? grad : std::span<double>{});

    if (me) {
      p.eq(x, ce);
      for (int k = 0; k < me; ++k) {
        a += mu_eq[k] * ce[k] + 0.5 * rho * ce[k] * ce[k];
        if (want_grad) vE[k] = mu_eq[k] + rho * ce[k];
      }
      if (want_grad) p.eq_jtv(x, vE, grad);
    }
    if (mi) {
      p.ineq(x, ci);
      for (int j = 0; j < mi; ++j) {
        double d;
        a += psi(ci[j], mu_in[j], rho, d);
        if (want_grad) vI[j] = d;
      }
      if (want_grad) p.ineq_jtv(x, vI, grad);
    }
    for (int i = 0; i < n; ++i) {
      double d;
      if (lo[i] > -kInf) {
        a += psi(lo[i] - x[i], mu_lo[i], rho, d);
        if (want_grad) grad[i] -= d;
      }
      if (hi[i] < kInf) {
        a += psi(x[i] - hi[i], mu_hi[i], rho, d);
        if (want_grad) grad[i] += d;
      }
    }
    return a;
  }

  void update_multipliers(std::span<const double> x) {
    if (me) {
      p.eq(x, ce);
      for (int k = 0; k < me; ++k) mu_eq[k] += rho * ce[k];
    }
    if (mi) {
      p.ineq(x, ci);
      for (int j = 0; j < mi; ++j) mu_in[j] = std::max(0.0, mu_in[j] + rho * ci[j]);
    }
    for (int i = 0; i < n; ++i) {
      if (lo[i] > -kInf) mu_lo[i] = std::max(0.0, mu_lo[i] + rho * (lo[i] - x[i]));
      if (hi[i] < kInf) mu_hi[i] = std::max(0.0, mu_hi[i] + rho * (x[i] - hi[i]));
    }
  }

  // infinity norm over equality residuals, inequality violations and bound
  // violations, plus complementarity mismatch of the inequality multipliers
  double feasibility(std::span<const double> x, double& viol) {
    double feas = 0.0;
    viol = 0.0;
    if (me) {
      p.eq(x, ce);
      for (int k = 0; k < me; ++k) feas = std::max(feas, std::abs(ce[k]));
    }
    if (mi) {
      p.ineq(x, ci);
      for (int j = 0; j < mi; ++j) viol = std::max(viol, ci[j]);
    }
    for (int i = 0; i < n; ++i) {
      if (lo[i] > -kInf) viol = std::max(viol, lo[i] - x[i]);
      if (hi[i] < kInf) viol = std::max(viol, x[i] - hi[i]);
    }
    feas = std::max(feas, viol);
    return feas;
  }
};

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

struct LineResult {
  double step = 0.0;
  double f = 0.0;
  bool ok = false;
};

// Strong Wolfe line search (bracketing plus bisection zoom).
LineResult wolfe_search(Work& w, std::span<const double> x, std::span<const double> d,
                        double f0, double dphi0, std::vector<double>& x_trial,
                        std::vector<double>& g_trial) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  const size_t dim = x.size();
  auto phi = [&](double a, double& dphi) {
    for (size_t i = 0; i < dim; ++i) x_trial[i] = x[i] + a * d[i];
    const double f = w.merit(x_trial, g_trial);
    dphi = dot(g_trial, d);
    return f;
  };

  double lo_a = 0.0, lo_f = f0;
  double hi_a = 0.0;
  double a = 1.0;
  double f_prev = f0, a_prev = 0.0;
  bool bracketed = false;

  for (int it = 0; it < 25 && !bracketed; ++it) {
    double dphi = 0.0;
    const double f = phi(a, dphi);
    if (!std::isfinite(f) || f > f0 + c1 * a * dphi0 || (it > 0 && f >= f_prev)) {
      lo_a = a_prev;
      lo_f = f_prev;
      hi_a = a;
      bracketed = true;
      break;
    }
    if (std::abs(dphi) <= -c2 * dphi0) return {a, f, true};
    if (dphi >= 0.0) {
      lo_a = a;
      lo_f = f;
      hi_a = a_prev;
      bracketed = true;
      break;
    }
    a_prev = a;
    f_prev = f;
    a *= 2.0;
    if (a > 1e8) return {a_prev, f_prev, true};
  }

  for (int it = 0; it < 40; ++it) {
    const double a_mid = 0.5 * (lo_a + hi_a);
    if (std::abs(hi_a - lo_a) < 1e-16 * std::max(1.0, std::abs(lo_a)))
      return {lo_a, lo_f, lo_a > 0.0};
    double dphi = 0.0;
    const double f = phi(a_mid, dphi);
    if (!std::isfinite(f) || f > f0 + c1 * a_mid * dphi0 || f >= lo_f) {
      hi_a = a_mid;
    } else {
      if (std::abs(dphi) <= -c2 * dphi0) return {a_mid, f, true};
      if (dphi * (hi_a - lo_a) >= 0.0) hi_a = lo_a;
      lo_a = a_mid;
      lo_f = f;
    }
  }
  return {lo_a, lo_f, lo_a > 0.0};
}

// Modified Newton with a finite-difference Hessian of the merit function.
// The Hessian is rebuilt lazily; indefiniteness is handled by an escalating
// ridge. Problems beyond the dense threshold fall back to L-BFGS.
long minimize_newton(Work& w, std::vector<double>& x, double gtol, int max_iter) {
  const int dim = static_cast<int>(x.size());
  std::vector<double> g(dim), g_new(dim), d(dim), x_trial(dim), g_trial(dim);
  double f = w.merit(x, g);
  if (!std::isfinite(f)) return 0;

  Eigen::MatrixXd B(dim, dim);
  int since_rebuild = 1000000;
  long iters = 0;
  int hard_fails = 0;

  auto rebuild = [&]() {
    std::vector<double> gp(dim);
    for (int i = 0; i < dim; ++i) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[i]));
      const double save = x[i];
      x[i] = save + h;
      (void)w.merit(x, gp);
      x[i] = save;
      for (int k = 0; k < dim; ++k) B(k, i) = (gp[k] - g[k]) / h;
    }
    B = 0.5 * (B + B.transpose()).eval();
    since_rebuild = 0;
  };

  for (; iters < max_iter; ++iters) {
    if (inf_norm(g) <= gtol) break;
    if (since_rebuild >= 20) rebuild();

    Eigen::Map<const Eigen::VectorXd> gv(g.data(), dim);
    double ridge = 0.0;
    bool have_dir = false;
    for (int attempt = 0; attempt < 12 && !have_dir; ++attempt) {
      Eigen::MatrixXd Breg = B;
      if (ridge > 0.0) Breg.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Breg);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Eigen::Map<Eigen::VectorXd>(d.data(), dim) = -ldlt.solve(gv);
        const double gd = dot(g, d);
        if (gd < -1e-14 * inf_norm(g) * inf_norm(d)) {
          have_dir = true;
          break;
        }
      }
      ridge = ridge == 0.0 ? 1e-8 * std::max(1.0, B.diagonal().cwiseAbs().maxCoeff())
                           : ridge * 100.0;
    }
    if (!have_dir) {
      for (int i = 0; i < dim; ++i) d[i] = -g[i];
    }

    const double gd = dot(g, d);
    if (!(gd < 0.0)) break;
    const auto ls = wolfe_search(w, x, d, f, gd, x_trial, g_trial);
    if (!ls.ok || ls.step <= 0.0) {
      if (since_rebuild > 0 && hard_fails == 0) {
        rebuild();  // retry once with fresh curvature
        ++hard_fails;
        continue;
      }
      break;
    }

    for (int i = 0; i < dim; ++i) x_trial[i] = x[i] + ls.step * d[i];
    const double f_new = w.merit(x_trial, g_new);
    x.swap(x_trial);
    g.swap(g_new);
    f = f_new;
    ++since_rebuild;
    hard_fails = 0;
  }
  return iters;
}

long minimize_lbfgs(Work& w, std::vector<double>& x, double gtol, int max_iter) {
  const size_t dim = x.size();
  std::vector<double> g(dim), g_new(dim), d(dim), x_trial(dim), g_trial(dim);
  double f = w.merit(x, g);
  if (!std::isfinite(f)) return 0;

  std::deque<std::vector<double>> S, Y;
  std::deque<double> R;

  long iters = 0;
  int stalls = 0;
  for (; iters < max_iter; ++iters) {
    if (inf_norm(g) <= gtol) break;

    d.assign(g.begin(), g.end());
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      alpha[k] = R[k] * dot(S[k], d);
      for (size_t i = 0; i < dim; ++i) d[i] -= alpha[k] * Y[k][i];
    }
    if (!S.empty()) {
      const double gamma = dot(S.back(), Y.back()) / std::max(1e-300, dot(Y.back(), Y.back()));
      for (auto& di : d) di *= gamma;
    }
    for (size_t k = 0; k < S.size(); ++k) {
      const double beta = R[k] * dot(Y[k], d);
      for (size_t i = 0; i < dim; ++i) d[i] += S[k][i] * (alpha[k] - beta);
    }
    for (auto& di : d) di = -di;

    double gd = dot(g, d);
    if (!(gd < 0.0)) {
      S.clear();
      Y.clear();
      R.clear();
      for (size_t i = 0; i < dim; ++i) d[i] = -g[i];
      gd = dot(g, d);
      if (!(gd < 0.0)) break;
    }

    const auto ls = wolfe_search(w, x, d, f, gd, x_trial, g_trial);
    if (!ls.ok || ls.step <= 0.0) break;

    for (size_t i = 0; i < dim; ++i) x_trial[i] = x[i] + ls.step * d[i];
    const double f_new = w.merit(x_trial, g_new);

    double sy = 0.0, ss = 0.0, yy = 0.0;
    std::vector<double> sk(dim), yk(dim);
    for (size_t i = 0; i < dim; ++i) {
      sk[i] = x_trial[i] - x[i];
      yk[i] = g_new[i] - g[i];
      sy += sk[i] * yk[i];
      ss += sk[i] * sk[i];
      yy += yk[i] * yk[i];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      S.push_back(std::move(sk));
      Y.push_back(std::move(yk));
      R.push_back(1.0 / sy);
      if (S.size() > 25) {
        S.pop_front();
        Y.pop_front();
        R.pop_front();
      }
    }

    const double drop = f - f_new;
    x.swap(x_trial);
    g.swap(g_new);
    f = f_new;
    if (drop < 1e-16 * (1.0 + std::abs(f))) {
      if (++stalls >= 8) break;
    } else {
      stalls = 0;
    }
  }
  return iters;
}

long minimize(Work& w, std::vector<double>& x, double gtol, int max_iter) {
  if (x.size() <= 600) return minimize_newton(w, x, gtol, max_iter);
  return minimize_lbfgs(w, x, gtol, max_iter);
}

}  // namespace

SolveInfo solve(Problem& problem, std::vector<double>& x, const SolverOptions& opt) {
  Work w(problem, opt);
  SolveInfo info;

  if (x.size() != static_cast<size_t>(w.n)) x.assign(w.n, 0.0);
  for (int i = 0; i < w.n; ++i) {  // start inside the box
    if (w.lo[i] > -kInf && w.hi[i] < kInf)
      x[i] = std::clamp(x[i], w.lo[i], w.hi[i]);
    else if (w.lo[i] > -kInf)
      x[i] = std::max(x[i], w.lo[i]);
    else if (w.hi[i] < kInf)
      x[i] = std::min(x[i], w.hi[i]);
  }

  double omega = 1e-3;  // inner gradient target
  double eta = 1e-2;    // feasibility target for multiplier updates
  double feas_prev = kInf;
  int stalled_at_rho_max = 0;

  std::vector<double> grad(x.size());
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    info.outer_iterations = outer + 1;
    problem.outer_update(outer);

    info.inner_iterations += minimize(w, x, omega, opt.max_inner);

    double viol = 0.0;
    const double feas = w.feasibility(x, viol);
    const double gnorm = [&] {
      (void)w.merit(x, grad);
      return inf_norm(grad);
    }();

    if (opt.verbose)
      std::fprintf(stderr, "outer %3d  feas %.3e  viol %.3e  gnorm %.3e  rho %.1e\n", outer,
                   feas, viol, gnorm, w.rho);

    if (feas <= opt.eq_tol && viol <= opt.ineq_tol && problem.homotopy_done() &&
        gnorm <= opt.grad_tol) {
      w.update_multipliers(x);
      info.converged = true;
      break;
    }

    // multiplier step first, with the rho the minimization actually used
    w.update_multipliers(x);
    if (feas <= std::max(eta, opt.eq_tol))
      eta = std::max(eta * 0.2, opt.eq_tol);
    else
      w.rho = std::min(w.rho * 8.0, opt.rho_max);
    omega = std::max(omega * 0.3, 0.5 * opt.grad_tol);

    if (w.rho >= opt.rho_max && feas > std::max(100.0 * opt.eq_tol, 1e-6)) {
      if (feas > 0.9 * feas_prev) {
        if (++stalled_at_rho_max >= 3) {
          info.infeasible = true;
          break;
        }
      } else {
        stalled_at_rho_max = 0;
      }
    }
    feas_prev = feas;
  }

  double viol = 0.0;
  info.eq_residual = w.feasibility(x, viol);
  info.ineq_violation = std::max(0.0, viol);
  {
    (void)w.merit(x, grad);
    info.kkt_stationarity = inf_norm(grad);
  }
  info.objective = problem.objective(x, {});
  info.eq_multipliers = w.mu_eq;
  info.ineq_multipliers = w.mu_in;
  return info;
}

}  // namespace copf::nlp
