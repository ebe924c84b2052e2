#ifndef SIGMIN_OPT_PRAXIS_HPP
#define SIGMIN_OPT_PRAXIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "sigmin/optim.hpp"
#include "sigmin/rng.hpp"
#include "sigmin/svd.hpp"

namespace sigmin {
namespace detail {

// Derivative-free principal-axis descent: cyclic parabolic line searches
// over an orthogonal direction set, a pattern move after each sweep, and a
// periodic refresh that re-aligns the set with the eigenvectors of the
// accumulated curvature model. Resolution stalls trigger small seeded
// perturbations before the run is declared converged.
class PraxisCore {
 public:
  PraxisCore(EvalDriver& driver, const OptimiserSpec& spec, std::size_t dim,
             std::vector<double> x0)
      : driver_(driver), spec_(spec), n_(dim), x_(std::move(x0)), rng_(spec.seed) {
    dirs_.assign(n_, std::vector<double>(n_, 0.0));
    for (std::size_t i = 0; i < n_; ++i) dirs_[i][i] = 1.0;
    curv_.assign(n_, 0.0);
    lam_.assign(n_, 0.0);
  }

  // Runs until convergence or until the driver stops the budget/clock.
  // Returns true when the stall criterion was reached. A known value at the
  // start point avoids re-evaluating it.
  bool run(const double* f0 = nullptr) {
    fx_ = f0 ? *f0 : driver_.eval_f(x_);
    started_ = true;
    double step0 = initial_step();
    for (std::size_t i = 0; i < n_; ++i) lam_[i] = step0;

    std::size_t stalls = 0;
    for (std::size_t pass = 0;; ++pass) {
      std::vector<double> x_old = x_;
      double f_old = fx_;

      std::size_t widest = 0;
      double biggest_drop = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        double before = fx_;
        fx_ = line_minimise(dirs_[i], curv_[i], lam_[i]);
        if (before - fx_ > biggest_drop) {
          biggest_drop = before - fx_;
          widest = i;
        }
      }

      pattern_move(x_old, f_old, widest, biggest_drop);

      double dx = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        dx = std::max(dx, std::abs(x_[i] - x_old[i]) / (1.0 + std::abs(x_[i])));
      bool small_step = dx <= spec_.x_tol;
      bool small_drop = 2.0 * (f_old - fx_) <=
                        spec_.f_tol * (std::abs(f_old) + std::abs(fx_) + 1e-300);
      if (small_step && small_drop) {
        if (++stalls >= 3) return true;
        perturb();
      } else {
        stalls = 0;
      }

      if (n_ > 1 && (pass + 1) % n_ == 0) refresh_axes();
    }
  }

  const std::vector<double>& x() const { return x_; }
  double f() const { return fx_; }
  bool started() const { return started_; }

 private:
  double initial_step() {
    double scale = 0.0;
    for (double v : x_) scale = std::max(scale, std::abs(v));
    return 0.1 * (scale > 0.0 ? scale : 1.0);
  }

  double at_offset(const std::vector<double>& d, double t) {
    std::vector<double> p(n_);
    for (std::size_t i = 0; i < n_; ++i) p[i] = x_[i] + t * d[i];
    return driver_.eval_f(p);
  }

  // Bracket the minimum along d, then refine with up to two parabolic fits.
  // Updates x_ to the best sampled point, the curvature memory from the
  // final triple, and the step memory from the accepted move.
  double line_minimise(const std::vector<double>& d, double& curv, double& lam) {
    double h = lam > 0.0 ? lam : 1e-3;
    if (curv > 0.0) {
      double predicted = std::sqrt(2.0 * spec_.f_tol * (std::abs(fx_) + 1.0) / curv);
      h = std::clamp(predicted + lam, 0.25 * h, 4.0 * h);
    }

    double ta = 0.0, fa = fx_;
    double tb = h, fb = at_offset(d, tb);
    double tc, fc;
    if (fb <= fa) {
      tc = 2.0 * h;
      fc = at_offset(d, tc);
      std::size_t grow = 0;
      while (fc < fb && grow++ < 20) {
        ta = tb; fa = fb;
        tb = tc; fb = fc;
        tc = 2.0 * tc;
        fc = at_offset(d, tc);
      }
    } else {
      tc = tb; fc = fb;
      tb = -h; fb = at_offset(d, tb);
      if (fb < fa) {
        std::size_t grow = 0;
        double tn = -2.0 * h, fn = at_offset(d, tn);
        while (fn < fb && grow++ < 20) {
          tc = tb; fc = fb;
          tb = tn; fb = fn;
          tn = 2.0 * tn;
          fn = at_offset(d, tn);
        }
        ta = tn; fa = fn;
      }
      // Otherwise (-h, 0, +h) already brackets with the origin lowest.
    }
    order_triple(ta, fa, tb, fb, tc, fc);

    for (int fit = 0; fit < 2; ++fit) {
      double num = (tb - ta) * (tb - ta) * (fb - fc) - (tb - tc) * (tb - tc) * (fb - fa);
      double den = (tb - ta) * (fb - fc) - (tb - tc) * (fb - fa);
      if (std::abs(den) < 1e-300) break;
      double ts = tb - 0.5 * num / den;
      if (!std::isfinite(ts) || ts <= std::min(ta, tc) || ts >= std::max(ta, tc) ||
          std::abs(ts - tb) < 1e-14 * (1.0 + std::abs(tb)))
        break;
      double fs = at_offset(d, ts);
      replace_in_triple(ta, fa, tb, fb, tc, fc, ts, fs);
    }

    double cden = (ta - tb) * (tb - tc) * (ta - tc);
    if (std::abs(cden) > 1e-300) {
      double c2 = 2.0 * (fa * (tb - tc) - fb * (ta - tc) + fc * (ta - tb)) / cden;
      if (std::isfinite(c2) && c2 > 0.0) curv = c2;
    }

    double tbest = ta, fbest = fa;
    if (fb < fbest) { tbest = tb; fbest = fb; }
    if (fc < fbest) { tbest = tc; fbest = fc; }
    if (fbest < fx_) {
      for (std::size_t i = 0; i < n_; ++i) x_[i] += tbest * d[i];
      lam = std::max(std::abs(tbest), 1e-10);
      return fbest;
    }
    lam = std::max(0.25 * lam, 1e-10);
    return fx_;
  }

  static void order_triple(double& ta, double& fa, double& tb, double& fb,
                           double& tc, double& fc) {
    if (ta > tc) { std::swap(ta, tc); std::swap(fa, fc); }
    if (tb < ta || tb > tc) {
      // Degenerate bracket; sort all three by position.
      double t[3] = {ta, tb, tc}, f[3] = {fa, fb, fc};
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
          if (t[j] < t[i]) { std::swap(t[i], t[j]); std::swap(f[i], f[j]); }
      ta = t[0]; fa = f[0]; tb = t[1]; fb = f[1]; tc = t[2]; fc = f[2];
    }
  }

  static void replace_in_triple(double& ta, double& fa, double& tb, double& fb,
                                double& tc, double& fc, double ts, double fs) {
    if (fs < fb) {
      if (ts < tb) { tc = tb; fc = fb; }
      else { ta = tb; fa = fb; }
      tb = ts; fb = fs;
    } else {
      if (ts < tb) { ta = ts; fa = fs; }
      else { tc = ts; fc = fs; }
    }
  }

  // Powell pattern step: try the direction of the whole sweep, and adopt it
  // into the set in place of the direction that contributed most when the
  // classic acceptance test favours it.
  void pattern_move(const std::vector<double>& x_old, double f_old,
                    std::size_t widest, double biggest_drop) {
    std::vector<double> p(n_);
    double norm = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      p[i] = x_[i] - x_old[i];
      norm += p[i] * p[i];
    }
    norm = std::sqrt(norm);
    if (norm <= 1e-300) return;

    std::vector<double> xe(n_);
    for (std::size_t i = 0; i < n_; ++i) xe[i] = 2.0 * x_[i] - x_old[i];
    double fe = driver_.eval_f(xe);
    if (fe >= f_old) return;

    double t = 2.0 * (f_old - 2.0 * fx_ + fe) *
               std::pow(f_old - fx_ - biggest_drop, 2.0);
    double u = (f_old - fe) * (f_old - fe) * biggest_drop;
    if (t >= u) return;

    for (std::size_t i = 0; i < n_; ++i) p[i] /= norm;
    dirs_[widest] = p;
    curv_[widest] = 0.0;
    lam_[widest] = norm;
    fx_ = line_minimise(dirs_[widest], curv_[widest], lam_[widest]);
  }

  // Re-align the direction set with the eigenvectors of the accumulated
  // curvature model sum_i q_i d_i d_i^T.
  void refresh_axes() {
    double qmax = 0.0;
    for (double q : curv_) qmax = std::max(qmax, q);
    if (qmax <= 0.0) return;
    double qfloor = 1e-10 * qmax;

    DenseMatrix h(n_, n_);
    for (std::size_t k = 0; k < n_; ++k) {
      double q = std::max(curv_[k], qfloor);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          h.at(i, j) += q * dirs_[k][i] * dirs_[k][j];
    }
    std::vector<double> evals;
    DenseMatrix evecs;
    try {
      symmetric_eigen(h, evals, evecs);
    } catch (const std::exception&) {
      return;
    }
    for (std::size_t k = 0; k < n_; ++k) {
      for (std::size_t i = 0; i < n_; ++i) dirs_[k][i] = evecs.at(i, k);
      curv_[k] = std::max(evals[k], qfloor);
      lam_[k] = std::max(lam_[k], 1e-10);
    }
  }

  void perturb() {
    for (std::size_t i = 0; i < n_; ++i)
      x_[i] += (2.0 * rng_.uniform() - 1.0) * 10.0 * spec_.x_tol *
               (1.0 + std::abs(x_[i]));
    fx_ = driver_.eval_f(x_);
    for (std::size_t i = 0; i < n_; ++i)
      lam_[i] = std::max(lam_[i], 100.0 * spec_.x_tol);
  }

  EvalDriver& driver_;
  const OptimiserSpec& spec_;
  std::size_t n_;
  std::vector<double> x_;
  double fx_ = 0.0;
  bool started_ = false;
  std::vector<std::vector<double>> dirs_;
  std::vector<double> curv_;  // second-derivative estimate per direction
  std::vector<double> lam_;   // last successful step length per direction
  Rng rng_;
};

// Bounds are folded in through the quadratic penalty companion; when the
// answer still leaks outside the box the weight doubles and the search
// restarts from the projected incumbent.
inline RunReport run_praxis(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  std::vector<double> x0 = problem.start_point();

  if (!problem.bounded()) {
    EvalDriver driver(problem, spec);
    bool converged = false;
    std::unique_ptr<PraxisCore> core;
    try {
      core = std::make_unique<PraxisCore>(driver, spec, problem.dim, x0);
      converged = core->run();
    } catch (const EvalDriver::Exhausted&) {
    }
    return driver.finish(converged);
  }

  // Same companion as penalty_wrap, with the weight behind a shared cell so
  // restarts can escalate it without rebuilding the driver.
  auto weight = std::make_shared<double>(0.0);
  ObjectiveProblem penalised;
  penalised.dim = problem.dim;
  penalised.eval_counter = problem.eval_counter;
  {
    auto raw = problem.objective;
    auto lower = problem.lower;
    auto upper = problem.upper;
    penalised.objective = [raw, lower, upper, weight](const std::vector<double>& x) {
      double pen = 0.0;
      for (std::size_t i = 0; i < lower.size(); ++i) {
        double below = lower[i] - x[i];
        double above = x[i] - upper[i];
        if (below > 0.0) pen += below * below;
        if (above > 0.0) pen += above * above;
      }
      return raw(x) + *weight * pen;
    };
  }

  EvalDriver driver(penalised, spec);
  bool converged = false;
  std::vector<double> best_x = x0;
  double best_f = std::numeric_limits<double>::infinity();
  bool have_core_best = false;

  double f0;
  try {
    f0 = driver.eval_f(x0);
  } catch (const EvalDriver::Exhausted&) {
    return driver.finish(false);
  }
  *weight = 1e4 * (std::abs(f0) + 1.0);

  for (int round = 0; round < 4; ++round) {
    PraxisCore core(driver, spec, problem.dim, x0);
    bool exhausted = false;
    try {
      converged = round == 0 ? core.run(&f0) : core.run();
    } catch (const EvalDriver::Exhausted&) {
      exhausted = true;
      converged = false;
    }
    if (core.started()) {
      best_x = core.x();
      best_f = core.f();
      have_core_best = true;
    }
    if (exhausted) break;

    double excess = 0.0;
    for (std::size_t i = 0; i < problem.dim; ++i) {
      double w = problem.upper[i] - problem.lower[i];
      excess = std::max(excess, (problem.lower[i] - best_x[i]) / (w + 1e-300));
      excess = std::max(excess, (best_x[i] - problem.upper[i]) / (w + 1e-300));
    }
    if (excess <= 1e-8) break;
    *weight *= 2.0;
    x0 = best_x;
    for (std::size_t i = 0; i < problem.dim; ++i)
      x0[i] = std::clamp(x0[i], problem.lower[i], problem.upper[i]);
    converged = false;
  }

  RunReport report = driver.finish(converged);
  if (have_core_best && !report.best_x.empty()) {
    report.best_x = best_x;
    report.best_f = best_f;
  }
  return report;
}

}  // namespace detail
}  // namespace sigmin

#endif
