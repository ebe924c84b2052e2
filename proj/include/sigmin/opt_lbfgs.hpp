#ifndef SIGMIN_OPT_LBFGS_HPP
#define SIGMIN_OPT_LBFGS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "sigmin/optim.hpp"

namespace sigmin {
namespace detail {

// Limited-memory quasi-Newton descent with projection onto the bound box.
// The gradient is the caller's when supplied, otherwise a central finite
// difference whose probe points are clamped into the box (the divisor is the
// realised span, so one-sided steps at a face stay consistent).
inline RunReport run_lbfgs(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;

  EvalDriver driver(problem, spec);
  bool converged = false;
  const std::size_t n = problem.dim;

  auto project = [&problem](std::vector<double>& x) {
    if (!problem.bounded()) return;
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::clamp(x[i], problem.lower[i], problem.upper[i]);
  };

  auto fd_gradient = [&](const std::vector<double>& x) {
    std::vector<double> g(n);
    std::vector<double> xp = x, xm = x;
    for (std::size_t i = 0; i < n; ++i) {
      double h = 1e-6 * (1.0 + std::abs(x[i]));
      double hi = x[i] + h, lo = x[i] - h;
      if (problem.bounded()) {
        hi = std::min(hi, problem.upper[i]);
        lo = std::max(lo, problem.lower[i]);
      }
      xp[i] = hi;
      xm[i] = lo;
      double span = hi - lo;
      g[i] = span > 0.0 ? (driver.eval_f(xp) - driver.eval_f(xm)) / span : 0.0;
      xp[i] = x[i];
      xm[i] = x[i];
    }
    return g;
  };

  auto gradient = [&](const std::vector<double>& x) {
    return problem.gradient ? problem.gradient(x) : fd_gradient(x);
  };

  try {
    std::vector<double> x = problem.start_point();
    project(x);
    double fx = driver.eval_f(x);

    std::deque<std::vector<double>> hist_s, hist_y;
    std::deque<double> hist_rho;
    int flat_streak = 0;

    while (std::isfinite(fx)) {
      std::vector<double> g = gradient(x);

      // Two-loop recursion for the quasi-Newton direction.
      std::vector<double> q = g;
      std::vector<double> alpha(hist_s.size());
      for (std::size_t i = hist_s.size(); i-- > 0;) {
        double a = 0.0;
        for (std::size_t j = 0; j < n; ++j) a += hist_s[i][j] * q[j];
        a *= hist_rho[i];
        alpha[i] = a;
        for (std::size_t j = 0; j < n; ++j) q[j] -= a * hist_y[i][j];
      }
      if (!hist_s.empty()) {
        double sy = 0.0, yy = 0.0;
        const auto& s = hist_s.back();
        const auto& y = hist_y.back();
        for (std::size_t j = 0; j < n; ++j) {
          sy += s[j] * y[j];
          yy += y[j] * y[j];
        }
        double gamma = yy > 0.0 ? sy / yy : 1.0;
        for (double& v : q) v *= gamma;
      }
      for (std::size_t i = 0; i < hist_s.size(); ++i) {
        double b = 0.0;
        for (std::size_t j = 0; j < n; ++j) b += hist_y[i][j] * q[j];
        b *= hist_rho[i];
        for (std::size_t j = 0; j < n; ++j) q[j] += (alpha[i] - b) * hist_s[i][j];
      }
      std::vector<double> d(n);
      for (std::size_t j = 0; j < n; ++j) d[j] = -q[j];

      double gd = 0.0;
      for (std::size_t j = 0; j < n; ++j) gd += g[j] * d[j];
      if (gd >= 0.0) {
        hist_s.clear();
        hist_y.clear();
        hist_rho.clear();
        for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
      }

      // Backtracking line search along the projected path.
      double step = 1.0;
      bool accepted = false;
      bool moved = false;
      std::vector<double> x_new(n);
      double f_new = fx;
      for (int bt = 0; bt <= kMaxBacktracks; ++bt) {
        for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + step * d[j];
        project(x_new);
        double slope = 0.0;
        bool same = true;
        for (std::size_t j = 0; j < n; ++j) {
          slope += g[j] * (x_new[j] - x[j]);
          same = same && x_new[j] == x[j];
        }
        if (same) {
          step *= 0.5;
          continue;
        }
        moved = true;
        double f_try = driver.eval_f(x_new);
        if (std::isfinite(f_try) && f_try <= fx + kArmijo * slope && slope < 0.0) {
          f_new = f_try;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        // A null projected step means the iterate is pinned; that is a
        // stationary point, not a search failure.
        converged = !moved;
        break;
      }

      std::vector<double> g_new = gradient(x_new);
      std::vector<double> s(n), y(n);
      double sy = 0.0, snorm = 0.0, ynorm = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s[j] = x_new[j] - x[j];
        y[j] = g_new[j] - g[j];
        sy += s[j] * y[j];
        snorm += s[j] * s[j];
        ynorm += y[j] * y[j];
      }
      if (sy > 1e-12 * std::sqrt(snorm * ynorm)) {
        hist_s.push_back(std::move(s));
        hist_y.push_back(std::move(y));
        hist_rho.push_back(1.0 / sy);
        if (hist_s.size() > kMemory) {
          hist_s.pop_front();
          hist_y.pop_front();
          hist_rho.pop_front();
        }
      }

      double dx = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        dx = std::max(dx, std::abs(x_new[j] - x[j]) / (1.0 + std::abs(x_new[j])));
      double drop = fx - f_new;
      x = x_new;
      fx = f_new;

      if (dx <= spec.x_tol) {
        converged = true;
        break;
      }
      if (drop <= spec.f_tol * (std::abs(fx) + spec.f_tol)) {
        if (++flat_streak >= 2) {
          converged = true;
          break;
        }
      } else {
        flat_streak = 0;
      }
    }
  } catch (const EvalDriver::Exhausted&) {
  }
  return driver.finish(converged);
}

}  // namespace detail
}  // namespace sigmin

#endif
