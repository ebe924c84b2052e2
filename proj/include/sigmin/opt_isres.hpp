#ifndef SIGMIN_OPT_ISRES_HPP
#define SIGMIN_OPT_ISRES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sigmin/optim.hpp"
#include "sigmin/rng.hpp"

namespace sigmin {
namespace detail {

// Evolution strategy with stochastic ranking. A comma-selected population of
// 20*(dim+1) members carries per-coordinate step sizes under log-normal
// self-adaptation with exponential smoothing; ranking bubbles by objective
// with probability 0.45 when a comparison involves an infeasible member, by
// constraint violation otherwise. The first mu-1 offspring take noise-free
// differential steps along the difference of two ranked members, which keeps
// the population mobile along active constraints after the step sizes have
// adapted down. The report's best point comes from the evaluation harness,
// so comma selection never loses the incumbent.
inline RunReport run_isres(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  constexpr double kWinProb = 0.45;
  constexpr double kDiff = 0.4;
  constexpr double kSmooth = 0.8;

  EvalDriver driver(problem, spec);
  Rng rng(spec.seed);
  const std::size_t n = problem.dim;
  const std::size_t lambda = 20 * (n + 1);
  const std::size_t mu = std::max<std::size_t>(2, lambda / 7);
  const double tau = 1.0 / std::sqrt(2.0 * std::sqrt(static_cast<double>(n)));
  const double tau_prime = 1.0 / std::sqrt(2.0 * static_cast<double>(n));

  std::vector<double> width(n);
  for (std::size_t i = 0; i < n; ++i) width[i] = problem.upper[i] - problem.lower[i];

  auto clamp_x = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = std::clamp(x[i], problem.lower[i], problem.upper[i]);
  };

  auto phi_of = [&](const EvalDriver::Sample& s) {
    double phi = 0.0;
    for (double r : s.residuals) {
      double excess = std::abs(r) - problem.constraint_tol;
      if (excess > 0.0) phi += excess * excess;
    }
    return phi;
  };

  std::vector<std::vector<double>> xs(lambda, std::vector<double>(n));
  std::vector<std::vector<double>> sigma(lambda, std::vector<double>(n));
  std::vector<double> fs(lambda), phis(lambda);

  bool converged = false;
  try {
    std::vector<double> x0 = problem.start_point();
    clamp_x(x0);
    for (std::size_t j = 0; j < lambda; ++j) {
      if (j == 0)
        xs[j] = x0;
      else
        for (std::size_t i = 0; i < n; ++i)
          xs[j][i] = problem.lower[i] + rng.uniform() * width[i];
      for (std::size_t i = 0; i < n; ++i)
        sigma[j][i] = width[i] / std::sqrt(static_cast<double>(n));
      EvalDriver::Sample s = driver.eval(xs[j]);
      fs[j] = s.f;
      phis[j] = phi_of(s);
    }

    std::vector<std::size_t> rank(lambda);
    while (true) {
      for (std::size_t j = 0; j < lambda; ++j) rank[j] = j;
      for (std::size_t sweep = 0; sweep < lambda; ++sweep) {
        bool swapped = false;
        for (std::size_t j = 0; j + 1 < lambda; ++j) {
          std::size_t a = rank[j], b = rank[j + 1];
          bool by_f = (phis[a] == 0.0 && phis[b] == 0.0) || rng.uniform() < kWinProb;
          bool out_of_order = by_f ? fs[a] > fs[b] : phis[a] > phis[b];
          if (out_of_order) {
            std::swap(rank[j], rank[j + 1]);
            swapped = true;
          }
        }
        if (!swapped) break;
      }

      double sigma_spread = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sigma_spread = std::max(sigma_spread,
                                sigma[rank[0]][i] / (width[i] + 1e-300));
      double parent_spread = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double lo = xs[rank[0]][i], hi = lo;
        for (std::size_t r = 1; r < mu; ++r) {
          lo = std::min(lo, xs[rank[r]][i]);
          hi = std::max(hi, xs[rank[r]][i]);
        }
        parent_spread = std::max(parent_spread, (hi - lo) / (width[i] + 1e-300));
      }
      if (sigma_spread < spec.x_tol && parent_spread < spec.x_tol) {
        converged = true;
        break;
      }

      std::vector<std::vector<double>> nxs(lambda, std::vector<double>(n));
      std::vector<std::vector<double>> nsigma(lambda, std::vector<double>(n));
      for (std::size_t k = 0; k < lambda; ++k) {
        if (k + 1 < mu) {
          std::size_t self = rank[k];
          nsigma[k] = sigma[self];
          for (std::size_t i = 0; i < n; ++i)
            nxs[k][i] = xs[self][i] + kDiff * (xs[rank[0]][i] - xs[rank[k + 1]][i]);
          clamp_x(nxs[k]);
        } else {
          // The step uses the raw log-normal sample so selection sees the
          // full spread of trial sizes; only the stored value is smoothed.
          std::size_t p = rank[k % mu];
          double ng = tau_prime * rng.normal();
          for (std::size_t i = 0; i < n; ++i) {
            double cap = width[i] / std::sqrt(static_cast<double>(n));
            double s = sigma[p][i] * std::exp(ng + tau * rng.normal());
            s = std::clamp(s, 1e-20 * width[i], cap);
            double x;
            do {
              x = xs[p][i] + s * rng.normal();
            } while (x < problem.lower[i] || x > problem.upper[i]);
            nxs[k][i] = x;
            nsigma[k][i] = sigma[p][i] + kSmooth * (s - sigma[p][i]);
          }
        }
      }

      for (std::size_t k = 0; k < lambda; ++k) {
        EvalDriver::Sample s = driver.eval(nxs[k]);
        fs[k] = s.f;
        phis[k] = phi_of(s);
      }
      xs.swap(nxs);
      sigma.swap(nsigma);
    }
  } catch (const EvalDriver::Exhausted&) {
  }
  return driver.finish(converged);
}

}  // namespace detail
}  // namespace sigmin

#endif
