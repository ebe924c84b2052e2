#ifndef SIGMIN_MINIMIZE_HPP
#define SIGMIN_MINIMIZE_HPP

#include <chrono>
#include <cmath>
#include <string>

#include "sigmin/opt_cobyla.hpp"
#include "sigmin/opt_direct.hpp"
#include "sigmin/opt_isres.hpp"
#include "sigmin/opt_lbfgs.hpp"
#include "sigmin/opt_praxis.hpp"
#include "sigmin/optim.hpp"

namespace sigmin {
namespace detail {

inline void require_finite_bounds(const ObjectiveProblem& problem, const char* who) {
  if (!problem.bounded())
    throw std::invalid_argument(std::string(who) + ": finite bounds are required");
  for (std::size_t i = 0; i < problem.dim; ++i)
    if (!std::isfinite(problem.lower[i]) || !std::isfinite(problem.upper[i]))
      throw std::invalid_argument(std::string(who) + ": bound " + std::to_string(i) +
                                  " is not finite");
}

inline void reject_equalities(const ObjectiveProblem& problem, const char* who) {
  if (problem.constrained())
    throw unsupported_constraints(std::string(who) +
                                  ": nonlinear equality constraints are not supported");
}

template <typename Run>
RunReport timed(Run&& run) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport r = run();
  r.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

inline RunReport direct_l(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  problem.check();
  spec.check();
  detail::reject_equalities(problem, "direct_l");
  detail::require_finite_bounds(problem, "direct_l");
  return detail::timed([&] { return detail::run_direct(problem, spec); });
}

inline RunReport praxis(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  problem.check();
  spec.check();
  detail::reject_equalities(problem, "praxis");
  return detail::timed([&] { return detail::run_praxis(problem, spec); });
}

inline RunReport lbfgs(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  problem.check();
  spec.check();
  detail::reject_equalities(problem, "lbfgs");
  return detail::timed([&] { return detail::run_lbfgs(problem, spec); });
}

inline RunReport isres(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  problem.check();
  spec.check();
  detail::require_finite_bounds(problem, "isres");
  return detail::timed([&] { return detail::run_isres(problem, spec); });
}

inline RunReport cobyla(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  problem.check();
  spec.check();
  return detail::timed([&] { return detail::run_cobyla(problem, spec); });
}

inline RunReport minimize(const OptimiserSpec& spec, const ObjectiveProblem& problem) {
  switch (spec.method) {
    case Method::direct_l: return direct_l(problem, spec);
    case Method::praxis: return praxis(problem, spec);
    case Method::lbfgs: return lbfgs(problem, spec);
    case Method::isres: return isres(problem, spec);
    case Method::cobyla: return cobyla(problem, spec);
  }
  throw std::invalid_argument("minimize: unknown method");
}

// Global stage then local refinement from the global best point. Counts add,
// the trace continues across the seam, and the better value wins.
inline RunReport chain(const OptimiserSpec& global_spec, const OptimiserSpec& local_spec,
                       const ObjectiveProblem& problem) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport g = minimize(global_spec, problem);

  ObjectiveProblem local = problem;
  if (!g.best_x.empty()) local.start = g.best_x;
  RunReport l = minimize(local_spec, local);

  RunReport out;
  out.method = g.method + "+" + l.method;
  out.functional_count = g.functional_count + l.functional_count;
  out.converged = l.converged;
  if (!l.best_x.empty() && (g.best_x.empty() || l.best_f <= g.best_f)) {
    out.best_x = l.best_x;
    out.best_f = l.best_f;
    out.feasible = l.feasible;
  } else {
    out.best_x = g.best_x;
    out.best_f = g.best_f;
    out.feasible = g.feasible;
  }
  out.trace = g.trace;
  double floor = out.trace.empty() ? std::numeric_limits<double>::infinity()
                                   : out.trace.back().second;
  for (const auto& [idx, f] : l.trace)
    if (f <= floor) {
      out.trace.emplace_back(g.functional_count + idx, f);
      floor = f;
    }
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sigmin

#endif
