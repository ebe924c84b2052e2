#ifndef SIGMIN_OPTIM_HPP
#define SIGMIN_OPTIM_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sigmin {

// Generic minimisation problem. The objective is a black box; bounds are
// optional per method, equality constraints are residual vectors that must
// shrink below constraint_tol. start is the caller's initial point (box
// centre when empty). eval_counter is shared so wrappers count into the
// same place as the problem they decorate.
struct ObjectiveProblem {
  std::size_t dim = 0;
  std::function<double(const std::vector<double>&)> objective;
  std::function<std::vector<double>(const std::vector<double>&)> gradient;  // optional
  std::vector<double> lower, upper;  // empty = unbounded
  std::function<std::vector<double>(const std::vector<double>&)> equality_constraints;  // optional
  double constraint_tol = 1e-6;
  std::vector<double> start;  // optional
  std::shared_ptr<std::atomic<std::uint64_t>> eval_counter =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  bool bounded() const { return !lower.empty() && !upper.empty(); }
  bool constrained() const { return static_cast<bool>(equality_constraints); }

  void check() const {
    if (dim == 0) throw std::invalid_argument("objective problem: dim must be positive");
    if (!objective) throw std::invalid_argument("objective problem: objective missing");
    if (bounded()) {
      if (lower.size() != dim || upper.size() != dim)
        throw std::invalid_argument("objective problem: bound lengths differ from dim");
      for (std::size_t i = 0; i < dim; ++i)
        if (!(lower[i] <= upper[i]))
          throw std::invalid_argument("objective problem: lower bound exceeds upper");
    }
    if (!start.empty() && start.size() != dim)
      throw std::invalid_argument("objective problem: start length differs from dim");
    if (constraint_tol <= 0.0)
      throw std::invalid_argument("objective problem: constraint tolerance must be positive");
  }

  std::vector<double> start_point() const {
    if (!start.empty()) return start;
    if (bounded()) {
      std::vector<double> mid(dim);
      for (std::size_t i = 0; i < dim; ++i) mid[i] = 0.5 * (lower[i] + upper[i]);
      return mid;
    }
    return std::vector<double>(dim, 0.0);
  }
};

enum class Method { direct_l, praxis, lbfgs, isres, cobyla };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::direct_l: return "direct_l";
    case Method::praxis: return "praxis";
    case Method::lbfgs: return "lbfgs";
    case Method::isres: return "isres";
    case Method::cobyla: return "cobyla";
  }
  return "unknown";
}

struct OptimiserSpec {
  Method method = Method::praxis;
  std::size_t budget = 1000;
  double time_limit = 0.0;  // seconds; 0 disables
  std::uint64_t seed = 0;
  double x_tol = 1e-8;
  double f_tol = 1e-10;

  void check() const {
    if (budget == 0) throw std::invalid_argument("optimiser spec: budget must be >= 1");
    if (x_tol <= 0.0 || f_tol <= 0.0)
      throw std::invalid_argument("optimiser spec: tolerances must be positive");
  }
};

struct RunReport {
  std::string method;
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::uint64_t functional_count = 0;
  double elapsed_seconds = 0.0;
  bool converged = false;
  bool feasible = false;  // true when best_x meets every equality at tolerance
  std::vector<std::pair<std::uint64_t, double>> trace;  // (eval index, best-so-far)
};

// Raised by the dispatch layer before any evaluation when a method cannot
// handle the problem's constraint kinds.
class unsupported_constraints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Shared evaluation harness: counts every call, enforces budget and wall
// clock by throwing, and maintains the best-so-far trace. For constrained
// problems the trace and best point only accept feasible samples; the
// least-violating point is kept as a fallback answer.
class EvalDriver {
 public:
  struct Exhausted {};

  EvalDriver(const ObjectiveProblem& problem, const OptimiserSpec& spec)
      : problem_(problem),
        spec_(spec),
        t0_(std::chrono::steady_clock::now()) {}

  struct Sample {
    double f = 0.0;
    double violation = 0.0;  // max excess over constraint_tol, 0 if feasible
    std::vector<double> residuals;
  };

  Sample eval(const std::vector<double>& x) {
    if (used_ >= spec_.budget) throw Exhausted{};
    if (spec_.time_limit > 0.0) {
      double elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0_)
                           .count();
      if (elapsed > spec_.time_limit) throw Exhausted{};
    }
    Sample s;
    s.f = problem_.objective(x);
    ++used_;
    problem_.eval_counter->fetch_add(1, std::memory_order_relaxed);
    if (problem_.constrained()) {
      s.residuals = problem_.equality_constraints(x);
      for (double r : s.residuals)
        s.violation = std::max(s.violation, std::abs(r) - problem_.constraint_tol);
      s.violation = std::max(s.violation, 0.0);
    }
    record(x, s);
    return s;
  }

  double eval_f(const std::vector<double>& x) { return eval(x).f; }

  std::uint64_t used() const { return used_; }
  bool has_best() const { return have_best_; }
  double best_f() const { return best_f_; }
  const std::vector<double>& best_x() const { return best_x_; }

  // Fold the harness state into a report. When no feasible point was seen
  // the least-violating one is reported with feasible=false.
  RunReport finish(bool converged) const {
    RunReport r;
    r.method = method_name(spec_.method);
    r.functional_count = used_;
    r.converged = converged;
    r.trace = trace_;
    if (have_best_) {
      r.best_x = best_x_;
      r.best_f = best_f_;
      r.feasible = !problem_.constrained() || true;
    } else if (have_fallback_) {
      r.best_x = fallback_x_;
      r.best_f = fallback_f_;
      r.feasible = false;
    }
    return r;
  }

 private:
  void record(const std::vector<double>& x, const Sample& s) {
    if (s.violation == 0.0 && std::isfinite(s.f)) {
      if (!have_best_ || s.f < best_f_) {
        have_best_ = true;
        best_f_ = s.f;
        best_x_ = x;
        trace_.emplace_back(used_, s.f);
      }
    } else if (!have_best_) {
      // Least violation first, objective value as tie-break.
      if (!have_fallback_ || s.violation < fallback_v_ ||
          (s.violation == fallback_v_ && s.f < fallback_f_)) {
        have_fallback_ = true;
        fallback_v_ = s.violation;
        fallback_f_ = s.f;
        fallback_x_ = x;
      }
    }
  }

  const ObjectiveProblem& problem_;
  const OptimiserSpec& spec_;
  std::chrono::steady_clock::time_point t0_;
  std::uint64_t used_ = 0;
  bool have_best_ = false;
  double best_f_ = std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
  bool have_fallback_ = false;
  double fallback_v_ = std::numeric_limits<double>::infinity();
  double fallback_f_ = std::numeric_limits<double>::infinity();
  std::vector<double> fallback_x_;
  std::vector<std::pair<std::uint64_t, double>> trace_;
};

}  // namespace detail

// Unconstrained companion problem: the objective gains a quadratic penalty
// for every bound and equality violation. The evaluation counter is shared
// with the wrapped problem so functional counts stay comparable.
inline ObjectiveProblem penalty_wrap(const ObjectiveProblem& problem, double weight) {
  if (weight <= 0.0) throw std::invalid_argument("penalty_wrap: weight must be positive");
  problem.check();
  ObjectiveProblem wrapped;
  wrapped.dim = problem.dim;
  wrapped.start = problem.start;
  wrapped.constraint_tol = problem.constraint_tol;
  wrapped.eval_counter = problem.eval_counter;
  auto base = problem.objective;
  auto equality = problem.equality_constraints;
  auto lower = problem.lower;
  auto upper = problem.upper;
  double tol = problem.constraint_tol;
  wrapped.objective = [base, equality, lower, upper, tol,
                       weight](const std::vector<double>& x) {
    double pen = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) {
      double below = lower[i] - x[i];
      double above = x[i] - upper[i];
      if (below > 0.0) pen += below * below;
      if (above > 0.0) pen += above * above;
    }
    if (equality)
      for (double r : equality(x)) {
        double excess = std::abs(r) - tol;
        if (excess > 0.0) pen += excess * excess;
      }
    return base(x) + weight * pen;
  };
  return wrapped;
}

}  // namespace sigmin

#endif
