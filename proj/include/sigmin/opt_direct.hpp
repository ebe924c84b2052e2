#ifndef SIGMIN_OPT_DIRECT_HPP
#define SIGMIN_OPT_DIRECT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sigmin/optim.hpp"

namespace sigmin {
namespace detail {

// Deterministic locally-biased dividing-rectangles search. The box is
// rescaled to the unit cube; every rectangle keeps one trisection depth per
// coordinate, so its longest side is 3^-min(depth). Per refinement round at
// most one rectangle per size class is divided, picked from the lower convex
// hull of (half longest side, centre value).
class DirectSearch {
 public:
  DirectSearch(const ObjectiveProblem& problem, const OptimiserSpec& spec,
               EvalDriver& driver)
      : problem_(problem), spec_(spec), driver_(driver) {}

  bool run() {
    const std::size_t n = problem_.dim;
    Rect root;
    root.c.assign(n, 0.5);
    root.t.assign(n, 0);
    root.f = clamped(driver_.eval_f(denorm(root.c)));
    root.mind = 0;
    rects_.push_back(std::move(root));

    while (true) {
      std::vector<std::size_t> chosen = select();
      if (chosen.empty()) return false;
      bool resolved = true;
      for (std::size_t id : chosen)
        if (std::pow(3.0, -static_cast<double>(rects_[id].mind)) >= spec_.x_tol)
          resolved = false;
      if (resolved) return true;

      bool divided = false;
      for (std::size_t id : chosen)
        divided = divide(id) || divided;
      if (!divided) return true;  // every candidate at depth cap
    }
  }

 private:
  static constexpr std::uint8_t kMaxDepth = 45;
  static constexpr double kEps = 1e-4;

  struct Rect {
    std::vector<double> c;       // centre, unit-cube coordinates
    std::vector<std::uint8_t> t; // trisection depth per coordinate
    double f = 0.0;
    std::uint8_t mind = 0;       // min depth = longest-side class
  };

  static double clamped(double f) { return std::isfinite(f) ? f : 1e300; }

  std::vector<double> denorm(const std::vector<double>& c) const {
    std::vector<double> x(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      x[i] = problem_.lower[i] + c[i] * (problem_.upper[i] - problem_.lower[i]);
    return x;
  }

  // One representative per size class: lowest centre value, then the
  // earliest-created rectangle.
  std::vector<std::size_t> select() const {
    std::vector<std::size_t> rep(kMaxDepth + 1, SIZE_MAX);
    double fmin = 1e300;
    for (std::size_t i = 0; i < rects_.size(); ++i) {
      const Rect& r = rects_[i];
      fmin = std::min(fmin, r.f);
      std::size_t& slot = rep[r.mind];
      if (slot == SIZE_MAX || r.f < rects_[slot].f) slot = i;
    }

    // Representatives ordered by increasing half side: depth descending.
    std::vector<std::size_t> pts;
    for (std::size_t d = rep.size(); d-- > 0;)
      if (rep[d] != SIZE_MAX) pts.push_back(rep[d]);
    if (pts.size() == 1) return pts;

    auto half_side = [&](std::size_t id) {
      return 0.5 * std::pow(3.0, -static_cast<double>(rects_[id].mind));
    };

    std::vector<std::size_t> hull;
    for (std::size_t id : pts) {
      while (hull.size() >= 2) {
        std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
        double cross = (half_side(b) - half_side(a)) * (rects_[id].f - rects_[a].f) -
                       (rects_[b].f - rects_[a].f) * (half_side(id) - half_side(a));
        if (cross <= 0.0)
          hull.pop_back();
        else
          break;
      }
      hull.push_back(id);
    }

    // Keep the hull from the incumbent class rightward, filtered by the
    // minimum-improvement slope condition.
    std::size_t first = 0;
    for (std::size_t i = 0; i < hull.size(); ++i)
      if (rects_[hull[i]].f <= fmin) first = i;
    std::vector<std::size_t> out;
    for (std::size_t i = first; i < hull.size(); ++i) {
      if (i + 1 < hull.size()) {
        double k = (rects_[hull[i + 1]].f - rects_[hull[i]].f) /
                   (hull_side(hull, i + 1) - hull_side(hull, i));
        if (rects_[hull[i]].f - k * hull_side(hull, i) > fmin - kEps * std::abs(fmin))
          continue;
      }
      out.push_back(hull[i]);
    }
    if (out.empty()) out.push_back(hull.back());
    return out;
  }

  double hull_side(const std::vector<std::size_t>& hull, std::size_t i) const {
    return 0.5 * std::pow(3.0, -static_cast<double>(rects_[hull[i]].mind));
  }

  bool divide(std::size_t id) {
    std::size_t axis = 0;
    {
      const Rect& r = rects_[id];
      for (std::size_t i = 1; i < r.t.size(); ++i)
        if (r.t[i] < r.t[axis]) axis = i;
      if (r.t[axis] >= kMaxDepth) return false;
    }
    double delta = std::pow(3.0, -static_cast<double>(rects_[id].t[axis] + 1));

    for (int side = -1; side <= 1; side += 2) {
      Rect child;
      child.c = rects_[id].c;
      child.c[axis] += side * delta;
      child.t = rects_[id].t;
      child.t[axis] = static_cast<std::uint8_t>(child.t[axis] + 1);
      child.f = clamped(driver_.eval_f(denorm(child.c)));
      child.mind = *std::min_element(child.t.begin(), child.t.end());
      rects_.push_back(std::move(child));
    }
    Rect& r = rects_[id];
    r.t[axis] = static_cast<std::uint8_t>(r.t[axis] + 1);
    r.mind = *std::min_element(r.t.begin(), r.t.end());
    return true;
  }

  const ObjectiveProblem& problem_;
  const OptimiserSpec& spec_;
  EvalDriver& driver_;
  std::vector<Rect> rects_;
};

inline RunReport run_direct(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  EvalDriver driver(problem, spec);
  bool converged = false;
  try {
    DirectSearch search(problem, spec, driver);
    converged = search.run();
  } catch (const EvalDriver::Exhausted&) {
  }
  return driver.finish(converged);
}

}  // namespace detail
}  // namespace sigmin

#endif
