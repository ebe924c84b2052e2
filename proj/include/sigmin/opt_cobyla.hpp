#ifndef SIGMIN_OPT_COBYLA_HPP
#define SIGMIN_OPT_COBYLA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sigmin/optim.hpp"

namespace sigmin {
namespace detail {

// Dense two-phase simplex for min cost.z st rows.z <= rhs, 0 <= z, with
// Bland's rule throughout. Phase one minimises summed artificial
// infeasibility; when it cannot reach zero the returned point is the least
// infeasible one and feasible_model is false.
struct StepLp {
  std::vector<double> z;
  bool feasible_model = false;
};

inline StepLp solve_step_lp(const std::vector<std::vector<double>>& rows,
                            const std::vector<double>& rhs,
                            const std::vector<double>& cost, std::size_t nz) {
  const std::size_t m = rows.size();
  std::size_t na = 0;
  std::vector<int> art_of(m, -1);
  for (std::size_t i = 0; i < m; ++i)
    if (rhs[i] < 0.0) art_of[i] = static_cast<int>(na++);

  const std::size_t cols = nz + m + na;
  const std::size_t width = cols + 1;
  std::vector<double> tab((m + 1) * width, 0.0);
  std::vector<std::size_t> basis(m);
  std::vector<char> alive(cols, 1);

  for (std::size_t i = 0; i < m; ++i) {
    double sgn = rhs[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < nz; ++j) tab[i * width + j] = sgn * rows[i][j];
    tab[i * width + nz + i] = sgn;
    if (art_of[i] >= 0) {
      basis[i] = nz + m + static_cast<std::size_t>(art_of[i]);
      tab[i * width + basis[i]] = 1.0;
    } else {
      basis[i] = nz + i;
    }
    tab[i * width + cols] = sgn * rhs[i];
  }

  double* crow = &tab[m * width];
  auto pivot = [&](std::size_t l, std::size_t e) {
    double* prow = &tab[l * width];
    double inv = 1.0 / prow[e];
    for (std::size_t j = 0; j < width; ++j) prow[j] *= inv;
    prow[e] = 1.0;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == l) continue;
      double* row = &tab[i * width];
      double factor = row[e];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) row[j] -= factor * prow[j];
      row[e] = 0.0;
    }
    basis[l] = e;
  };

  auto run_simplex = [&]() {
    const std::size_t cap = 200 * (m + cols + 1);
    for (std::size_t iter = 0; iter < cap; ++iter) {
      std::size_t e = cols;
      for (std::size_t j = 0; j < cols; ++j)
        if (alive[j] && crow[j] < -1e-11) {
          e = j;
          break;
        }
      if (e == cols) return;
      std::size_t l = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        double aie = tab[i * width + e];
        if (aie <= 1e-11) continue;
        double ratio = tab[i * width + cols] / aie;
        if (ratio < best - 1e-12 ||
            (ratio <= best + 1e-12 && (l == m || basis[i] < basis[l]))) {
          best = ratio;
          l = i;
        }
      }
      if (l == m) return;  // unbounded; box rows normally prevent this
      pivot(l, e);
    }
  };

  StepLp out;
  if (na > 0) {
    for (std::size_t j = nz + m; j < cols; ++j) crow[j] = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      if (art_of[i] >= 0)
        for (std::size_t j = 0; j < width; ++j) crow[j] -= tab[i * width + j];
    run_simplex();
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(rhs[i]));
    out.feasible_model = -crow[cols] <= 1e-7 * scale;
    for (std::size_t j = nz + m; j < cols; ++j) alive[j] = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < nz + m) continue;
      for (std::size_t j = 0; j < nz + m; ++j)
        if (alive[j] && std::abs(tab[i * width + j]) > 1e-9) {
          pivot(i, j);
          break;
        }
    }
  } else {
    out.feasible_model = true;
  }

  if (out.feasible_model) {
    for (std::size_t j = 0; j < width; ++j) crow[j] = 0.0;
    for (std::size_t j = 0; j < nz; ++j) crow[j] = cost[j];
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] >= nz) continue;
      double c = cost[basis[i]];
      if (c == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j)
        crow[j] -= c * tab[i * width + j];
    }
    run_simplex();
  }

  out.z.assign(nz, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < nz) out.z[basis[i]] = tab[i * width + cols];
  return out;
}

// In-place LU with partial pivoting; false when a pivot collapses relative
// to the matrix scale (degenerate simplex geometry).
inline bool lu_factor_small(std::vector<double>& a, std::vector<std::size_t>& piv,
                            std::size_t n) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  piv.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
    if (std::abs(a[p * n + k]) < 1e-12 * scale) return false;
    piv[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
    double inv = 1.0 / a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = a[i * n + k] * inv;
      a[i * n + k] = f;
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  return true;
}

inline void lu_solve_small(const std::vector<double>& a,
                           const std::vector<std::size_t>& piv,
                           std::vector<double>& x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k)
    if (piv[k] != k) std::swap(x[k], x[piv[k]]);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= a[i * n + j] * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= a[i * n + j] * x[j];
    x[i] /= a[i * n + i];
  }
}

// Linear-approximation trust-region descent. A simplex of dim+1 points
// interpolates linear models of the objective and of every constraint band;
// each iteration solves a two-phase LP for the step inside an l-infinity
// trust box, with equality residuals handled as a pair of inequality bands.
// The region starts at a tenth of the widest bound and halves on failed
// progress until it reaches x_tol. A degenerate vertex geometry is rebuilt
// once; a second collapse ends the run unconverged.
class CobylaSearch {
 public:
  CobylaSearch(const ObjectiveProblem& problem, const OptimiserSpec& spec,
               EvalDriver& driver)
      : problem_(problem), spec_(spec), driver_(driver), n_(problem.dim) {}

  bool run() {
    rho_ = initial_radius();
    const double rho_end = spec_.x_tol;
    {
      Vertex v0;
      v0.x = problem_.start_point();
      clamp_into_box(v0.x);
      evaluate(v0);
      build_simplex(std::move(v0));
    }

    std::size_t reinits = 0;
    std::size_t no_improve = 0;
    while (true) {
      std::size_t b = best_vertex();
      std::swap(verts_[0], verts_[b]);

      std::vector<double> grad_f;
      std::vector<std::vector<double>> grad_g;
      if (!fit_models(grad_f, grad_g)) {
        if (++reinits > 1) return false;
        build_simplex(Vertex(verts_[0]));
        continue;
      }

      std::vector<double> d = solve_subproblem(grad_f, grad_g);
      double dlen = 0.0;
      for (double v : d) dlen = std::max(dlen, std::abs(v));

      Vertex cand;
      cand.x.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) cand.x[i] = verts_[0].x[i] + d[i];
      clamp_into_box(cand.x);
      evaluate(cand);

      double merit_best = merit(verts_[0]);
      if (cand.viol > problem_.constraint_tol &&
          cand.viol > 1.2 * verts_[0].viol && cand.f < verts_[0].f &&
          nu_ < 1e12)
        nu_ *= 2.0;

      std::size_t w = worst_vertex();
      if (merit(cand) < merit(verts_[w])) verts_[w] = cand;
      if (merit(cand) < merit_best)
        no_improve = 0;
      else
        ++no_improve;

      if (no_improve >= 2 || dlen < 0.5 * rho_) {
        rho_ *= 0.5;
        no_improve = 0;
        if (rho_ < rho_end) return true;
        build_simplex(Vertex(verts_[best_vertex()]));
      }
    }
  }

 private:
  struct Vertex {
    std::vector<double> x;
    double f = 0.0;
    double viol = 0.0;
    std::vector<double> residuals;
  };

  double initial_radius() const {
    if (problem_.bounded()) {
      double wmax = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        wmax = std::max(wmax, problem_.upper[i] - problem_.lower[i]);
      return 0.1 * wmax;
    }
    double s = 0.0;
    for (double v : problem_.start_point()) s = std::max(s, std::abs(v));
    return 0.1 * std::max(1.0, s);
  }

  void clamp_into_box(std::vector<double>& x) const {
    if (!problem_.bounded()) return;
    for (std::size_t i = 0; i < n_; ++i)
      x[i] = std::clamp(x[i], problem_.lower[i], problem_.upper[i]);
  }

  void evaluate(Vertex& v) {
    EvalDriver::Sample s = driver_.eval(v.x);
    v.f = std::isfinite(s.f) ? s.f : 1e300;
    v.residuals = std::move(s.residuals);
    v.viol = 0.0;
    for (double r : v.residuals)
      v.viol = std::max(v.viol, std::abs(r) - problem_.constraint_tol);
    v.viol = std::max(v.viol, 0.0);
  }

  double merit(const Vertex& v) const { return v.f + nu_ * v.viol; }

  std::size_t best_vertex() const {
    std::size_t b = 0;
    for (std::size_t k = 1; k < verts_.size(); ++k)
      if (merit(verts_[k]) < merit(verts_[b])) b = k;
    return b;
  }

  std::size_t worst_vertex() const {
    std::size_t w = 0;
    for (std::size_t k = 1; k < verts_.size(); ++k)
      if (merit(verts_[k]) > merit(verts_[w])) w = k;
    return w;
  }

  // The centre vertex arrives already evaluated; only the offsets cost
  // objective calls.
  void build_simplex(Vertex centre) {
    verts_.clear();
    verts_.push_back(std::move(centre));
    for (std::size_t i = 0; i < n_; ++i) {
      Vertex v;
      v.x = verts_[0].x;
      double up = rho_, down = rho_;
      if (problem_.bounded()) {
        up = std::min(up, problem_.upper[i] - v.x[i]);
        down = std::min(down, v.x[i] - problem_.lower[i]);
      }
      v.x[i] += up >= down ? up : -down;
      evaluate(v);
      verts_.push_back(std::move(v));
    }
  }

  // Interpolates gradients of the objective and of each band constraint
  // from the vertex offsets. False on degenerate geometry.
  bool fit_models(std::vector<double>& grad_f,
                  std::vector<std::vector<double>>& grad_g) {
    std::vector<double> e(n_ * n_);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t i = 0; i < n_; ++i)
        e[k * n_ + i] = verts_[k + 1].x[i] - verts_[0].x[i];
    std::vector<std::size_t> piv;
    if (!lu_factor_small(e, piv, n_)) return false;

    grad_f.assign(n_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) grad_f[k] = verts_[k + 1].f - verts_[0].f;
    lu_solve_small(e, piv, grad_f, n_);

    const std::size_t nr = verts_[0].residuals.size();
    grad_g.assign(nr, std::vector<double>(n_));
    for (std::size_t j = 0; j < nr; ++j) {
      for (std::size_t k = 0; k < n_; ++k)
        grad_g[j][k] = verts_[k + 1].residuals[j] - verts_[0].residuals[j];
      lu_solve_small(e, piv, grad_g[j], n_);
    }
    return true;
  }

  // Builds the step LP in shifted coordinates z = d + rho and returns d.
  std::vector<double> solve_subproblem(const std::vector<double>& grad_f,
                                       const std::vector<std::vector<double>>& grad_g) {
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    const double tol = problem_.constraint_tol;
    const Vertex& v0 = verts_[0];

    auto add_row = [&](const std::vector<double>& a, double bound) {
      // a.d <= bound becomes a.z <= bound + rho * sum(a).
      double shift = 0.0;
      for (double c : a) shift += c;
      rows.push_back(a);
      rhs.push_back(bound + rho_ * shift);
    };

    for (std::size_t j = 0; j < grad_g.size(); ++j) {
      double r0 = v0.residuals[j];
      add_row(grad_g[j], tol - r0);
      std::vector<double> neg(n_);
      for (std::size_t i = 0; i < n_; ++i) neg[i] = -grad_g[j][i];
      add_row(neg, tol + r0);
    }
    if (problem_.bounded()) {
      for (std::size_t i = 0; i < n_; ++i) {
        std::vector<double> a(n_, 0.0);
        a[i] = 1.0;
        add_row(a, problem_.upper[i] - v0.x[i]);
        a[i] = -1.0;
        add_row(a, v0.x[i] - problem_.lower[i]);
      }
    }
    for (std::size_t i = 0; i < n_; ++i) {
      std::vector<double> a(n_, 0.0);
      a[i] = 1.0;
      rows.push_back(a);
      rhs.push_back(2.0 * rho_);
    }

    StepLp lp = solve_step_lp(rows, rhs, grad_f, n_);
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = lp.z[i] - rho_;
    return d;
  }

  const ObjectiveProblem& problem_;
  const OptimiserSpec& spec_;
  EvalDriver& driver_;
  std::size_t n_;
  double rho_ = 0.0;
  double nu_ = 1.0;
  std::vector<Vertex> verts_;
};

inline RunReport run_cobyla(const ObjectiveProblem& problem, const OptimiserSpec& spec) {
  EvalDriver driver(problem, spec);
  bool converged = false;
  try {
    CobylaSearch search(problem, spec, driver);
    converged = search.run();
  } catch (const EvalDriver::Exhausted&) {
  }
  return driver.finish(converged);
}

}  // namespace detail
}  // namespace sigmin

#endif
