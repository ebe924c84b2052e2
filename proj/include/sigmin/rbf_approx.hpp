#ifndef SIGMIN_RBF_APPROX_HPP
#define SIGMIN_RBF_APPROX_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sigmin/bicgstab.hpp"
#include "sigmin/kdtree.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/signal.hpp"
#include "sigmin/sparse_csr.hpp"

namespace sigmin {

// Least-squares approximation of a sampled signal by n radial basis
// functions phi(s) = exp(-s) centred at the 2n-dimensional variable vector.
// Counters are atomic so concurrent evaluations of distinct problems (or
// the same problem from a driver) stay consistent.
struct RbfProblem {
  Signal signal;
  std::size_t n_centres = 0;
  std::size_t k = 0;  // neighbours kept per Gram row
  double lambda = 1e-12;
  Domain bounds;
  int threads = 1;
  mutable std::atomic<std::uint64_t> eval_count{0};
  mutable std::atomic<std::uint64_t> solver_failures{0};

  RbfProblem(Signal sig, std::size_t n, Domain dom = {}, std::size_t neighbours = 0,
             double reg = 1e-12)
      : signal(std::move(sig)), n_centres(n), k(neighbours), lambda(reg), bounds(dom) {
    signal.check();
    if (n_centres == 0 || n_centres > signal.size())
      throw std::invalid_argument("rbf problem: need 1 <= n_centres <= sample count");
    if (k == 0) k = std::min<std::size_t>(n_centres, 32);
    if (k > n_centres) throw std::invalid_argument("rbf problem: k exceeds centre count");
    if (lambda <= 0.0) throw std::invalid_argument("rbf problem: lambda must be positive");
    if (bounds.xlo >= bounds.xhi || bounds.ylo >= bounds.yhi)
      throw std::invalid_argument("rbf problem: empty bounds");
  }

  RbfProblem(const RbfProblem&) = delete;
  RbfProblem& operator=(const RbfProblem&) = delete;

  std::size_t dim() const { return 2 * n_centres; }

  std::vector<double> lower_bounds() const {
    std::vector<double> lo(dim());
    for (std::size_t j = 0; j < n_centres; ++j) {
      lo[2 * j] = bounds.xlo;
      lo[2 * j + 1] = bounds.ylo;
    }
    return lo;
  }

  std::vector<double> upper_bounds() const {
    std::vector<double> hi(dim());
    for (std::size_t j = 0; j < n_centres; ++j) {
      hi[2 * j] = bounds.xhi;
      hi[2 * j + 1] = bounds.yhi;
    }
    return hi;
  }
};

// Sparse Gram matrix: row i holds exp(-dist) for the k centres nearest to
// sample i, zero elsewhere. Centres are the flat (x0, y0, x1, y1, ...)
// layout. All kept entries are in (0, 1].
inline SparseMatrixCSR assemble_gram(const std::vector<double>& qx,
                                     const std::vector<double>& qy,
                                     const std::vector<double>& mu, std::size_t k,
                                     int threads = 1) {
  if (qx.size() != qy.size())
    throw std::invalid_argument("assemble_gram: coordinate lengths differ");
  if (mu.empty() || mu.size() % 2 != 0)
    throw std::invalid_argument("assemble_gram: centre vector length must be even");
  std::size_t m = qx.size();
  std::size_t n = mu.size() / 2;
  if (k == 0 || k > n)
    throw std::invalid_argument("assemble_gram: need 1 <= k <= centre count");

  std::vector<double> cx(n), cy(n);
  for (std::size_t j = 0; j < n; ++j) {
    cx[j] = mu[2 * j];
    cy[j] = mu[2 * j + 1];
  }
  KdTree tree(cx, cy);
  std::vector<std::size_t> nearest = tree.knn_batch(qx, qy, k, threads);

  SparseMatrixCSR phi;
  phi.rows = m;
  phi.cols = n;
  phi.row_ptr.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) phi.row_ptr[i] = i * k;
  phi.col_idx.resize(m * k);
  phi.values.resize(m * k);
  parallel_for_blocks(m, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> cols(k);
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = 0; j < k; ++j) cols[j] = nearest[i * k + j];
      std::sort(cols.begin(), cols.end());
      for (std::size_t j = 0; j < k; ++j) {
        std::size_t c = cols[j];
        double dx = qx[i] - cx[c], dy = qy[i] - cy[c];
        phi.col_idx[i * k + j] = c;
        phi.values[i * k + j] = std::exp(-std::sqrt(dx * dx + dy * dy));
      }
    }
  });
  return phi;
}

struct CoefficientSolve {
  std::vector<double> beta;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

// Regularised normal equations (Phi^T Phi + lambda I) beta = Phi^T f,
// solved with point-Jacobi BiCGSTAB.
inline CoefficientSolve solve_coefficients(const SparseMatrixCSR& phi,
                                           const std::vector<double>& f, double lambda,
                                           double tol, std::size_t maxit,
                                           int threads = 1) {
  if (f.size() != phi.rows)
    throw std::invalid_argument("solve_coefficients: signal length mismatch");
  if (lambda <= 0.0)
    throw std::invalid_argument("solve_coefficients: lambda must be positive");
  SparseMatrixCSR phi_t = sparse_transpose(phi, threads);
  SparseMatrixCSR normal = matrix_shift(sparse_matmat(phi_t, phi, threads), lambda);
  std::vector<double> rhs = sparse_matvec(phi_t, f, threads);
  JacobiPreconditioner precond(normal);
  SolveResult r = bicgstab_solve(normal, rhs, &precond, tol, maxit, threads);
  return {std::move(r.x), r.iterations, r.final_residual, r.converged};
}

// Approximant Phi(mu) beta sampled on the problem's domain points.
inline Signal reconstruct(const std::vector<double>& mu, const std::vector<double>& beta,
                          const RbfProblem& problem) {
  if (mu.size() != problem.dim())
    throw std::invalid_argument("reconstruct: variable vector length mismatch");
  if (beta.size() != problem.n_centres)
    throw std::invalid_argument("reconstruct: coefficient length mismatch");
  SparseMatrixCSR phi = assemble_gram(problem.signal.xs, problem.signal.ys, mu, problem.k,
                                      problem.threads);
  Signal out;
  out.xs = problem.signal.xs;
  out.ys = problem.signal.ys;
  out.values = sparse_matvec(phi, beta, problem.threads);
  return out;
}

// One evaluation of the approximation functional: assemble the Gram matrix
// for these centres, solve for the coefficients, and return the unsquared
// misfit ||f - Phi beta||_2. Solver trouble (breakdown or stagnation) yields
// +inf so derivative-free searches simply step around the bad region.
inline double approx_objective(const std::vector<double>& mu, const RbfProblem& problem) {
  if (mu.size() != problem.dim())
    throw std::invalid_argument("approx_objective: variable vector length mismatch");
  problem.eval_count.fetch_add(1, std::memory_order_relaxed);
  for (double v : mu)
    if (!std::isfinite(v)) {
      problem.solver_failures.fetch_add(1, std::memory_order_relaxed);
      return std::numeric_limits<double>::infinity();
    }
  try {
    SparseMatrixCSR phi = assemble_gram(problem.signal.xs, problem.signal.ys, mu,
                                        problem.k, problem.threads);
    CoefficientSolve sol =
        solve_coefficients(phi, problem.signal.values, problem.lambda, 1e-8,
                           10 * problem.signal.size(), problem.threads);
    if (!sol.converged) {
      problem.solver_failures.fetch_add(1, std::memory_order_relaxed);
      return std::numeric_limits<double>::infinity();
    }
    std::vector<double> fhat = sparse_matvec(phi, sol.beta, problem.threads);
    std::vector<double> diff = vec_sub(problem.signal.values, fhat, problem.threads);
    return norm2(diff, problem.threads);
  } catch (const solver_breakdown&) {
    problem.solver_failures.fetch_add(1, std::memory_order_relaxed);
    return std::numeric_limits<double>::infinity();
  }
}

// Componentwise clamp of a flat centre vector into the rectangular domain.
inline std::vector<double> project_to_bounds(const std::vector<double>& mu,
                                             const Domain& bounds) {
  if (mu.size() % 2 != 0)
    throw std::invalid_argument("project_to_bounds: variable vector length must be even");
  std::vector<double> out(mu.size());
  for (std::size_t j = 0; j + 1 < mu.size(); j += 2) {
    out[j] = std::clamp(mu[j], bounds.xlo, bounds.xhi);
    out[j + 1] = std::clamp(mu[j + 1], bounds.ylo, bounds.yhi);
  }
  return out;
}

}  // namespace sigmin

#endif
