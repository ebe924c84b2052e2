#ifndef SIGMIN_BICGSTAB_HPP
#define SIGMIN_BICGSTAB_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigmin/dense_matrix.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/sparse_csr.hpp"

namespace sigmin {

struct solver_breakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point Jacobi: apply() divides by the matrix diagonal.
struct JacobiPreconditioner {
  std::vector<double> inv_diag;

  explicit JacobiPreconditioner(const SparseMatrixCSR& a) {
    if (a.rows != a.cols)
      throw std::invalid_argument("jacobi preconditioner: matrix must be square");
    inv_diag.assign(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
      double d = 0.0;
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
        if (a.col_idx[p] == i) d = a.values[p];
      if (d == 0.0)
        throw std::invalid_argument("jacobi preconditioner: zero diagonal at row " +
                                    std::to_string(i));
      inv_diag[i] = 1.0 / d;
    }
  }

  explicit JacobiPreconditioner(const DenseMatrix& a) {
    if (a.rows != a.cols)
      throw std::invalid_argument("jacobi preconditioner: matrix must be square");
    inv_diag.assign(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
      double d = a.at(i, i);
      if (d == 0.0)
        throw std::invalid_argument("jacobi preconditioner: zero diagonal at row " +
                                    std::to_string(i));
      inv_diag[i] = 1.0 / d;
    }
  }

  std::vector<double> apply(const std::vector<double>& r) const {
    std::vector<double> z(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] * inv_diag[i];
    return z;
  }
};

struct SolveResult {
  std::vector<double> x;
  bool converged = false;
  std::size_t iterations = 0;
  double final_residual = 0.0;  // recomputed as ||b - A x|| at exit
};

namespace detail {
inline std::vector<double> apply_mat(const SparseMatrixCSR& a, const std::vector<double>& x,
                                     int threads) {
  return sparse_matvec(a, x, threads);
}
inline std::vector<double> apply_mat(const DenseMatrix& a, const std::vector<double>& x,
                                     int threads) {
  return dense_matvec(a, x, threads);
}
}  // namespace detail

// Right-preconditioned BiCGSTAB from a zero start. Convergence is only
// declared after the true residual ||b - A x|| passes the tolerance; a first
// scalar breakdown restarts from the current iterate, a second one throws.
// On iteration exhaustion the iterate with the best observed residual is
// returned with converged = false.
template <class Mat>
SolveResult bicgstab_solve(const Mat& a, const std::vector<double>& b,
                           const JacobiPreconditioner* precond, double tol, std::size_t maxit,
                           int threads = 1) {
  if (a.rows != a.cols) throw std::invalid_argument("bicgstab: matrix must be square");
  if (b.size() != a.rows) throw std::invalid_argument("bicgstab: rhs length mismatch");
  if (tol <= 0.0) throw std::invalid_argument("bicgstab: tolerance must be positive");
  const std::size_t n = b.size();
  SolveResult res;
  res.x.assign(n, 0.0);
  double bnorm = norm2(b, threads);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  const double target = tol * bnorm;
  const double tiny = 1e-300;

  std::vector<double> r = b;
  std::vector<double> rhat = r;
  std::vector<double> p(n, 0.0), v(n, 0.0);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  bool fresh = true;
  int restarts = 0;
  std::vector<double> best_x = res.x;
  double best_rnorm = bnorm;

  auto true_residual = [&](const std::vector<double>& x) {
    std::vector<double> ax = detail::apply_mat(a, x, threads);
    return vec_sub(b, ax, threads);
  };
  auto breakdown = [&](const char* where) {
    if (restarts >= 1)
      throw solver_breakdown(std::string("bicgstab: repeated breakdown (") + where + ")");
    ++restarts;
    r = true_residual(res.x);
    rhat = r;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    rho = alpha = omega = 1.0;
    fresh = true;
  };

  while (res.iterations < maxit) {
    ++res.iterations;
    double rho_new = dot(rhat, r, threads);
    if (std::abs(rho_new) < tiny) {
      breakdown("rho");
      continue;
    }
    if (fresh) {
      p = r;
      fresh = false;
    } else {
      double beta = (rho_new / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    std::vector<double> phat = precond ? precond->apply(p) : p;
    v = detail::apply_mat(a, phat, threads);
    double denom = dot(rhat, v, threads);
    if (std::abs(denom) < tiny) {
      breakdown("alpha");
      continue;
    }
    alpha = rho_new / denom;
    std::vector<double> s = r;
    axpy(-alpha, v, s);
    if (norm2(s, threads) <= target) {
      axpy(alpha, phat, res.x);
      std::vector<double> tr = true_residual(res.x);
      double trn = norm2(tr, threads);
      if (trn < best_rnorm) {
        best_rnorm = trn;
        best_x = res.x;
      }
      if (trn <= target) {
        res.converged = true;
        res.final_residual = trn;
        return res;
      }
      r = tr;
      rho = rho_new;
      continue;
    }
    std::vector<double> shat = precond ? precond->apply(s) : s;
    std::vector<double> t = detail::apply_mat(a, shat, threads);
    double tt = dot(t, t, threads);
    if (tt < tiny) {
      breakdown("omega-denominator");
      continue;
    }
    omega = dot(t, s, threads) / tt;
    if (std::abs(omega) < tiny) {
      breakdown("omega");
      continue;
    }
    axpy(alpha, phat, res.x);
    axpy(omega, shat, res.x);
    r = s;
    axpy(-omega, t, r);
    rho = rho_new;
    double rn = norm2(r, threads);
    if (rn < best_rnorm) {
      best_rnorm = rn;
      best_x = res.x;
    }
    if (rn <= target) {
      std::vector<double> tr = true_residual(res.x);
      double trn = norm2(tr, threads);
      if (trn <= target) {
        res.converged = true;
        res.final_residual = trn;
        return res;
      }
      r = tr;
    }
  }
  res.x = best_x;
  res.converged = false;
  res.final_residual = norm2(true_residual(res.x), threads);
  return res;
}

}  // namespace sigmin

#endif
