#ifndef SIGMIN_SVD_HPP
#define SIGMIN_SVD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigmin/dense_matrix.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/rng.hpp"
#include "sigmin/sparse_csr.hpp"

namespace sigmin {

struct svd_error : std::runtime_error {
  std::size_t converged_count;
  svd_error(const std::string& msg, std::size_t count)
      : std::runtime_error(msg), converged_count(count) {}
};

// Truncated factorisation A ~ U diag(S) V^T with residual_sq equal to the
// squared Frobenius mass outside the retained triples.
struct SvdFactors {
  DenseMatrix u;          // m x nsv
  std::vector<double> s;  // descending
  DenseMatrix v;          // n x nsv
  double residual_sq = 0.0;
};

namespace detail {

// Householder tridiagonalisation with accumulation (EISPACK tred2 layout).
inline void tred2(DenseMatrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows;
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = v.at(n - 1, j);
  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v.at(i - 1, j);
        v.at(i, j) = 0.0;
        v.at(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v.at(j, i) = f;
        g = e[j] + v.at(j, j) * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += v.at(k, j) * d[k];
          e[k] += v.at(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k < i; ++k) v.at(k, j) -= f * e[k] + g * d[k];
        d[j] = v.at(i - 1, j);
        v.at(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    v.at(n - 1, i) = v.at(i, i);
    v.at(i, i) = 1.0;
    double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v.at(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v.at(k, i + 1) * v.at(k, j);
        for (std::size_t k = 0; k <= i; ++k) v.at(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v.at(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v.at(n - 1, j);
    v.at(n - 1, j) = 0.0;
  }
  v.at(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Symmetric tridiagonal QL with implicit shifts (EISPACK tql2 layout).
inline void tql2(DenseMatrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f = 0.0, tst1 = 0.0;
  const double eps = std::pow(2.0, -52.0);
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) throw std::runtime_error("tql2: no convergence");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          for (std::size_t k = 0; k < n; ++k) {
            h = v.at(k, ii + 1);
            v.at(k, ii + 1) = s * v.at(k, ii) + c * h;
            v.at(k, ii) = c * v.at(k, ii) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace detail

// Dense symmetric eigendecomposition by Householder reduction followed by
// tridiagonal QL. Eigenvalues descend; eigenvectors are the matching columns.
inline void symmetric_eigen(const DenseMatrix& a, std::vector<double>& evals,
                            DenseMatrix& evecs) {
  if (a.rows != a.cols) throw std::invalid_argument("symmetric_eigen: not square");
  if (a.rows == 0) throw std::invalid_argument("symmetric_eigen: empty matrix");
  evecs = a;
  std::vector<double> e;
  detail::tred2(evecs, evals, e);
  detail::tql2(evecs, evals, e);
  const std::size_t n = a.rows;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&evals](std::size_t i, std::size_t j) { return evals[i] > evals[j]; });
  std::vector<double> sd(n);
  DenseMatrix sv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sd[j] = evals[order[j]];
    for (std::size_t i = 0; i < n; ++i) sv.at(i, j) = evecs.at(i, order[j]);
  }
  evals = std::move(sd);
  evecs = std::move(sv);
}

namespace detail {

// Transpose-capable matvec pair used by the iterative factorisations.
struct SparseOp {
  const SparseMatrixCSR& a;
  SparseMatrixCSR at;
  int threads;
  SparseOp(const SparseMatrixCSR& m, int t) : a(m), at(sparse_transpose(m)), threads(t) {}
  std::size_t rows() const { return a.rows; }
  std::size_t cols() const { return a.cols; }
  std::vector<double> apply(const std::vector<double>& x) const {
    return sparse_matvec(a, x, threads);
  }
  std::vector<double> apply_t(const std::vector<double>& x) const {
    return sparse_matvec(at, x, threads);
  }
  double frob_sq() const { return dot(a.values, a.values, threads); }
};

struct DenseOp {
  const DenseMatrix& a;
  int threads;
  DenseOp(const DenseMatrix& m, int t) : a(m), threads(t) {}
  std::size_t rows() const { return a.rows; }
  std::size_t cols() const { return a.cols; }
  std::vector<double> apply(const std::vector<double>& x) const {
    return dense_matvec(a, x, threads);
  }
  std::vector<double> apply_t(const std::vector<double>& x) const {
    return dense_matvec_transposed(a, x, threads);
  }
  double frob_sq() const { return dot(a.data, a.data, threads); }
};

inline SparseOp make_op(const SparseMatrixCSR& a, int threads) { return SparseOp(a, threads); }
inline DenseOp make_op(const DenseMatrix& a, int threads) { return DenseOp(a, threads); }

using Cols = std::vector<std::vector<double>>;

// Two-pass modified Gram-Schmidt of x against the given columns.
inline void mgs_against(const Cols& basis, std::vector<double>& x, int threads) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) {
      double c = dot(q, x, threads);
      axpy(-c, q, x);
    }
}

inline std::vector<double> seeded_unit_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

// Fresh unit vector orthogonal to the basis, for invariant-subspace restarts.
inline std::vector<double> fresh_orthonormal(const Cols& basis, std::size_t n,
                                             std::uint64_t seed, int threads) {
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    std::vector<double> v = seeded_unit_vector(n, seed + attempt);
    mgs_against(basis, v, threads);
    double nv = norm2(v, threads);
    if (nv > 1e-8) {
      for (double& x : v) x /= nv;
      return v;
    }
  }
  throw std::runtime_error("svd: could not extend orthonormal basis");
}

inline void mgs_orthonormalize(Cols& cols, int threads) {
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) {
        double c = dot(cols[i], cols[j], threads);
        axpy(-c, cols[i], cols[j]);
      }
    double nv = norm2(cols[j], threads);
    if (nv > 1e-14)
      for (double& x : cols[j]) x /= nv;
  }
}

// Flip each triple so that the largest-magnitude entry of u is positive.
inline void fix_signs(DenseMatrix& u, DenseMatrix& v) {
  for (std::size_t j = 0; j < u.cols; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < u.rows; ++i) {
      double m = std::abs(u.at(i, j));
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    if (u.at(arg, j) < 0.0) {
      for (std::size_t i = 0; i < u.rows; ++i) u.at(i, j) = -u.at(i, j);
      for (std::size_t i = 0; i < v.rows; ++i) v.at(i, j) = -v.at(i, j);
    }
  }
}

}  // namespace detail

// Truncated SVD via Lanczos tridiagonalisation of A^T A applied as paired
// matvecs (the cross matrix is never formed). Thick restart keeps the best
// Ritz vectors when the basis fills. The left factor is recovered as
// A v_i / s_i and polished by modified Gram-Schmidt.
template <class Mat>
SvdFactors svd_cross(const Mat& a, std::size_t nsv, double tol = 1e-6, int threads = 1) {
  auto op = detail::make_op(a, threads);
  const std::size_t m = op.rows(), n = op.cols();
  if (nsv == 0 || nsv > std::min(m, n))
    throw std::invalid_argument("svd_cross: nsv must be in [1, min(m, n)]");
  if (tol <= 0.0) throw std::invalid_argument("svd_cross: tolerance must be positive");

  const std::size_t maxbasis = std::min(n, 2 * nsv + 16);
  const std::size_t budget = 100 * nsv;  // matvec pairs
  std::size_t used = 0;

  detail::Cols basis;  // Lanczos vectors in R^n
  basis.reserve(maxbasis + 1);
  DenseMatrix proj(maxbasis, maxbasis);  // projected symmetric matrix
  std::size_t k = 0;                     // filled basis columns
  std::size_t locked = 0;                // leading Ritz block after restart
  std::vector<double> border;            // coupling of locked block to column `locked`
  basis.push_back(detail::seeded_unit_vector(n, 0x5349474dULL));

  auto apply_cross = [&](const std::vector<double>& x) {
    ++used;
    return op.apply_t(op.apply(x));
  };

  std::vector<double> theta;  // current Ritz values (descending)
  DenseMatrix y;              // eigenvectors of the projected matrix
  std::vector<double> resid;  // residual bounds per Ritz pair
  double beta_last = 0.0;
  std::size_t conv_count = 0;
  bool extended = false;  // at least one step since the last restart

  while (true) {
    // Extend the Lanczos basis until it is full or the budget runs out.
    while (k < maxbasis && used < budget) {
      extended = true;
      std::vector<double>& vk = basis[k];
      std::vector<double> w = apply_cross(vk);
      double alpha = dot(vk, w, threads);
      proj.at(k, k) = alpha;
      if (k == locked && locked > 0)
        for (std::size_t i = 0; i < locked; ++i) {
          proj.at(i, k) = border[i];
          proj.at(k, i) = border[i];
        }
      detail::mgs_against(basis, w, threads);
      double beta = norm2(w, threads);
      ++k;
      if (beta > 1e-13) {
        beta_last = beta;
        for (double& x : w) x /= beta;
        basis.push_back(w);
        if (k < maxbasis) {
          proj.at(k - 1, k) = beta;
          proj.at(k, k - 1) = beta;
        }
      } else {
        // Invariant subspace: continue from a fresh orthogonal direction
        // when the space is not yet exhausted.
        beta_last = 0.0;
        if (k < maxbasis) {
          proj.at(k - 1, k) = 0.0;
          proj.at(k, k - 1) = 0.0;
          basis.push_back(detail::fresh_orthonormal(basis, n, 0xabcdULL + k, threads));
        }
      }
    }

    // Ritz extraction from the k x k projected matrix.
    DenseMatrix sub(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) sub.at(i, j) = proj.at(i, j);
    symmetric_eigen(sub, theta, y);
    double s1 = std::sqrt(std::max(theta[0], 0.0));
    conv_count = 0;
    resid.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      resid[i] = beta_last * std::abs(y.at(k - 1, i));
      double si = std::sqrt(std::max(theta[i], 0.0));
      double denom = std::max(si, 1e-8 * std::max(s1, 1e-300));
      if (i < nsv && resid[i] / denom <= tol * std::max(s1, 1e-300)) ++conv_count;
    }
    bool all = true;
    for (std::size_t i = 0; i < nsv; ++i) {
      double si = std::sqrt(std::max(theta[i], 0.0));
      double denom = std::max(si, 1e-8 * std::max(s1, 1e-300));
      if (resid[i] / denom > tol * std::max(s1, 1e-300)) {
        all = false;
        break;
      }
    }
    if ((all && (extended || locked == 0)) || k >= n) break;
    if (used >= budget)
      throw svd_error("svd_cross: matvec budget exhausted with " +
                          std::to_string(conv_count) + " of " + std::to_string(nsv) +
                          " values converged",
                      conv_count);

    // Thick restart: keep the leading Ritz vectors plus the continuation.
    std::size_t keep = std::min(nsv + 8, k - 1);
    detail::Cols ritz(keep, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < keep; ++j)
      for (std::size_t i = 0; i < k; ++i) axpy(y.at(i, j), basis[i], ritz[j]);
    detail::mgs_orthonormalize(ritz, threads);
    std::vector<double> cont;
    bool have_cont = basis.size() > k;
    if (have_cont) cont = basis[k];
    border.assign(keep, 0.0);
    for (std::size_t j = 0; j < keep; ++j) border[j] = beta_last * y.at(k - 1, j);
    basis = std::move(ritz);
    if (have_cont) {
      detail::mgs_against(basis, cont, threads);
      double cn = norm2(cont, threads);
      if (cn > 1e-10) {
        for (double& x : cont) x /= cn;
        basis.push_back(cont);
      } else {
        basis.push_back(detail::fresh_orthonormal(basis, n, 0x1357ULL, threads));
        border.assign(keep, 0.0);
      }
    } else {
      basis.push_back(detail::fresh_orthonormal(basis, n, 0x2468ULL, threads));
      border.assign(keep, 0.0);
    }
    proj = DenseMatrix(maxbasis, maxbasis);
    for (std::size_t i = 0; i < keep; ++i) proj.at(i, i) = theta[i];
    locked = keep;
    k = keep;
    beta_last = 0.0;
    extended = false;
  }

  SvdFactors out;
  out.s.resize(nsv);
  out.v = DenseMatrix(n, nsv);
  out.u = DenseMatrix(m, nsv);
  double s1 = std::sqrt(std::max(theta[0], 0.0));
  detail::Cols vcols(nsv, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < nsv; ++j)
    for (std::size_t i = 0; i < k; ++i) axpy(y.at(i, j), basis[i], vcols[j]);
  detail::mgs_orthonormalize(vcols, threads);
  detail::Cols ucols;
  ucols.reserve(nsv);
  // Eigenvalues of the squared problem below the floating-point noise floor
  // correspond to exact zeros of A.
  double theta_floor =
      static_cast<double>(k) * std::pow(2.0, -52.0) * std::max(theta[0], 0.0);
  for (std::size_t j = 0; j < nsv; ++j) {
    out.s[j] = theta[j] <= theta_floor ? 0.0 : std::sqrt(std::max(theta[j], 0.0));
    std::vector<double> av = op.apply(vcols[j]);
    double avn = norm2(av, threads);
    if (avn > 1e-12 * std::max(s1, 1e-300)) {
      for (double& x : av) x /= avn;
      ucols.push_back(std::move(av));
    } else {
      ucols.push_back(detail::fresh_orthonormal(ucols, m, 0x77aaULL + j, threads));
      out.s[j] = 0.0;
    }
  }
  detail::mgs_orthonormalize(ucols, threads);
  for (std::size_t j = 0; j < nsv; ++j)
    for (std::size_t i = 0; i < n; ++i) out.v.at(i, j) = vcols[j][i];
  for (std::size_t j = 0; j < nsv; ++j)
    for (std::size_t i = 0; i < m; ++i) out.u.at(i, j) = ucols[j][i];
  detail::fix_signs(out.u, out.v);
  double ssum = 0.0;
  for (double s : out.s) ssum += s * s;
  out.residual_sq = std::max(0.0, op.frob_sq() - ssum);
  return out;
}

// Truncated SVD via Golub-Kahan bidiagonalisation with one-sided (right)
// full reorthogonalisation and thick restart when the basis reaches
// 2 nsv + 16 columns. The projected problem is solved through the symmetric
// eigendecomposition of B^T B.
template <class Mat>
SvdFactors svd_lanczos(const Mat& a, std::size_t nsv, double tol = 1e-6, int threads = 1) {
  auto op = detail::make_op(a, threads);
  const std::size_t m = op.rows(), n = op.cols();
  if (nsv == 0 || nsv > std::min(m, n))
    throw std::invalid_argument("svd_lanczos: nsv must be in [1, min(m, n)]");
  if (tol <= 0.0) throw std::invalid_argument("svd_lanczos: tolerance must be positive");

  const std::size_t maxbasis = std::min({m, n, 2 * nsv + 16});
  const std::size_t budget = 100 * nsv;  // matvec pairs
  std::size_t used = 0;

  detail::Cols p;         // left Lanczos vectors, R^m
  detail::Cols q;         // right Lanczos vectors, R^n
  DenseMatrix b(maxbasis, maxbasis);  // projected matrix (upper arrow + bidiagonal)
  std::size_t k = 0;
  std::size_t locked = 0;
  std::vector<double> rho;  // locked-block coupling in column `locked`
  q.push_back(detail::seeded_unit_vector(n, 0x4c414eULL));

  std::vector<double> svals;
  DenseMatrix yv, yu;
  double beta_last = 0.0;
  std::size_t conv_count = 0;
  bool extended = false;

  auto small_svd = [&](std::size_t dim) {
    // SVD of the leading dim x dim block of b through B^T B.
    DenseMatrix bt(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) bt.at(i, j) = b.at(i, j);
    DenseMatrix gram(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < dim; ++t) s += bt.at(t, i) * bt.at(t, j);
        gram.at(i, j) = s;
      }
    std::vector<double> lam;
    symmetric_eigen(gram, lam, yv);
    svals.assign(dim, 0.0);
    yu = DenseMatrix(dim, dim);
    double top = std::sqrt(std::max(lam[0], 0.0));
    double lam_floor =
        static_cast<double>(dim) * std::pow(2.0, -52.0) * std::max(lam[0], 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
      svals[j] = lam[j] <= lam_floor ? 0.0 : std::sqrt(std::max(lam[j], 0.0));
      std::vector<double> by(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t t = 0; t < dim; ++t) by[i] += bt.at(i, t) * yv.at(t, j);
      double nb = 0.0;
      for (double x : by) nb += x * x;
      nb = std::sqrt(nb);
      if (nb > 1e-12 * std::max(top, 1e-300)) {
        for (std::size_t i = 0; i < dim; ++i) yu.at(i, j) = by[i] / nb;
      } else {
        // Zero singular value: complete with a canonical direction made
        // orthogonal to the previous left vectors.
        std::vector<double> cand(dim, 0.0);
        for (std::size_t pick = 0; pick < dim; ++pick) {
          std::fill(cand.begin(), cand.end(), 0.0);
          cand[(j + pick) % dim] = 1.0;
          for (std::size_t jj = 0; jj < j; ++jj) {
            double c = 0.0;
            for (std::size_t i = 0; i < dim; ++i) c += yu.at(i, jj) * cand[i];
            for (std::size_t i = 0; i < dim; ++i) cand[i] -= c * yu.at(i, jj);
          }
          double cn = 0.0;
          for (double x : cand) cn += x * x;
          cn = std::sqrt(cn);
          if (cn > 1e-6) {
            for (std::size_t i = 0; i < dim; ++i) yu.at(i, j) = cand[i] / cn;
            break;
          }
        }
      }
    }
  };

  while (true) {
    while (k < maxbasis && used < budget) {
      extended = true;
      // Left step: w = A q_k minus the projected part.
      ++used;
      std::vector<double> w = op.apply(q[k]);
      if (k == locked && locked > 0) {
        for (std::size_t i = 0; i < locked; ++i) axpy(-rho[i], p[i], w);
      } else if (k > 0) {
        axpy(-beta_last, p[k - 1], w);
      }
      double alpha = norm2(w, threads);
      if (alpha > 1e-13 * std::max(1.0, norm2(q[k], threads))) {
        for (double& x : w) x /= alpha;
      } else {
        alpha = 0.0;
        w = detail::fresh_orthonormal(p, m, 0x9e37ULL + k, threads);
      }
      p.push_back(w);
      if (k == locked && locked > 0)
        for (std::size_t i = 0; i < locked; ++i) b.at(i, k) = rho[i];
      b.at(k, k) = alpha;
      // Right step: g = A^T p_k - alpha q_k, fully reorthogonalised.
      std::vector<double> g = op.apply_t(p[k]);
      axpy(-alpha, q[k], g);
      detail::mgs_against(q, g, threads);
      double beta = norm2(g, threads);
      ++k;
      if (beta > 1e-13) {
        for (double& x : g) x /= beta;
        q.push_back(g);
        beta_last = beta;
        if (k < maxbasis) {
          b.at(k - 1, k) = beta;
        }
      } else {
        beta_last = 0.0;
        if (k < maxbasis) {
          q.push_back(detail::fresh_orthonormal(q, n, 0x5bd1ULL + k, threads));
          b.at(k - 1, k) = 0.0;
        }
      }
    }

    small_svd(k);
    double s1 = std::max(svals.empty() ? 0.0 : svals[0], 1e-300);
    conv_count = 0;
    bool all = true;
    for (std::size_t i = 0; i < nsv && i < k; ++i) {
      double r = beta_last * std::abs(yu.at(k - 1, i));
      if (r <= tol * s1)
        ++conv_count;
      else
        all = false;
    }
    if (k < nsv) all = false;
    if ((all && (extended || locked == 0)) || k >= std::min(m, n)) break;
    if (used >= budget)
      throw svd_error("svd_lanczos: matvec budget exhausted with " +
                          std::to_string(conv_count) + " of " + std::to_string(nsv) +
                          " values converged",
                      conv_count);

    // Thick restart.
    std::size_t keep = std::min(nsv + 8, k - 1);
    detail::Cols pu(keep, std::vector<double>(m, 0.0));
    detail::Cols qv(keep, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < keep; ++j)
      for (std::size_t i = 0; i < k; ++i) {
        axpy(yu.at(i, j), p[i], pu[j]);
        axpy(yv.at(i, j), q[i], qv[j]);
      }
    detail::mgs_orthonormalize(pu, threads);
    detail::mgs_orthonormalize(qv, threads);
    rho.assign(keep, 0.0);
    for (std::size_t j = 0; j < keep; ++j) rho[j] = beta_last * yu.at(k - 1, j);
    bool have_cont = q.size() > k;
    std::vector<double> cont;
    if (have_cont) cont = q[k];
    p = std::move(pu);
    q = std::move(qv);
    double cn = 0.0;
    if (have_cont) {
      detail::mgs_against(q, cont, threads);
      cn = norm2(cont, threads);
    }
    if (have_cont && cn > 1e-10) {
      for (double& x : cont) x /= cn;
      q.push_back(cont);
    } else {
      q.push_back(detail::fresh_orthonormal(q, n, 0xfeedULL, threads));
      rho.assign(keep, 0.0);
    }
    b = DenseMatrix(maxbasis, maxbasis);
    for (std::size_t i = 0; i < keep; ++i) b.at(i, i) = svals[i];
    locked = keep;
    k = keep;
    beta_last = 0.0;
    extended = false;
  }

  SvdFactors out;
  std::size_t dim = k;
  out.s.assign(nsv, 0.0);
  out.u = DenseMatrix(m, nsv);
  out.v = DenseMatrix(n, nsv);
  detail::Cols ucols(nsv, std::vector<double>(m, 0.0));
  detail::Cols vcols(nsv, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < nsv; ++j) {
    out.s[j] = svals[j];
    for (std::size_t i = 0; i < dim; ++i) {
      axpy(yu.at(i, j), p[i], ucols[j]);
      axpy(yv.at(i, j), q[i], vcols[j]);
    }
  }
  detail::mgs_orthonormalize(ucols, threads);
  detail::mgs_orthonormalize(vcols, threads);
  for (std::size_t j = 0; j < nsv; ++j) {
    for (std::size_t i = 0; i < m; ++i) out.u.at(i, j) = ucols[j][i];
    for (std::size_t i = 0; i < n; ++i) out.v.at(i, j) = vcols[j][i];
  }
  detail::fix_signs(out.u, out.v);
  double ssum = 0.0;
  for (double s : out.s) ssum += s * s;
  out.residual_sq = std::max(0.0, op.frob_sq() - ssum);
  return out;
}

}  // namespace sigmin

#endif
