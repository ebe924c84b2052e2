#ifndef SIGMIN_SVD_DENOISE_HPP
#define SIGMIN_SVD_DENOISE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sigmin/dense_matrix.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/sparse_csr.hpp"
#include "sigmin/svd.hpp"

namespace sigmin {

// Singular-value shrinkage denoising. The factorisation is computed once
// per problem; every objective evaluation only rebuilds the thresholded
// reconstruction. The strict constraint S - mu > 0 is tracked by a counter
// rather than enforced, so infeasible-path optimisers stay alive.
struct DenoiseProblem {
  DenseMatrix f;
  SvdFactors svd;
  double alpha = 0.0;
  double delta = 0.0;  // margin turning S - mu > 0 into a closed box
  int threads = 1;
  mutable std::atomic<std::uint64_t> eval_count{0};
  mutable std::atomic<std::uint64_t> threshold_violations{0};

  DenoiseProblem(DenseMatrix image, SvdFactors factors, double penalty,
                 double margin = 0.0)
      : f(std::move(image)), svd(std::move(factors)), alpha(penalty), delta(margin) {
    if (alpha < 0.0) throw std::invalid_argument("denoise problem: alpha must be >= 0");
    if (svd.s.empty() || svd.s[0] <= 0.0)
      throw std::invalid_argument("denoise problem: spectrum is empty or zero");
    if (svd.u.rows != f.rows || svd.v.rows != f.cols || svd.u.cols != svd.s.size() ||
        svd.v.cols != svd.s.size())
      throw std::invalid_argument("denoise problem: factor shapes do not match the image");
    if (delta <= 0.0) delta = 1e-9 * svd.s[0];
    // Every retained value must clear the margin or the feasible box
    // [0, S_i - delta] is empty; retain fewer values instead.
    if (svd.s.back() <= delta)
      throw std::invalid_argument(
          "denoise problem: retained spectrum does not clear the margin");
  }

  DenoiseProblem(const DenoiseProblem&) = delete;
  DenoiseProblem& operator=(const DenoiseProblem&) = delete;

  std::size_t rank() const { return svd.s.size(); }
};

namespace detail {

// U diag(S - mu) V^T as a staged sparse-dense then dense-dense product.
inline DenseMatrix thresholded_reconstruction(const std::vector<double>& mu,
                                              const DenoiseProblem& p) {
  std::size_t r = p.rank();
  SparseMatrixCSR shat;
  shat.rows = shat.cols = r;
  shat.row_ptr.resize(r + 1);
  shat.col_idx.resize(r);
  shat.values.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    shat.row_ptr[i] = i;
    shat.col_idx[i] = i;
    shat.values[i] = p.svd.s[i] - mu[i];
  }
  shat.row_ptr[r] = r;
  DenseMatrix vt = dense_transpose(p.svd.v, p.threads);
  DenseMatrix sv = sparse_dense_matmat(shat, vt, p.threads);
  return dense_matmat(p.svd.u, sv, p.threads);
}

}  // namespace detail

// Shrinkage functional: squared Frobenius misfit of the thresholded
// reconstruction plus alpha times the shrunk nuclear norm.
inline double denoise_objective(const std::vector<double>& mu, const DenoiseProblem& p) {
  if (mu.size() != p.rank())
    throw std::invalid_argument("denoise objective: variable length mismatch");
  p.eval_count.fetch_add(1, std::memory_order_relaxed);
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (p.svd.s[i] - mu[i] <= 0.0) {
      p.threshold_violations.fetch_add(1, std::memory_order_relaxed);
      break;
    }
  DenseMatrix fhat = detail::thresholded_reconstruction(mu, p);
  DenseMatrix diff = dense_sub(p.f, fhat, p.threads);
  double fro = frobenius_norm(diff, p.threads);
  double pen = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) pen += p.svd.s[i] - mu[i];
  return fro * fro + p.alpha * pen;
}

// Analytic gradient 2 mu_i - alpha. Exact because the residual f - U S V^T
// is orthogonal to the retained subspace, so the misfit splits into
// ||residual||^2 + sum mu_i^2.
inline std::vector<double> denoise_gradient(const std::vector<double>& mu,
                                            const DenoiseProblem& p) {
  if (mu.size() != p.rank())
    throw std::invalid_argument("denoise gradient: variable length mismatch");
  std::vector<double> g(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) g[i] = 2.0 * mu[i] - p.alpha;
  return g;
}

// Componentwise minimiser of the convex functional over the closed box.
inline std::vector<double> denoise_closed_form(const DenoiseProblem& p) {
  std::vector<double> mu(p.rank());
  for (std::size_t i = 0; i < mu.size(); ++i)
    mu[i] = std::clamp(0.5 * p.alpha, 0.0, p.svd.s[i] - p.delta);
  return mu;
}

// Box encoding of 0 <= mu_i <= S_i - delta.
inline std::pair<std::vector<double>, std::vector<double>> threshold_bounds(
    const DenoiseProblem& p) {
  std::vector<double> lo(p.rank(), 0.0), hi(p.rank());
  for (std::size_t i = 0; i < hi.size(); ++i) hi[i] = p.svd.s[i] - p.delta;
  return {std::move(lo), std::move(hi)};
}

inline DenseMatrix denoised_image(const std::vector<double>& mu, const DenoiseProblem& p) {
  if (mu.size() != p.rank())
    throw std::invalid_argument("denoised image: variable length mismatch");
  return detail::thresholded_reconstruction(mu, p);
}

}  // namespace sigmin

#endif
