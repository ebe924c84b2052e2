#ifndef SIGMIN_GENERATORS_HPP
#define SIGMIN_GENERATORS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "sigmin/dense_matrix.hpp"
#include "sigmin/rng.hpp"
#include "sigmin/signal.hpp"
#include "sigmin/sparse_csr.hpp"

namespace sigmin {

enum class GridKind { Peaks, SineMix, Random };
enum class CurveKind { Circle, Heart };

inline double peaks_value(double x, double y) {
  double u = 6.0 * x - 3.0;
  double v = 6.0 * y - 3.0;
  double a = 3.0 * (1.0 - u) * (1.0 - u) * std::exp(-u * u - (v + 1.0) * (v + 1.0));
  double b = -10.0 * (u / 5.0 - u * u * u - std::pow(v, 5)) * std::exp(-u * u - v * v);
  double c = -std::exp(-(u + 1.0) * (u + 1.0) - v * v) / 3.0;
  return a + b + c;
}

// Regular grid sampling of [0,1]^2, row-major with x varying fastest.
inline Signal make_grid_signal(std::size_t side, GridKind kind, std::uint64_t seed = 0) {
  if (side < 2) throw std::invalid_argument("make_grid_signal: side must be at least 2");
  Signal sig;
  std::size_t n = side * side;
  sig.xs.reserve(n);
  sig.ys.reserve(n);
  sig.values.reserve(n);
  Rng rng(seed);
  double phases[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  if (kind == GridKind::SineMix)
    for (double& p : phases) p = rng.uniform(0.0, 6.283185307179586476925286766559);
  double step = 1.0 / static_cast<double>(side - 1);
  for (std::size_t i = 0; i < side; ++i) {
    double y = static_cast<double>(i) * step;
    for (std::size_t j = 0; j < side; ++j) {
      double x = static_cast<double>(j) * step;
      double v = 0.0;
      switch (kind) {
        case GridKind::Peaks:
          v = peaks_value(x, y);
          break;
        case GridKind::SineMix:
          for (int h = 1; h <= 4; ++h)
            v += std::sin(6.283185307179586476925286766559 * h * x + phases[h - 1]) *
                 std::sin(6.283185307179586476925286766559 * h * y + phases[h + 3]) /
                 static_cast<double>(h);
          break;
        case GridKind::Random:
          v = rng.uniform(-1.0, 1.0);
          break;
      }
      sig.xs.push_back(x);
      sig.ys.push_back(y);
      sig.values.push_back(v);
    }
  }
  return sig;
}

// 5-point Dirichlet Laplacian on a side x side grid, row-major ordering.
// Symmetric positive definite.
inline SparseMatrixCSR make_grid_laplacian(std::size_t side) {
  if (side < 1) throw std::invalid_argument("make_grid_laplacian: side must be positive");
  std::size_t n = side * side;
  SparseMatrixCSR a(n, n);
  a.col_idx.reserve(5 * n);
  a.values.reserve(5 * n);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      std::size_t r = i * side + j;
      if (i > 0) {
        a.col_idx.push_back(r - side);
        a.values.push_back(-1.0);
      }
      if (j > 0) {
        a.col_idx.push_back(r - 1);
        a.values.push_back(-1.0);
      }
      a.col_idx.push_back(r);
      a.values.push_back(4.0);
      if (j + 1 < side) {
        a.col_idx.push_back(r + 1);
        a.values.push_back(-1.0);
      }
      if (i + 1 < side) {
        a.col_idx.push_back(r + side);
        a.values.push_back(-1.0);
      }
      a.row_ptr[r + 1] = a.values.size();
    }
  }
  return a;
}

// Closed test curves inside [0,1]^2 with a seeded global phase offset.
inline CurvePoints sample_curve(CurveKind kind, std::size_t m, std::uint64_t seed = 0) {
  if (m < 8) throw std::invalid_argument("sample_curve: need at least 8 samples");
  Rng rng(seed);
  double phase = rng.uniform(0.0, 6.283185307179586476925286766559);
  CurvePoints curve;
  curve.xs.reserve(m);
  curve.ys.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    double t = phase + 6.283185307179586476925286766559 * static_cast<double>(i) /
                           static_cast<double>(m);
    double x, y;
    if (kind == CurveKind::Circle) {
      x = 0.5 + 0.35 * std::cos(t);
      y = 0.5 + 0.35 * std::sin(t);
    } else {
      double s = std::sin(t);
      x = 0.5 + 16.0 * s * s * s / 40.0;
      y = 0.5 + (13.0 * std::cos(t) - 5.0 * std::cos(2.0 * t) - 2.0 * std::cos(3.0 * t) -
                 std::cos(4.0 * t) + 2.5) /
                    40.0;
    }
    curve.xs.push_back(x);
    curve.ys.push_back(y);
  }
  return curve;
}

// Grid signal values as an image matrix, affinely rescaled to [0,1].
inline DenseMatrix make_test_image(std::size_t side, GridKind kind, std::uint64_t seed = 0) {
  Signal sig = make_grid_signal(side, kind, seed);
  DenseMatrix img(side, side);
  double lo = sig.values[0], hi = sig.values[0];
  for (double v : sig.values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  double span = hi - lo;
  if (span <= 0.0) span = 1.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = (sig.values[i] - lo) / span;
  return img;
}

// Multiplicative speckle: each entry scaled by u ~ U(1-a, 1+a) with
// a = sqrt(3 v), so the factor has mean 1 and variance v.
inline DenseMatrix apply_speckle(const DenseMatrix& img, double variance, Rng& rng) {
  if (variance < 0.0) throw std::invalid_argument("apply_speckle: negative variance");
  double a = std::sqrt(3.0 * variance);
  DenseMatrix out = img;
  for (double& v : out.data) v *= rng.uniform(1.0 - a, 1.0 + a);
  return out;
}

}  // namespace sigmin

#endif
