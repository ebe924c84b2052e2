#ifndef SIGMIN_CURVE_HPP
#define SIGMIN_CURVE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sigmin/kdtree.hpp"
#include "sigmin/signal.hpp"

namespace sigmin {

namespace detail {

// Thomas elimination for a strictly tridiagonal system. sub[i] multiplies
// x[i-1] (sub[0] unused), sup[i] multiplies x[i+1] (sup[n-1] unused).
inline std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             const std::vector<double>& rhs) {
  std::size_t n = diag.size();
  std::vector<double> cp(n, 0.0), dp(n, 0.0);
  double den = diag[0];
  if (den == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot");
  cp[0] = n > 1 ? sup[0] / den : 0.0;
  dp[0] = rhs[0] / den;
  for (std::size_t i = 1; i < n; ++i) {
    den = diag[i] - sub[i] * cp[i - 1];
    if (den == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot");
    cp[i] = i + 1 < n ? sup[i] / den : 0.0;
    dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / den;
  }
  std::vector<double> x(n);
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

// Cyclic tridiagonal solve by a rank-one (Sherman-Morrison) correction.
// sub[0] is the (0, n-1) corner entry and sup[n-1] the (n-1, 0) corner.
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                                    const std::vector<double>& diag,
                                                    const std::vector<double>& sup,
                                                    const std::vector<double>& rhs) {
  std::size_t n = diag.size();
  if (n < 3) throw std::invalid_argument("cyclic tridiagonal solve: need n >= 3");
  double alpha = sup[n - 1];
  double beta = sub[0];
  double gamma = -diag[0];
  std::vector<double> diag2 = diag;
  diag2[0] = diag[0] - gamma;
  diag2[n - 1] = diag[n - 1] - alpha * beta / gamma;
  std::vector<double> y = solve_tridiagonal(sub, diag2, sup, rhs);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  std::vector<double> z = solve_tridiagonal(sub, diag2, sup, u);
  double vy = y[0] + beta / gamma * y[n - 1];
  double vz = 1.0 + z[0] + beta / gamma * z[n - 1];
  if (vz == 0.0) throw std::runtime_error("cyclic tridiagonal solve: singular correction");
  double fact = vy / vz;
  for (std::size_t i = 0; i < n; ++i) y[i] -= fact * z[i];
  return y;
}

}  // namespace detail

// Closed planar curve through ordered samples: a periodic cubic spline over
// the chord-length parameter, plus a dense polyline (100 vertices per
// segment) used for all distance queries. Vertices at the knots coincide
// with the control points exactly.
class Curve {
 public:
  static constexpr std::size_t kDensify = 100;  // polyline vertices per segment

  explicit Curve(const CurvePoints& samples) {
    std::size_t m = samples.size();
    if (samples.xs.size() != samples.ys.size())
      throw std::invalid_argument("curve: coordinate lengths differ");
    if (m < 4) throw std::invalid_argument("curve: need at least 4 control points");
    cx_ = samples.xs;
    cy_ = samples.ys;

    // Chord-length knots; the final interval closes the loop.
    knots_.resize(m + 1);
    knots_[0] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double dx = cx_[(i + 1) % m] - cx_[i];
      double dy = cy_[(i + 1) % m] - cy_[i];
      double h = std::sqrt(dx * dx + dy * dy);
      if (h == 0.0)
        throw std::invalid_argument("curve: repeated consecutive control points");
      knots_[i + 1] = knots_[i] + h;
    }

    mx_ = spline_moments(cx_);
    my_ = spline_moments(cy_);
    densify();
    tree_ = std::make_shared<KdTree>(px_, py_);
  }

  std::size_t control_count() const { return cx_.size(); }
  const std::vector<double>& control_xs() const { return cx_; }
  const std::vector<double>& control_ys() const { return cy_; }
  const std::vector<double>& knots() const { return knots_; }
  double period() const { return knots_.back(); }

  std::size_t polyline_count() const { return px_.size(); }
  const std::vector<double>& polyline_xs() const { return px_; }
  const std::vector<double>& polyline_ys() const { return py_; }

  // Cumulative arc length along the polyline; arc_table()[i] is the length
  // from vertex 0 to vertex i, and length() closes the loop.
  const std::vector<double>& arc_table() const { return arc_; }
  double length() const { return total_length_; }

  // Diagonal of the control-point bounding box.
  double extent() const { return extent_; }

  // Spline position at parameter t (periodic in the chord-length period).
  std::pair<double, double> eval(double t) const {
    double period_t = period();
    double tt = std::fmod(t, period_t);
    if (tt < 0.0) tt += period_t;
    std::size_t seg =
        static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), tt) -
                                 knots_.begin());
    seg = seg == 0 ? 0 : seg - 1;
    if (seg >= control_count()) seg = control_count() - 1;
    double h = knots_[seg + 1] - knots_[seg];
    double a = (knots_[seg + 1] - tt) / h;
    double b = (tt - knots_[seg]) / h;
    std::size_t nxt = (seg + 1) % control_count();
    double cub_a = (a * a * a - a) * h * h / 6.0;
    double cub_b = (b * b * b - b) * h * h / 6.0;
    double x = a * cx_[seg] + b * cx_[nxt] + cub_a * mx_[seg] + cub_b * mx_[nxt];
    double y = a * cy_[seg] + b * cy_[nxt] + cub_a * my_[seg] + cub_b * my_[nxt];
    return {x, y};
  }

  // Exact Euclidean distance from (qx, qy) to the polyline. The vertex
  // kd-tree proposes candidates; the window is grown until every unseen
  // segment is provably farther than the best one found.
  double distance(double qx, double qy) const {
    std::size_t n = px_.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t k = 8;
    while (true) {
      std::vector<std::size_t> near = tree_->knn(qx, qy, k);
      for (std::size_t id : near) {
        best = std::min(best, segment_distance(id == 0 ? n - 1 : id - 1, qx, qy));
        best = std::min(best, segment_distance(id, qx, qy));
      }
      if (near.size() >= n) break;
      std::size_t last = near.back();
      double dx = px_[last] - qx, dy = py_[last] - qy;
      double dk = std::sqrt(dx * dx + dy * dy);
      // Unseen segments have both endpoints at distance >= dk, hence
      // distance >= dk - max_segment_.
      if (dk > best + max_segment_) break;
      k *= 2;
    }
    return best;
  }

 private:
  // Periodic spline second derivatives for one coordinate. Row i couples
  // moments i-1, i, i+1 cyclically; the matrix is strictly diagonally
  // dominant so the cyclic solve cannot hit a zero pivot.
  std::vector<double> spline_moments(const std::vector<double>& v) const {
    std::size_t m = v.size();
    std::vector<double> sub(m), diag(m), sup(m), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      double h_prev = knots_[i == 0 ? m : i] - knots_[i == 0 ? m - 1 : i - 1];
      double h_cur = knots_[i + 1] - knots_[i];
      double v_prev = v[(i + m - 1) % m];
      double v_next = v[(i + 1) % m];
      sub[i] = h_prev / 6.0;
      diag[i] = (h_prev + h_cur) / 3.0;
      sup[i] = h_cur / 6.0;
      rhs[i] = (v_next - v[i]) / h_cur - (v[i] - v_prev) / h_prev;
    }
    return detail::solve_cyclic_tridiagonal(sub, diag, sup, rhs);
  }

  void densify() {
    std::size_t m = control_count();
    px_.reserve(m * kDensify);
    py_.reserve(m * kDensify);
    for (std::size_t seg = 0; seg < m; ++seg) {
      double h = knots_[seg + 1] - knots_[seg];
      for (std::size_t j = 0; j < kDensify; ++j) {
        if (j == 0) {
          px_.push_back(cx_[seg]);
          py_.push_back(cy_[seg]);
          continue;
        }
        auto [x, y] = eval(knots_[seg] + h * static_cast<double>(j) /
                                             static_cast<double>(kDensify));
        px_.push_back(x);
        py_.push_back(y);
      }
    }
    std::size_t n = px_.size();
    arc_.resize(n + 1);
    arc_[0] = 0.0;
    max_segment_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dx = px_[(i + 1) % n] - px_[i];
      double dy = py_[(i + 1) % n] - py_[i];
      double len = std::sqrt(dx * dx + dy * dy);
      arc_[i + 1] = arc_[i] + len;
      max_segment_ = std::max(max_segment_, len);
    }
    total_length_ = arc_[n];

    auto [xlo, xhi] = std::minmax_element(cx_.begin(), cx_.end());
    auto [ylo, yhi] = std::minmax_element(cy_.begin(), cy_.end());
    double w = *xhi - *xlo, hgt = *yhi - *ylo;
    extent_ = std::sqrt(w * w + hgt * hgt);
  }

  // Distance to the closed segment from vertex i to vertex i+1 (mod n).
  double segment_distance(std::size_t i, double qx, double qy) const {
    std::size_t n = px_.size();
    double ax = px_[i], ay = py_[i];
    double bx = px_[(i + 1) % n], by = py_[(i + 1) % n];
    double wx = bx - ax, wy = by - ay;
    double ww = wx * wx + wy * wy;
    double t = ww > 0.0 ? ((qx - ax) * wx + (qy - ay) * wy) / ww : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double dx = ax + t * wx - qx, dy = ay + t * wy - qy;
    return std::sqrt(dx * dx + dy * dy);
  }

  std::vector<double> cx_, cy_;     // control points
  std::vector<double> knots_;      // chord-length knots, knots_[m] = period
  std::vector<double> mx_, my_;    // spline second derivatives
  std::vector<double> px_, py_;    // densified polyline vertices
  std::vector<double> arc_;        // cumulative arc length, size n+1
  double total_length_ = 0.0;
  double max_segment_ = 0.0;
  double extent_ = 0.0;
  std::shared_ptr<const KdTree> tree_;
};

inline Curve fit_interpolating_curve(const CurvePoints& samples) { return Curve(samples); }

// Residuals of the on-curve equality constraints: entry j is the distance
// from centre j to the curve. mu is the flat (x0, y0, x1, y1, ...) layout.
inline std::vector<double> curve_distance_constraint(const Curve& curve,
                                                     const std::vector<double>& mu) {
  if (mu.size() % 2 != 0)
    throw std::invalid_argument("curve constraint: variable vector length must be even");
  std::vector<double> res(mu.size() / 2);
  for (std::size_t j = 0; j < res.size(); ++j)
    res[j] = curve.distance(mu[2 * j], mu[2 * j + 1]);
  return res;
}

}  // namespace sigmin

#endif
