#ifndef SIGMIN_SIGNAL_HPP
#define SIGMIN_SIGNAL_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sigmin {

// Sampled 2D signal: coordinates with one value per sample.
struct Signal {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  void check() const {
    if (xs.size() != values.size() || ys.size() != values.size())
      throw std::invalid_argument("signal: coordinate and value lengths differ");
  }
};

// Ordered samples of a closed planar curve.
struct CurvePoints {
  std::vector<double> xs;
  std::vector<double> ys;

  std::size_t size() const { return xs.size(); }
};

// Axis-aligned rectangular domain.
struct Domain {
  double xlo = 0.0;
  double xhi = 1.0;
  double ylo = 0.0;
  double yhi = 1.0;

  double width() const { return xhi - xlo; }
  double height() const { return yhi - ylo; }
};

}  // namespace sigmin

#endif
