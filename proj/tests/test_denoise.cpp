#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sigmin/generators.hpp"
#include "sigmin/rng.hpp"
#include "sigmin/svd_denoise.hpp"

using namespace sigmin;

namespace {

// Exact hand-built factorisation of diag(3, 2).
DenoiseProblem tiny_problem(double alpha) {
  DenseMatrix f(2, 2);
  f.at(0, 0) = 3.0;
  f.at(1, 1) = 2.0;
  SvdFactors svd;
  svd.u = DenseMatrix::identity(2);
  svd.v = DenseMatrix::identity(2);
  svd.s = {3.0, 2.0};
  svd.residual_sq = 0.0;
  return DenoiseProblem(f, svd, alpha);
}

// Full factorisation of a rough test image; the flat spectrum keeps the
// whole feasible box non-degenerate.
struct ImageCase {
  DenseMatrix image;
  SvdFactors svd;
  ImageCase() : image(make_test_image(24, GridKind::Random, 6)) {
    svd = svd_cross(image, 24, 1e-12);
  }
};

std::vector<double> random_feasible(const DenoiseProblem& p, Rng& rng) {
  auto [lo, hi] = threshold_bounds(p);
  std::vector<double> mu(lo.size());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = rng.uniform(lo[i], hi[i]);
  return mu;
}

}  // namespace

TEST(DenoiseObjective, ExplicitTwoByTwoCase) {
  DenoiseProblem p = tiny_problem(1.0);
  double eps = denoise_objective({1.0, 1.0}, p);
  EXPECT_DOUBLE_EQ(eps, 5.0);  // (1^2 + 1^2) + (2 + 1)
  EXPECT_EQ(p.eval_count.load(), 1u);
  EXPECT_EQ(p.threshold_violations.load(), 0u);
}

TEST(DenoiseObjective, ZeroThresholdReproducesTheFactorisation) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.7);
  double sum_s = 0.0;
  for (double s : p.svd.s) sum_s += s;
  double eps = denoise_objective(std::vector<double>(p.rank(), 0.0), p);
  EXPECT_NEAR(eps, p.svd.residual_sq + 0.7 * sum_s, 1e-8);
}

TEST(DenoiseObjective, QuadraticShiftIdentity) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.3);
  double eps0 = denoise_objective(std::vector<double>(p.rank(), 0.0), p);
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> mu = random_feasible(p, rng);
    double eps = denoise_objective(mu, p);
    double shift = 0.0;
    for (double m : mu) shift += m * m - 0.3 * m;
    EXPECT_NEAR(eps - eps0, shift, 1e-8);
  }
  EXPECT_EQ(p.threshold_violations.load(), 0u);
}

TEST(DenoiseObjective, DecomposesIntoResidualPlusQuadraticPlusPenalty) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.9);
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> mu = random_feasible(p, rng);
    double mu_sq = 0.0, shrunk = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      mu_sq += mu[i] * mu[i];
      shrunk += p.svd.s[i] - mu[i];
    }
    EXPECT_NEAR(denoise_objective(mu, p), p.svd.residual_sq + mu_sq + 0.9 * shrunk, 1e-8);
  }
}

TEST(DenoiseObjective, ConvexAlongRandomChords) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.5);
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> a = random_feasible(p, rng);
    std::vector<double> b = random_feasible(p, rng);
    double theta = rng.uniform(0.01, 0.99);
    std::vector<double> mix(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mix[i] = theta * a[i] + (1.0 - theta) * b[i];
    double lhs = denoise_objective(mix, p);
    double rhs = theta * denoise_objective(a, p) + (1.0 - theta) * denoise_objective(b, p);
    EXPECT_LE(lhs, rhs + 1e-8);
  }
}

TEST(DenoiseObjective, TracksThresholdViolations) {
  DenoiseProblem p = tiny_problem(0.0);
  std::vector<double> mu = {3.5, 0.0};  // exceeds S_0
  denoise_objective(mu, p);
  EXPECT_EQ(p.threshold_violations.load(), 1u);
  EXPECT_THROW(denoise_objective({1.0}, p), std::invalid_argument);
}

TEST(DenoiseProblem, RejectsASpectrumBelowTheMargin) {
  DenseMatrix f(2, 2);
  f.at(0, 0) = 3.0;
  SvdFactors svd;
  svd.u = DenseMatrix::identity(2);
  svd.v = DenseMatrix::identity(2);
  svd.s = {3.0, 1e-12};  // second value sits under delta = 3e-9
  svd.residual_sq = 0.0;
  EXPECT_THROW(DenoiseProblem(f, svd, 1.0), std::invalid_argument);
}

TEST(DenoiseGradient, MatchesFormulaAndFiniteDifferences) {
  ImageCase c;
  double alpha = 0.8;
  DenoiseProblem p(c.image, c.svd, alpha);
  std::vector<double> zero(p.rank(), 0.0);
  for (double g : denoise_gradient(zero, p)) EXPECT_DOUBLE_EQ(g, -alpha);
  std::vector<double> stat(p.rank(), alpha / 2.0);
  for (double g : denoise_gradient(stat, p)) EXPECT_DOUBLE_EQ(g, 0.0);

  Rng rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> mu = random_feasible(p, rng);
    std::vector<double> grad = denoise_gradient(mu, p);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double h = 1e-6 * (1.0 + std::abs(mu[i]));
      std::vector<double> lo = mu, hi = mu;
      lo[i] -= h;
      hi[i] += h;
      double fd = (denoise_objective(hi, p) - denoise_objective(lo, p)) / (2.0 * h);
      double scale = std::max(1.0, std::abs(grad[i]));
      EXPECT_NEAR(grad[i], fd, 1e-5 * scale) << "component " << i;
    }
  }
}

TEST(DenoiseClosedForm, ClampsTheStationaryPoint) {
  DenoiseProblem zero_alpha = tiny_problem(0.0);
  for (double m : denoise_closed_form(zero_alpha)) EXPECT_EQ(m, 0.0);

  DenoiseProblem interior = tiny_problem(1.0);
  std::vector<double> mu = denoise_closed_form(interior);
  EXPECT_DOUBLE_EQ(mu[0], 0.5);
  EXPECT_DOUBLE_EQ(mu[1], 0.5);

  // Upper bound active when the spectrum sits below alpha / 2.
  DenseMatrix f(2, 2);
  f.at(0, 0) = 0.2;
  f.at(1, 1) = 0.1;
  SvdFactors svd;
  svd.u = DenseMatrix::identity(2);
  svd.v = DenseMatrix::identity(2);
  svd.s = {0.2, 0.1};
  svd.residual_sq = 0.0;
  DenoiseProblem low(f, svd, 1.0);
  std::vector<double> clamped = denoise_closed_form(low);
  EXPECT_DOUBLE_EQ(clamped[0], 0.2 - low.delta);
  EXPECT_DOUBLE_EQ(clamped[1], 0.1 - low.delta);
}

TEST(DenoiseClosedForm, BeatsRandomFeasiblePoints) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.6);
  double best = denoise_objective(denoise_closed_form(p), p);
  Rng rng(19);
  for (int trial = 0; trial < 1000; ++trial)
    EXPECT_GE(denoise_objective(random_feasible(p, rng), p), best - 1e-12);
  EXPECT_EQ(p.threshold_violations.load(), 0u);
}

TEST(ThresholdBounds, EncodeTheStrictConstraint) {
  DenseMatrix f(3, 3);
  f.at(0, 0) = 3.0;
  f.at(1, 1) = 2.0;
  f.at(2, 2) = 1.0;
  SvdFactors svd;
  svd.u = DenseMatrix::identity(3);
  svd.v = DenseMatrix::identity(3);
  svd.s = {3.0, 2.0, 1.0};
  svd.residual_sq = 0.0;
  DenoiseProblem p(f, svd, 0.4);
  auto [lo, hi] = threshold_bounds(p);
  double delta = 1e-9 * 3.0;
  EXPECT_EQ(lo, std::vector<double>(3, 0.0));
  EXPECT_DOUBLE_EQ(hi[0], 3.0 - delta);
  EXPECT_DOUBLE_EQ(hi[1], 2.0 - delta);
  EXPECT_DOUBLE_EQ(hi[2], 1.0 - delta);

  std::vector<double> mu = denoise_closed_form(p);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GE(mu[i], lo[i]);
    EXPECT_LE(mu[i], hi[i]);
  }
}

TEST(DenoisedImage, ZeroThresholdReconstructs) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.5);
  DenseMatrix fhat = denoised_image(std::vector<double>(p.rank(), 0.0), p);
  DenseMatrix diff = dense_sub(c.image, fhat);
  EXPECT_LE(frobenius_norm(diff), 1e-6 * frobenius_norm(c.image));
}

TEST(DenoisedImage, ShrinksTheNuclearNormAndTheSpectrum) {
  ImageCase c;
  DenoiseProblem p(c.image, c.svd, 0.4);
  std::vector<double> mu = denoise_closed_form(p);
  DenseMatrix fhat = denoised_image(mu, p);

  SvdFactors refact = svd_cross(fhat, p.rank(), 1e-10);
  double s1 = p.svd.s[0];
  double original = 0.0, shrunk = 0.0;
  for (std::size_t i = 0; i < p.rank(); ++i) {
    original += p.svd.s[i];
    shrunk += refact.s[i];
    double expected = p.svd.s[i] - mu[i];
    if (expected >= 1e-3 * s1)
      EXPECT_NEAR(refact.s[i], expected, 1e-6 * expected) << "value " << i;
    else
      EXPECT_NEAR(refact.s[i], expected, 1e-6 * s1) << "value " << i;
  }
  EXPECT_LT(shrunk, original);
}
