#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sigmin/kdtree.hpp"
#include "sigmin/rng.hpp"

using namespace sigmin;

namespace {

void fill_random_points(std::size_t m, std::uint64_t seed, std::vector<double>& xs,
                        std::vector<double>& ys) {
  Rng rng(seed);
  xs.resize(m);
  ys.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = rng.uniform();
    ys[i] = rng.uniform();
  }
}

}  // namespace

TEST(KdTree, ConstructionContracts) {
  EXPECT_THROW(KdTree({}, {}), std::invalid_argument);
  EXPECT_THROW(KdTree({0.0, 1.0}, {0.0}), std::invalid_argument);
  KdTree one({0.5}, {0.5});
  EXPECT_EQ(one.size(), 1u);
  EXPECT_THROW(one.knn(0.0, 0.0, 0), std::invalid_argument);
  auto res = one.knn(0.0, 0.0, 5);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0], 0u);
}

TEST(KdTree, FrozenSmallCase) {
  KdTree tree({0.0, 1.0, 0.0, 2.0}, {0.0, 0.0, 1.0, 2.0});
  auto res = tree.knn(0.4, 0.1, 2);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0], 0u);
  EXPECT_EQ(res[1], 1u);
}

TEST(KdTree, MatchesBruteForceOnRandomPoints) {
  std::vector<double> xs, ys;
  fill_random_points(200, 17, xs, ys);
  KdTree tree(xs, ys);
  Rng rng(18);
  for (std::size_t k : {1u, 5u, 32u, 200u}) {
    for (int q = 0; q < 50; ++q) {
      double qx = rng.uniform(-0.2, 1.2);
      double qy = rng.uniform(-0.2, 1.2);
      EXPECT_EQ(tree.knn(qx, qy, k), oracles::brute_knn(xs, ys, qx, qy, k));
    }
    // Queries sitting exactly on data points.
    for (std::size_t i = 0; i < 20; ++i)
      EXPECT_EQ(tree.knn(xs[i], ys[i], k), oracles::brute_knn(xs, ys, xs[i], ys[i], k));
  }
}

TEST(KdTree, MatchesBruteForceUnderHeavyTies) {
  // Four distinct locations, fifty copies each: tie-breaking must follow
  // ascending original index exactly.
  std::vector<double> xs, ys;
  const double px[4] = {0.0, 1.0, 0.0, 1.0};
  const double py[4] = {0.0, 0.0, 1.0, 1.0};
  for (int copy = 0; copy < 50; ++copy)
    for (int p = 0; p < 4; ++p) {
      xs.push_back(px[p]);
      ys.push_back(py[p]);
    }
  KdTree tree(xs, ys);
  for (std::size_t k : {1u, 10u, 60u, 150u}) {
    EXPECT_EQ(tree.knn(0.2, 0.2, k), oracles::brute_knn(xs, ys, 0.2, 0.2, k));
    EXPECT_EQ(tree.knn(0.5, 0.5, k), oracles::brute_knn(xs, ys, 0.5, 0.5, k));
    EXPECT_EQ(tree.knn(0.0, 0.0, k), oracles::brute_knn(xs, ys, 0.0, 0.0, k));
  }
}

TEST(KdTree, DepthStaysLogarithmic) {
  for (std::size_t m : {1u, 2u, 3u, 10u, 100u, 128u, 1000u}) {
    std::vector<double> xs, ys;
    fill_random_points(m, m, xs, ys);
    KdTree tree(xs, ys);
    int bound = static_cast<int>(std::ceil(std::log2(static_cast<double>(m)))) + 1;
    EXPECT_LE(tree.depth(), bound) << "m=" << m;
  }
  // Degenerate collinear input must still balance via index tie-breaks.
  std::vector<double> xs(256, 0.5), ys(256, 0.5);
  KdTree tree(xs, ys);
  EXPECT_LE(tree.depth(), 9);
}

TEST(KdTree, BatchedQueriesIdenticalAcrossThreadCounts) {
  std::vector<double> xs, ys, qx, qy;
  fill_random_points(300, 5, xs, ys);
  fill_random_points(64, 6, qx, qy);
  KdTree tree(xs, ys);
  auto base = tree.knn_batch(qx, qy, 8, 1);
  ASSERT_EQ(base.size(), 64u * 8u);
  for (int threads : {2, 3, 4}) EXPECT_EQ(tree.knn_batch(qx, qy, 8, threads), base);
  for (std::size_t q = 0; q < qx.size(); ++q) {
    auto single = tree.knn(qx[q], qy[q], 8);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(base[q * 8 + j], single[j]);
  }
}
