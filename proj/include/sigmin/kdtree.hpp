#ifndef SIGMIN_KDTREE_HPP
#define SIGMIN_KDTREE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sigmin/parallel.hpp"

namespace sigmin {

// Static 2D kd-tree. Exact median splits (ties broken by lowest original
// index) with alternating axes keep the depth at ceil(log2 m) + 1 or less.
// Queries reproduce brute force exactly under (distance^2, index) ordering.
class KdTree {
 public:
  KdTree(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size())
      throw std::invalid_argument("kdtree: coordinate lengths differ");
    if (xs_.empty()) throw std::invalid_argument("kdtree: empty point set");
    std::vector<std::size_t> idx(xs_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    nodes_.reserve(xs_.size());
    root_ = build(idx, 0, idx.size(), 0, 1);
  }

  std::size_t size() const { return xs_.size(); }
  int depth() const { return depth_; }

  // Indices of the k nearest points, ascending by (distance^2, index).
  std::vector<std::size_t> knn(double qx, double qy, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("kdtree: k must be positive");
    if (k > xs_.size()) k = xs_.size();
    Heap heap;
    search(root_, qx, qy, k, heap);
    std::vector<std::pair<double, std::size_t>> found;
    found.reserve(heap.size());
    while (!heap.empty()) {
      found.push_back(heap.top());
      heap.pop();
    }
    std::sort(found.begin(), found.end());
    std::vector<std::size_t> out(found.size());
    for (std::size_t i = 0; i < found.size(); ++i) out[i] = found[i].second;
    return out;
  }

  // Batched queries over contiguous ranges. Output is row-major with
  // min(k, size()) indices per query; identical for every thread count.
  std::vector<std::size_t> knn_batch(const std::vector<double>& qxs,
                                     const std::vector<double>& qys, std::size_t k,
                                     int threads = 1) const {
    if (qxs.size() != qys.size())
      throw std::invalid_argument("kdtree: query coordinate lengths differ");
    std::size_t stride = std::min(k == 0 ? 1 : k, xs_.size());
    if (k == 0) throw std::invalid_argument("kdtree: k must be positive");
    std::vector<std::size_t> out(qxs.size() * stride);
    parallel_for_blocks(qxs.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t q = b; q < e; ++q) {
        auto res = knn(qxs[q], qys[q], k);
        std::copy(res.begin(), res.end(), out.begin() + static_cast<std::ptrdiff_t>(q * stride));
      }
    });
    return out;
  }

 private:
  struct Node {
    std::size_t point;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis;
  };

  using Heap = std::priority_queue<std::pair<double, std::size_t>>;

  double coord(std::size_t i, int axis) const { return axis == 0 ? xs_[i] : ys_[i]; }

  std::int32_t build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                     int axis, int level) {
    if (begin >= end) return -1;
    depth_ = std::max(depth_, level);
    std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                     idx.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx.begin() + static_cast<std::ptrdiff_t>(end),
                     [this, axis](std::size_t a, std::size_t b) {
                       double ca = coord(a, axis), cb = coord(b, axis);
                       return ca < cb || (ca == cb && a < b);
                     });
    Node node;
    node.point = idx[mid];
    node.axis = static_cast<std::uint8_t>(axis);
    std::int32_t self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    std::int32_t left = build(idx, begin, mid, 1 - axis, level + 1);
    std::int32_t right = build(idx, mid + 1, end, 1 - axis, level + 1);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void consider(std::size_t i, double qx, double qy, std::size_t k, Heap& heap) const {
    double dx = xs_[i] - qx, dy = ys_[i] - qy;
    std::pair<double, std::size_t> cand{dx * dx + dy * dy, i};
    if (heap.size() < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
  }

  void search(std::int32_t ni, double qx, double qy, std::size_t k, Heap& heap) const {
    if (ni < 0) return;
    const Node& node = nodes_[static_cast<std::size_t>(ni)];
    consider(node.point, qx, qy, k, heap);
    double q = node.axis == 0 ? qx : qy;
    double split = coord(node.point, node.axis);
    double diff = q - split;
    std::int32_t near = diff < 0 ? node.left : node.right;
    std::int32_t far = diff < 0 ? node.right : node.left;
    search(near, qx, qy, k, heap);
    // The far side may still hold an equal-distance lower-index point, so
    // only prune on a strictly larger plane distance.
    if (heap.size() < k || diff * diff <= heap.top().first)
      search(far, qx, qy, k, heap);
  }

  std::vector<double> xs_, ys_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
  int depth_ = 0;
};

}  // namespace sigmin

#endif
