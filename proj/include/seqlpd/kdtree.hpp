#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace seqlpd {

// A neighbor found by a k-nearest query; ordering is (distance, index).
struct Neighbor {
  double dist_sq;
  std::uint32_t index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist_sq < b.dist_sq || (a.dist_sq == b.dist_sq && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Squared Euclidean distance accumulated in double, dimension order fixed.
template <typename T>
inline double squared_distance(const T* a, const T* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    s += diff * diff;
  }
  return s;
}

// Bounded sorted buffer of the k best neighbors seen so far.
class NeighborSet {
 public:
  explicit NeighborSet(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const { return items_.size() == k_; }
  double worst() const { return items_.back().dist_sq; }

  void offer(Neighbor n) {
    if (full() && !(n < items_.back())) return;
    auto it = std::upper_bound(items_.begin(), items_.end(), n);
    items_.insert(it, n);
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Neighbor>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Neighbor> items_;
};

// Static balanced KD-tree over n points of runtime dimension. Splits on the
// widest dimension at the median; leaves hold at most kLeafSize points.
template <typename T>
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 8;

  KdTree() = default;

  // `coords` is row-major n x dim.
  KdTree(std::vector<T> coords, std::size_t dim) : dim_(dim), coords_(std::move(coords)) {
    const std::size_t n = dim_ == 0 ? 0 : coords_.size() / dim_;
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::uint32_t>(i);
    if (n > 0) build(0, n);
  }

  std::size_t size() const { return order_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const T> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }

  // min(k, size()) neighbors sorted by (distance, index).
  std::vector<Neighbor> knn(std::span<const T> query, std::size_t k) const {
    NeighborSet best(std::min(k, size()));
    if (!nodes_.empty() && k > 0) search(0, query.data(), best);
    return best.items();
  }

 private:
  struct Node {
    std::uint32_t lo, hi;       // range in order_
    std::uint32_t left, right;  // child node ids; 0 for leaves
    std::uint32_t split_dim;
    T split;
  };

  std::uint32_t build(std::size_t lo, std::size_t hi) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi), 0, 0, 0, T{}});
    if (hi - lo <= kLeafSize) return id;

    std::size_t best_dim = 0;
    T best_spread{};
    for (std::size_t d = 0; d < dim_; ++d) {
      T mn = coord(order_[lo], d), mx = mn;
      for (std::size_t i = lo + 1; i < hi; ++i) {
        const T v = coord(order_[i], d);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (d == 0 || mx - mn > best_spread) {
        best_spread = mx - mn;
        best_dim = d;
      }
    }
    if (best_spread == T{}) return id;  // all points coincide: keep as leaf

    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const T va = coord(a, best_dim), vb = coord(b, best_dim);
                       return va < vb || (va == vb && a < b);
                     });
    const T split = coord(order_[mid], best_dim);
    const std::uint32_t l = build(lo, mid);
    const std::uint32_t r = build(mid, hi);
    nodes_[id].left = l;
    nodes_[id].right = r;
    nodes_[id].split_dim = static_cast<std::uint32_t>(best_dim);
    nodes_[id].split = split;
    return id;
  }

  T coord(std::uint32_t i, std::size_t d) const { return coords_[i * dim_ + d]; }

  void search(std::uint32_t id, const T* q, NeighborSet& best) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::uint32_t i = node.lo; i < node.hi; ++i) {
        const std::uint32_t idx = order_[i];
        best.offer({squared_distance(q, coords_.data() + idx * dim_, dim_), idx});
      }
      return;
    }
    const double diff =
        static_cast<double>(q[node.split_dim]) - static_cast<double>(node.split);
    const std::uint32_t near = diff < 0 ? node.left : node.right;
    const std::uint32_t far = diff < 0 ? node.right : node.left;
    search(near, q, best);
    // `<=` keeps equal-distance candidates with lower indices reachable.
    if (!best.full() || diff * diff <= best.worst()) search(far, q, best);
  }

  std::size_t dim_ = 0;
  std::vector<T> coords_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace seqlpd
