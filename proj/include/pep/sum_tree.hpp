#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pep {

// Complete binary tree of partial sums over nonnegative leaf weights.
// Parents are recomputed from their children on every update, so the root
// never accumulates rounding drift.
class SumTree {
 public:
  explicit SumTree(std::size_t leaves) : leaves_(leaves) {
    if (leaves == 0) throw std::invalid_argument("SumTree: needs at least one leaf");
    cap_ = 1;
    while (cap_ < leaves) cap_ <<= 1;
    node_.assign(2 * cap_, 0.0);
  }

  std::size_t size() const noexcept { return leaves_; }
  double total() const noexcept { return node_[1]; }
  double leaf(std::size_t i) const noexcept { return node_[cap_ + i]; }

  void set(std::size_t i, double w) noexcept {
    std::size_t k = cap_ + i;
    node_[k] = w;
    for (k >>= 1; k >= 1; k >>= 1) node_[k] = node_[2 * k] + node_[2 * k + 1];
  }

  // Bulk load then a single O(size) rebuild.
  void assign(const std::vector<double>& w) {
    if (w.size() != leaves_) throw std::invalid_argument("SumTree: weight count mismatch");
    std::fill(node_.begin(), node_.end(), 0.0);
    for (std::size_t i = 0; i < leaves_; ++i) node_[cap_ + i] = w[i];
    for (std::size_t k = cap_ - 1; k >= 1; --k) node_[k] = node_[2 * k] + node_[2 * k + 1];
  }

  // Leaf i with prefix(i) <= u < prefix(i+1), for u in [0, total). Never returns a zero leaf
  // when total > 0.
  std::size_t find(double u) const noexcept {
    std::size_t k = 1;
    while (k < cap_) {
      const double left = node_[2 * k];
      if ((u < left && left > 0.0) || node_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        u -= left;
        k = 2 * k + 1;
      }
    }
    return k - cap_;
  }

 private:
  std::size_t leaves_;
  std::size_t cap_;
  std::vector<double> node_;
};

}  // namespace pep
