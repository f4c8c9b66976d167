#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "rdphase/core/box_domain.hpp"

namespace rdphase {

// Uniform cell grid over a bounded box. Widths must be integer multiples of the pitch.
class Grid {
 public:
  Grid() = default;
  Grid(const BoxDomain& domain, double pitch);

  const BoxDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  double pitch() const { return h_; }
  std::int64_t cells(int axis) const { return n_[axis]; }
  std::size_t size() const { return total_; }
  double cell_volume() const { return vol_; }

  // Cell containing x; points on the closed boundary map to the adjacent cell.
  std::size_t cell_of(const Point& x) const {
    std::size_t c = 0;
    for (int i = 0; i < dim(); ++i) {
      const auto k = static_cast<std::int64_t>(std::floor((x[i] - domain_.lower(i)) / h_));
      c += static_cast<std::size_t>(std::clamp<std::int64_t>(k, 0, n_[i] - 1)) * stride_[i];
    }
    return c;
  }
  std::size_t flatten(const std::array<std::int64_t, kMaxDim>& idx) const;
  std::array<std::int64_t, kMaxDim> unflatten(std::size_t c) const;
  Point cell_center(std::size_t c) const;
  Point cell_lower(std::size_t c) const;

  // Fraction of cell c's volume inside the half-open box [lo, hi).
  double overlap_fraction(std::size_t c, const Point& lo, const Point& hi) const;

  bool operator==(const Grid& o) const { return domain_ == o.domain_ && h_ == o.h_; }

 private:
  BoxDomain domain_;
  double h_ = 1.0;
  std::array<std::int64_t, kMaxDim> n_{1, 1, 1};
  std::array<std::size_t, kMaxDim> stride_{1, 1, 1};
  std::size_t total_ = 1;
  double vol_ = 1.0;
};

}  // namespace rdphase
