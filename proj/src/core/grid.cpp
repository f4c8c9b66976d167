#include "rdphase/core/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdphase {

Grid::Grid(const BoxDomain& domain, double pitch) : domain_(domain), h_(pitch) {
  if (!domain.bounded()) throw std::invalid_argument("Grid: domain must be bounded");
  if (!(pitch > 0)) throw std::invalid_argument("Grid: pitch must be > 0");
  total_ = 1;
  vol_ = 1.0;
  for (int i = 0; i < kMaxDim; ++i) {
    if (i < domain.dim()) {
      const double r = domain.width(i) / pitch;
      const double n = std::round(r);
      if (n < 1 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument("Grid: box width must be a multiple of the pitch");
      n_[i] = static_cast<std::int64_t>(n);
      vol_ *= pitch;
    } else {
      n_[i] = 1;
    }
  }
  for (int i = 0; i < kMaxDim; ++i) {
    stride_[i] = total_;
    total_ *= static_cast<std::size_t>(n_[i]);
  }
}

std::size_t Grid::flatten(const std::array<std::int64_t, kMaxDim>& idx) const {
  std::size_t c = 0;
  for (int i = 0; i < dim(); ++i) c += static_cast<std::size_t>(idx[i]) * stride_[i];
  return c;
}

std::array<std::int64_t, kMaxDim> Grid::unflatten(std::size_t c) const {
  std::array<std::int64_t, kMaxDim> idx{0, 0, 0};
  for (int i = 0; i < dim(); ++i) idx[i] = static_cast<std::int64_t>((c / stride_[i]) % n_[i]);
  return idx;
}

Point Grid::cell_lower(std::size_t c) const {
  auto idx = unflatten(c);
  Point p{0, 0, 0};
  for (int i = 0; i < dim(); ++i) p[i] = domain_.lower(i) + static_cast<double>(idx[i]) * h_;
  return p;
}

Point Grid::cell_center(std::size_t c) const {
  Point p = cell_lower(c);
  for (int i = 0; i < dim(); ++i) p[i] += 0.5 * h_;
  return p;
}

double Grid::overlap_fraction(std::size_t c, const Point& lo, const Point& hi) const {
  Point a = cell_lower(c);
  double f = 1.0;
  for (int i = 0; i < dim(); ++i) {
    const double l = std::max(a[i], lo[i]);
    const double r = std::min(a[i] + h_, hi[i]);
    if (r <= l) return 0.0;
    f *= (r - l) / h_;
  }
  return f;
}

}  // namespace rdphase
