#include "rdphase/loglaplace/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdphase::loglaplace {

NodeGrid::NodeGrid(const BoxDomain& domain, double pitch) : domain_(domain), h_(pitch) {
  if (!domain.bounded()) throw std::invalid_argument("NodeGrid: domain must be bounded");
  if (!(pitch > 0)) throw std::invalid_argument("NodeGrid: pitch must be > 0");
  total_ = 1;
  for (int i = 0; i < kMaxDim; ++i) {
    if (i < domain.dim()) {
      const double r = domain.width(i) / pitch;
      const double n = std::round(r);
      if (n < 2 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument("NodeGrid: box width must be a multiple of the pitch (at least 2 cells)");
      n_[i] = static_cast<std::int64_t>(n) + 1;
    } else {
      n_[i] = 1;
    }
    stride_[i] = total_;
    total_ *= static_cast<std::size_t>(n_[i]);
  }
}

std::array<std::int64_t, kMaxDim> NodeGrid::unflatten(std::size_t k) const {
  std::array<std::int64_t, kMaxDim> idx{0, 0, 0};
  for (int i = 0; i < dim(); ++i) idx[i] = static_cast<std::int64_t>((k / stride_[i]) % n_[i]);
  return idx;
}

std::size_t NodeGrid::flatten(const std::array<std::int64_t, kMaxDim>& idx) const {
  std::size_t k = 0;
  for (int i = 0; i < dim(); ++i) k += static_cast<std::size_t>(idx[i]) * stride_[i];
  return k;
}

Point NodeGrid::point(std::size_t k) const {
  const auto idx = unflatten(k);
  Point p{0, 0, 0};
  for (int i = 0; i < dim(); ++i)
    p[i] = idx[i] == n_[i] - 1 ? domain_.upper(i) : domain_.lower(i) + static_cast<double>(idx[i]) * h_;
  return p;
}

bool NodeGrid::is_boundary(std::size_t k) const {
  const auto idx = unflatten(k);
  for (int i = 0; i < dim(); ++i)
    if (idx[i] == 0 || idx[i] == n_[i] - 1) return true;
  return false;
}

std::size_t NodeGrid::nearest(const Point& x) const {
  std::array<std::int64_t, kMaxDim> idx{0, 0, 0};
  for (int i = 0; i < dim(); ++i)
    idx[i] = std::clamp<std::int64_t>(std::llround((x[i] - domain_.lower(i)) / h_), 0, n_[i] - 1);
  return flatten(idx);
}

GridField GridField::from_function(const NodeGrid& g, const std::function<double(const Point&)>& f) {
  GridField r(g);
  for (std::size_t k = 0; k < g.size(); ++k) r.values[k] = f(g.point(k));
  return r;
}

double discrete_laplacian(const NodeGrid& g, const std::vector<double>& v, std::size_t k) {
  const double h2 = g.pitch() * g.pitch();
  double s = 0.0;
  for (int i = 0; i < g.dim(); ++i) s += v[k + g.stride(i)] + v[k - g.stride(i)] - 2.0 * v[k];
  return s / h2;
}

}  // namespace rdphase::loglaplace
