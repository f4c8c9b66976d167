#include "rdphase/core/boundary_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdphase {

BoundaryMeasure::BoundaryMeasure(const BoxDomain& domain, double pitch) : domain_(domain), h_(pitch) {
  if (!domain.bounded()) throw std::invalid_argument("BoundaryMeasure: domain must be bounded");
  if (!(pitch > 0)) throw std::invalid_argument("BoundaryMeasure: pitch must be > 0");
  const int d = domain.dim();
  n_.assign(2 * d, {1, 1, 1});
  mass_.resize(2 * d);
  for (int f = 0; f < 2 * d; ++f) {
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) {
      if (i == f / 2) continue;
      const double r = domain.width(i) / pitch;
      const double n = std::round(r);
      if (n < 1 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument("BoundaryMeasure: box width must be a multiple of the pitch");
      n_[f][i] = static_cast<std::int64_t>(n);
      total *= static_cast<std::size_t>(n);
    }
    mass_[f].assign(total, 0.0);
  }
}

int BoundaryMeasure::face_of(const Point& x) const {
  int best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < domain_.dim(); ++i) {
    const double dl = std::abs(x[i] - domain_.lower(i));
    const double du = std::abs(x[i] - domain_.upper(i));
    if (dl < dist) dist = dl, best = 2 * i;
    if (du < dist) dist = du, best = 2 * i + 1;
  }
  const double tol = 1e-9 * std::max(1.0, h_);
  if (dist > tol || !domain_.contains_closed(x, tol))
    throw std::invalid_argument("BoundaryMeasure: point not on the boundary");
  return best;
}

std::size_t BoundaryMeasure::surface_cell(int face, const Point& x) const {
  std::size_t c = 0, stride = 1;
  for (int i = 0; i < domain_.dim(); ++i) {
    if (i == face / 2) continue;
    auto k = static_cast<std::int64_t>(std::floor((x[i] - domain_.lower(i)) / h_));
    k = std::clamp<std::int64_t>(k, 0, n_[face][i] - 1);
    c += static_cast<std::size_t>(k) * stride;
    stride *= static_cast<std::size_t>(n_[face][i]);
  }
  return c;
}

Point BoundaryMeasure::surface_cell_center(int face, std::size_t cell) const {
  Point p{0, 0, 0};
  const int axis = face / 2;
  for (int i = 0; i < domain_.dim(); ++i) {
    if (i == axis) {
      p[i] = (face % 2) ? domain_.upper(i) : domain_.lower(i);
      continue;
    }
    const auto k = static_cast<std::int64_t>(cell % static_cast<std::size_t>(n_[face][i]));
    cell /= static_cast<std::size_t>(n_[face][i]);
    p[i] = domain_.lower(i) + (static_cast<double>(k) + 0.5) * h_;
  }
  return p;
}

void BoundaryMeasure::add(const Point& x, double m) {
  const int f = face_of(x);
  add_cell(f, surface_cell(f, x), m);
}

void BoundaryMeasure::add_cell(int face, std::size_t cell, double m) {
  if (!(m >= 0) || !std::isfinite(m)) throw std::invalid_argument("BoundaryMeasure: mass must be finite and >= 0");
  mass_.at(face).at(cell) += m;
}

double BoundaryMeasure::face_total(int face) const {
  double s = 0.0;
  for (double m : mass_.at(face)) s += m;
  return s;
}

double BoundaryMeasure::total() const {
  double s = 0.0;
  for (int f = 0; f < faces(); ++f) s += face_total(f);
  return s;
}

double BoundaryMeasure::window_mass(int face, const Point& lo, const Point& hi) const {
  const int axis = face / 2;
  double s = 0.0;
  for (std::size_t c = 0; c < mass_.at(face).size(); ++c) {
    const double m = mass_[face][c];
    if (m == 0.0) continue;
    const Point ctr = surface_cell_center(face, c);
    double frac = 1.0;
    for (int i = 0; i < domain_.dim() && frac > 0; ++i) {
      if (i == axis) continue;
      const double l = std::max(ctr[i] - 0.5 * h_, lo[i]);
      const double r = std::min(ctr[i] + 0.5 * h_, hi[i]);
      frac *= r > l ? (r - l) / h_ : 0.0;
    }
    s += m * frac;
  }
  return s;
}

std::vector<BoundaryEntry> BoundaryMeasure::entries() const {
  std::vector<BoundaryEntry> out;
  for (int f = 0; f < faces(); ++f)
    for (std::size_t c = 0; c < mass_[f].size(); ++c)
      if (mass_[f][c] != 0.0) out.push_back({f, c, mass_[f][c]});
  return out;
}

BoundaryMeasure& BoundaryMeasure::operator+=(const BoundaryMeasure& o) {
  if (!(domain_ == o.domain_) || h_ != o.h_) throw std::invalid_argument("BoundaryMeasure: layout mismatch");
  for (int f = 0; f < faces(); ++f)
    for (std::size_t c = 0; c < mass_[f].size(); ++c) mass_[f][c] += o.mass_[f][c];
  return *this;
}

}  // namespace rdphase
