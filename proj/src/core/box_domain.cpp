#include "rdphase/core/box_domain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdphase {

BoxDomain::BoxDomain(const std::vector<double>& lower, const std::vector<double>& upper) {
  if (lower.size() != upper.size() || lower.empty() || lower.size() > kMaxDim)
    throw std::invalid_argument("BoxDomain: dimension must be 1..3 and match");
  d_ = static_cast<int>(lower.size());
  bounded_ = true;
  for (int i = 0; i < kMaxDim; ++i) {
    if (i < d_) {
      if (!(lower[i] < upper[i])) throw std::invalid_argument("BoxDomain: lower must be < upper");
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) bounded_ = false;
      lo_[i] = lower[i];
      hi_[i] = upper[i];
    } else {
      lo_[i] = 0.0;
      hi_[i] = 0.0;
    }
  }
}

BoxDomain BoxDomain::centered(double half_width, int d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("BoxDomain: dimension must be 1..3");
  return BoxDomain(std::vector<double>(d, -half_width), std::vector<double>(d, half_width));
}

BoxDomain BoxDomain::unbounded(int d) {
  const double inf = std::numeric_limits<double>::infinity();
  return centered(inf, d);
}

double BoxDomain::volume() const {
  double v = 1.0;
  for (int i = 0; i < d_; ++i) v *= width(i);
  return v;
}

bool BoxDomain::contains(const Point& x) const {
  for (int i = 0; i < d_; ++i)
    if (!(x[i] > lo_[i] && x[i] < hi_[i])) return false;
  return true;
}

bool BoxDomain::contains_closed(const Point& x, double tol) const {
  for (int i = 0; i < d_; ++i)
    if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) return false;
  return true;
}

bool BoxDomain::contains_box(const BoxDomain& o) const {
  if (o.d_ != d_) return false;
  for (int i = 0; i < d_; ++i)
    if (o.lo_[i] < lo_[i] || o.hi_[i] > hi_[i]) return false;
  return true;
}

BoxDomain BoxDomain::contracted(double c) const {
  if (!(c > 0)) throw std::invalid_argument("BoxDomain: contraction factor must be > 0");
  std::vector<double> lo(d_), hi(d_);
  for (int i = 0; i < d_; ++i) {
    lo[i] = lo_[i] / c;
    hi[i] = hi_[i] / c;
  }
  return BoxDomain(lo, hi);
}

bool BoxDomain::operator==(const BoxDomain& o) const {
  if (d_ != o.d_) return false;
  for (int i = 0; i < d_; ++i)
    if (lo_[i] != o.lo_[i] || hi_[i] != o.hi_[i]) return false;
  return true;
}

}  // namespace rdphase
