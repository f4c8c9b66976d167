#pragma once
#include <array>
#include <vector>

namespace rdphase {

constexpr int kMaxDim = 3;
using Point = std::array<double, kMaxDim>;

// Open box prod_i (lower_i, upper_i). An unbounded box has infinite bounds.
class BoxDomain {
 public:
  BoxDomain() = default;
  BoxDomain(const std::vector<double>& lower, const std::vector<double>& upper);

  static BoxDomain centered(double half_width, int d);
  static BoxDomain unbounded(int d);

  int dim() const { return d_; }
  double lower(int i) const { return lo_[i]; }
  double upper(int i) const { return hi_[i]; }
  double width(int i) const { return hi_[i] - lo_[i]; }
  bool bounded() const { return bounded_; }
  double volume() const;

  bool contains(const Point& x) const;
  bool contains_closed(const Point& x, double tol = 0.0) const;
  bool contains_box(const BoxDomain& other) const;

  // Image under x -> x / c.
  BoxDomain contracted(double c) const;

  bool operator==(const BoxDomain& o) const;

 private:
  int d_ = 1;
  Point lo_{0, 0, 0};
  Point hi_{1, 1, 1};
  bool bounded_ = true;
};

}  // namespace rdphase
