#pragma once
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rdphase/core/box_domain.hpp"

namespace rdphase {

// Face f = 2 * axis + side (side 0 = lower, 1 = upper).
struct BoundaryEntry {
  int face;
  std::size_t cell;
  double mass;
};

// Mass binned on the 2d faces of a bounded box, each face carrying a (d-1)-dim grid.
class BoundaryMeasure {
 public:
  BoundaryMeasure() = default;
  BoundaryMeasure(const BoxDomain& domain, double pitch);

  const BoxDomain& domain() const { return domain_; }
  double pitch() const { return h_; }
  int faces() const { return 2 * domain_.dim(); }
  std::size_t face_cells(int face) const { return mass_[face].size(); }

  // Adds mass at the face point nearest to x (x must lie on the closed boundary).
  void add(const Point& x, double m);
  void add_cell(int face, std::size_t cell, double m);
  double cell_mass(int face, std::size_t cell) const { return mass_[face][cell]; }

  int face_of(const Point& x) const;
  std::size_t surface_cell(int face, const Point& x) const;
  // Center of a surface cell in full coordinates (face coordinate fixed).
  Point surface_cell_center(int face, std::size_t cell) const;

  double total() const;
  double face_total(int face) const;
  // Mass on the face inside the box prod_{i != axis} [lo_i, hi_i]; fractional overlap.
  double window_mass(int face, const Point& lo, const Point& hi) const;

  std::vector<BoundaryEntry> entries() const;
  BoundaryMeasure& operator+=(const BoundaryMeasure& o);

 private:
  BoxDomain domain_;
  double h_ = 1.0;
  std::vector<std::array<std::int64_t, kMaxDim>> n_;  // per face, cells along each axis
  std::vector<std::vector<double>> mass_;
};

}  // namespace rdphase
