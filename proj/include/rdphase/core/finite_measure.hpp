#pragma once
#include <vector>

#include "rdphase/core/grid.hpp"

namespace rdphase {

struct ScalingMap;

class FiniteMeasure {
 public:
  FiniteMeasure() = default;
  explicit FiniteMeasure(const Grid& grid);

  static FiniteMeasure point_mass(const Grid& grid, const Point& x, double mass);
  static FiniteMeasure uniform(const Grid& grid, double density);

  const Grid& grid() const { return grid_; }
  const BoxDomain& domain() const { return grid_.domain(); }
  double cell_size() const { return grid_.pitch(); }
  std::size_t size() const { return mass_.size(); }

  double operator[](std::size_t c) const { return mass_[c]; }
  const std::vector<double>& masses() const { return mass_; }
  void set(std::size_t c, double m);
  void add(std::size_t c, double m);
  void add_at(const Point& x, double m);

  double total() const;
  // Mass in [lo, hi), assuming mass is spread uniformly inside each cell.
  double box_mass(const Point& lo, const Point& hi) const;
  // Integral of a per-cell function.
  double integrate(const std::vector<double>& g) const;

  FiniteMeasure& operator+=(const FiniteMeasure& o);
  FiniteMeasure scaled(double factor) const;

 private:
  Grid grid_;
  std::vector<double> mass_;
};

// A(A) -> (a / c^d) mu(cA) on the contracted grid c^{-1} D with pitch h / c.
FiniteMeasure measure_pushforward(const FiniteMeasure& mu, const ScalingMap& m);

}  // namespace rdphase
