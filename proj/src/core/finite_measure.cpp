#include "rdphase/core/finite_measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/params.hpp"

namespace rdphase {

FiniteMeasure::FiniteMeasure(const Grid& grid) : grid_(grid), mass_(grid.size(), 0.0) {}

FiniteMeasure FiniteMeasure::point_mass(const Grid& grid, const Point& x, double mass) {
  FiniteMeasure m(grid);
  m.add_at(x, mass);
  return m;
}

FiniteMeasure FiniteMeasure::uniform(const Grid& grid, double density) {
  FiniteMeasure m(grid);
  for (std::size_t c = 0; c < m.size(); ++c) m.set(c, density * grid.cell_volume());
  return m;
}

void FiniteMeasure::set(std::size_t c, double m) {
  if (!(m >= 0) || !std::isfinite(m)) throw std::invalid_argument("FiniteMeasure: mass must be finite and >= 0");
  mass_.at(c) = m;
}

void FiniteMeasure::add(std::size_t c, double m) { set(c, mass_.at(c) + m); }

void FiniteMeasure::add_at(const Point& x, double m) {
  if (!domain().contains_closed(x)) throw std::invalid_argument("FiniteMeasure: point outside domain");
  add(grid_.cell_of(x), m);
}

double FiniteMeasure::total() const {
  double s = 0.0;
  for (double m : mass_) s += m;
  return s;
}

double FiniteMeasure::box_mass(const Point& lo, const Point& hi) const {
  // Restrict the scan to the index range touching the box.
  const int d = grid_.dim();
  std::array<std::int64_t, kMaxDim> a{0, 0, 0}, b{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    const double h = grid_.pitch();
    a[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((lo[i] - domain().lower(i)) / h)), 0,
                                    grid_.cells(i) - 1);
    b[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((hi[i] - domain().lower(i)) / h)), 0,
                                    grid_.cells(i) - 1);
    if (hi[i] <= domain().lower(i) || lo[i] >= domain().upper(i)) return 0.0;
  }
  double s = 0.0;
  std::array<std::int64_t, kMaxDim> idx{0, 0, 0};
  for (idx[2] = a[2]; idx[2] <= b[2]; ++idx[2])
    for (idx[1] = a[1]; idx[1] <= b[1]; ++idx[1])
      for (idx[0] = a[0]; idx[0] <= b[0]; ++idx[0]) {
        const std::size_t c = grid_.flatten(idx);
        if (mass_[c] == 0.0) continue;
        s += mass_[c] * grid_.overlap_fraction(c, lo, hi);
      }
  return s;
}

double FiniteMeasure::integrate(const std::vector<double>& g) const {
  if (g.size() != mass_.size()) throw std::invalid_argument("FiniteMeasure: function size mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < mass_.size(); ++c) s += mass_[c] * g[c];
  return s;
}

FiniteMeasure& FiniteMeasure::operator+=(const FiniteMeasure& o) {
  if (!(grid_ == o.grid_)) throw std::invalid_argument("FiniteMeasure: grid mismatch");
  for (std::size_t c = 0; c < mass_.size(); ++c) mass_[c] += o.mass_[c];
  return *this;
}

FiniteMeasure FiniteMeasure::scaled(double factor) const {
  if (!(factor >= 0)) throw std::invalid_argument("FiniteMeasure: negative scale");
  FiniteMeasure r = *this;
  for (double& m : r.mass_) m *= factor;
  return r;
}

FiniteMeasure measure_pushforward(const FiniteMeasure& mu, const ScalingMap& m) {
  m.validate();
  const Grid& g = mu.grid();
  Grid target(g.domain().contracted(m.c), g.pitch() / m.c);
  const double factor = m.a / std::pow(m.c, g.dim());
  FiniteMeasure r(target);
  // Cell c of the source maps onto cell c of the target: same index layout.
  for (std::size_t c = 0; c < mu.size(); ++c) r.set(c, mu[c] * factor);
  return r;
}

}  // namespace rdphase
