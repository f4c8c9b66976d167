#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/rng.hpp"
#include "rdphase/nutrient/nutrient.hpp"

namespace rdphase::nutrient {

NutrientField NutrientField::constant(const Grid& g, double v) {
  NutrientField f{g, std::vector<double>(g.size(), v)};
  f.validate();
  return f;
}

NutrientField NutrientField::from_function(const Grid& g, const std::function<double(const Point&)>& fn) {
  NutrientField f{g, std::vector<double>(g.size())};
  for (std::size_t c = 0; c < g.size(); ++c) f.value[c] = fn(g.cell_center(c));
  f.validate();
  return f;
}

void NutrientField::validate() const {
  if (value.size() != grid.size()) throw std::invalid_argument("NutrientField: size mismatch");
  for (double v : value)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("NutrientField: nutrient level must lie in [0, 1]");
}

NutrientField embed_field(const NutrientField& inner, const BoxDomain& outer, double fill) {
  if (!outer.contains_box(inner.grid.domain())) throw std::invalid_argument("embed_field: outer must contain inner");
  NutrientField f = NutrientField::constant(Grid(outer, inner.grid.pitch()), fill);
  for (std::size_t c = 0; c < inner.grid.size(); ++c) {
    const std::size_t o = f.grid.cell_of(inner.grid.cell_center(c));
    const Point lo = f.grid.cell_lower(o), ilo = inner.grid.cell_lower(c);
    for (int i = 0; i < f.grid.dim(); ++i)
      if (std::abs(lo[i] - ilo[i]) > 1e-9 * f.grid.pitch()) throw std::invalid_argument("embed_field: cells do not align");
    f.value[o] = inner.value[c];
  }
  return f;
}

namespace {

double pitch_with_limit(const BoxDomain& domain, double limit) {
  if (!domain.bounded()) throw std::invalid_argument("package grid: domain must be bounded");
  if (!(limit > 0)) throw std::invalid_argument("package grid: N must be > 0");
  const double w = domain.width(0);
  const double pitch = w / std::ceil(w / limit - 1e-9);
  for (int i = 1; i < domain.dim(); ++i) {
    const double r = domain.width(i) / pitch;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
      throw std::invalid_argument("package grid: box widths must share a common pitch");
  }
  return pitch;
}

}  // namespace

double package_pitch(const BoxDomain& domain, double N) {
  return pitch_with_limit(domain, 1.0 / (N * std::sqrt(static_cast<double>(domain.dim()))));
}

double side_pitch(const BoxDomain& domain, double N) { return pitch_with_limit(domain, 1.0 / N); }

std::uint32_t NutrientPackages::cell_of_package(std::uint64_t k) const {
  if (k >= total()) throw std::out_of_range("NutrientPackages: package id out of range");
  const auto it = std::upper_bound(offset.begin(), offset.end(), k);
  auto c = static_cast<std::uint32_t>(it - offset.begin() - 1);
  while (count[c] == 0 || k >= offset[c] + count[c]) ++c;
  return c;
}

FiniteMeasure NutrientPackages::as_measure() const {
  FiniteMeasure m(grid);
  for (std::size_t c = 0; c < count.size(); ++c)
    if (count[c]) m.set(c, count[c] * package_integral());
  return m;
}

NutrientField NutrientPackages::as_field() const {
  NutrientField f{grid, std::vector<double>(grid.size())};
  for (std::size_t c = 0; c < count.size(); ++c) f.value[c] = level(c);
  return f;
}

NutrientPackages packages_from_counts(const Grid& g, double N, std::vector<std::uint32_t> count) {
  if (!(N > 0)) throw std::invalid_argument("packages: N must be > 0");
  if (count.size() != g.size()) throw std::invalid_argument("packages: count size mismatch");
  NutrientPackages p;
  p.grid = g;
  p.N = N;
  p.offset.resize(count.size());
  std::uint64_t run = 0;
  for (std::size_t c = 0; c < count.size(); ++c) {
    if (count[c] > N * (1 + 1e-12)) throw std::invalid_argument("packages: level above 1 in a cell");
    p.offset[c] = run;
    run += count[c];
  }
  p.count = std::move(count);
  return p;
}

NutrientPackages build_packages(const NutrientField& f, double N) {
  f.validate();
  if (!(N > 0)) throw std::invalid_argument("build_packages: N must be > 0");
  const double diam = f.grid.pitch() * std::sqrt(static_cast<double>(f.grid.dim()));
  if (diam > (1.0 / N) * (1 + 1e-9)) throw std::invalid_argument("build_packages: cell diameter exceeds 1/N");
  std::vector<std::uint32_t> count(f.grid.size());
  for (std::size_t c = 0; c < count.size(); ++c)
    count[c] = static_cast<std::uint32_t>(std::floor(N * f.value[c] + 1e-9));
  return packages_from_counts(f.grid, N, std::move(count));
}

NutrientPackages build_packages(const BoxDomain& domain, double N, const std::function<double(const Point&)>& f) {
  const Grid g(domain, package_pitch(domain, N));
  return build_packages(NutrientField::from_function(g, f), N);
}

NutrientPackages embed_packages(const NutrientPackages& inner, const BoxDomain& outer, double fill) {
  if (!outer.contains_box(inner.grid.domain())) throw std::invalid_argument("embed_packages: outer must contain inner");
  if (!(fill >= 0 && fill <= 1)) throw std::invalid_argument("embed_packages: fill must lie in [0, 1]");
  const Grid g(outer, inner.grid.pitch());
  std::vector<std::uint32_t> count(g.size(), static_cast<std::uint32_t>(std::floor(inner.N * fill + 1e-9)));
  for (std::size_t c = 0; c < inner.grid.size(); ++c) {
    const Point x = inner.grid.cell_center(c);
    const std::size_t o = g.cell_of(x);
    const Point lo = g.cell_lower(o), ilo = inner.grid.cell_lower(c);
    for (int i = 0; i < g.dim(); ++i)
      if (std::abs(lo[i] - ilo[i]) > 1e-9 * g.pitch()) throw std::invalid_argument("embed_packages: cells do not align");
    count[o] = inner.count[c];
  }
  return packages_from_counts(g, inner.N, std::move(count));
}

std::vector<double> cell_thresholds(const NutrientPackages& pkgs, std::uint32_t cell, std::uint64_t seed,
                                    std::uint64_t stream) {
  const KeyedRng key(hash_words({seed, stream, 0x7468726573ULL}));
  const std::uint32_t n = pkgs.count.at(cell);
  std::vector<double> e(n);
  double level = 0.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    level += key.exponential(cell, i) / static_cast<double>(n - i);
    e[i] = level;
  }
  return e;
}

std::vector<Point> package_particles(const NutrientPackages& pkgs, std::uint64_t k, double reaction,
                                     std::uint64_t seed, std::uint64_t stream) {
  const KeyedRng key(hash_words({seed, stream, 0x696E6A656374ULL}));
  const std::uint32_t cell = pkgs.cell_of_package(k);
  const double expected = reaction * pkgs.grid.cell_volume();
  auto n = static_cast<std::uint64_t>(std::floor(expected));
  if (key.uniform(k, 0) < expected - std::floor(expected)) ++n;
  const Point lo = pkgs.grid.cell_lower(cell);
  const double h = pkgs.grid.pitch();
  std::vector<Point> pts(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const Philox4x32 r = key.block(k, i + 1);
    Point p{0, 0, 0};
    for (int a = 0; a < pkgs.grid.dim(); ++a) p[a] = lo[a] + h * u32_to_unit(r[a]);
    pts[i] = p;
  }
  return pts;
}

}  // namespace rdphase::nutrient
