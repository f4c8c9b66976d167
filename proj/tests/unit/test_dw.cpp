#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rdphase/core/stats.hpp"
#include "rdphase/dw/moments.hpp"
#include "rdphase/dw/simulate.hpp"

using namespace rdphase;
using namespace rdphase::dw;

namespace {

EngineConfig small_cfg(double N, double pitch = 0.0) {
  EngineConfig c;
  c.N = N;
  c.occupation_pitch = pitch;
  return c;
}

}  // namespace

TEST_CASE("empty system is absorbing") {
  auto dom = BoxDomain::centered(2, 1);
  ParticleSystem sys(dom, small_cfg(10, 0.5), 1, 1);
  dw_step(sys, 0.01, RateField::constant(0.0), dom);
  CHECK(sys.extinct());
  CHECK(sys.time() == doctest::Approx(0.01));
  auto r = simulate_dw(std::vector<Point>{}, RateField::constant(0.0), dom, 1.0, small_cfg(10, 0.5), 1, 1);
  CHECK(r.extinct);
  CHECK(r.exit_mass() == 0.0);
  CHECK(r.occupation_mass() == 0.0);
}

TEST_CASE("stability cap and horizon are enforced") {
  auto dom = BoxDomain::centered(2, 1);
  ParticleSystem sys(dom, small_cfg(10), 1, 1);
  sys.add({0, 0, 0}, 0, 0);
  CHECK_THROWS_AS(dw_step(sys, 0.06, RateField::constant(0.0), dom), std::invalid_argument);
  CHECK_THROWS_AS(dw_step(sys, 0.04, RateField::constant(20.0), dom), std::invalid_argument);
  CHECK_THROWS_AS(dw_step(sys, 0.01, RateField::constant(0.0), BoxDomain::centered(3, 1)), std::invalid_argument);
  CHECK_NOTHROW(dw_step(sys, 0.05, RateField::constant(0.0), dom));
  std::vector<Point> one{{0, 0, 0}};
  CHECK_THROWS_AS(simulate_dw(one, RateField::constant(0), dom, 0.0, small_cfg(10), 1, 1), std::invalid_argument);
  auto cfg = small_cfg(10);
  cfg.dt = 0.2;
  CHECK_THROWS_AS(simulate_dw(one, RateField::constant(0), dom, 1.0, cfg, 1, 1), std::invalid_argument);
}

TEST_CASE("bookkeeping identity, monotone accumulators, frozen on boundary") {
  auto dom = BoxDomain::centered(1.0, 2);
  auto cfg = small_cfg(50, 0.25);
  ParticleSystem sys(dom, cfg, 7, 3);
  for (int i = 0; i < 100; ++i) sys.add({0.1, -0.2, 0}, 0, i);
  std::vector<double> eta_vals(sys.grid()->size());
  for (std::size_t c = 0; c < eta_vals.size(); ++c) eta_vals[c] = (c % 3 == 0) ? -2.0 : 1.5;
  RateField eta(*sys.grid(), eta_vals);
  const double dt = stability_cap(cfg, eta.bound());
  std::uint64_t last_occ = 0;
  double last_exit = 0;
  for (int k = 0; k < 400 && !sys.extinct(); ++k) {
    dw_step(sys, dt, eta, dom);
    CHECK(sys.occupation_total() >= last_occ);
    CHECK(sys.exit_mass() >= last_exit);
    last_occ = sys.occupation_total();
    last_exit = sys.exit_mass();
  }
  const auto& t = sys.tally();
  CHECK(sys.alive() + t.frozen + t.eta_deaths + t.branch_deaths == t.initial + t.eta_births + t.branch_splits);
  CHECK(sys.alive_mass() == doctest::Approx(sys.alive() / 50.0));
  for (const auto& p : sys.frozen()) {
    CHECK(p.status == Status::frozen);
    CHECK(dom.contains_closed(p.x, 1e-12));
    CHECK_FALSE(dom.contains(p.x));
  }
  for (const auto& p : sys.particles()) CHECK(dom.contains(p.x));
  auto b = sys.exit_measure(0.25);
  CHECK(b.total() == doctest::Approx(sys.exit_mass()));
}

TEST_CASE("keyed randomness makes runs reproducible and order independent") {
  auto dom = BoxDomain::centered(3.0, 1);
  std::vector<Point> pts(40, Point{0, 0, 0});
  auto a = simulate_dw(pts, RateField::constant(0.3), dom, 2.0, small_cfg(20, 0.5), 11, 4);
  auto b = simulate_dw(pts, RateField::constant(0.3), dom, 2.0, small_cfg(20, 0.5), 11, 4);
  CHECK(a.alive_counts == b.alive_counts);
  CHECK(a.occupation == b.occupation);
  CHECK(a.exit_points.size() == b.exit_points.size());
  auto c = simulate_dw(pts, RateField::constant(0.3), dom, 2.0, small_cfg(20, 0.5), 11, 5);
  CHECK(a.alive_counts != c.alive_counts);
}

TEST_CASE("larger death rate gives a pathwise subset under shared randomness") {
  auto dom = BoxDomain::centered(2.0, 1);
  std::vector<Point> pts(30, Point{0.3, 0, 0});
  auto cfg = small_cfg(30, 0.5);
  cfg.dt = 1.0 / 120;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto lo = simulate_dw(pts, RateField::constant(0.5), dom, 3.0, cfg, 3, s);
    auto hi = simulate_dw(pts, RateField::constant(1.5), dom, 3.0, cfg, 3, s);
    for (std::size_t k = 0; k < std::min(lo.alive_counts.size(), hi.alive_counts.size()); ++k)
      CHECK(hi.alive_counts[k] <= lo.alive_counts[k]);
    for (std::size_t c = 0; c < lo.occupation.size(); ++c) CHECK(hi.occupation[c] <= lo.occupation[c]);
    CHECK(hi.exit_points.size() <= lo.exit_points.size());
  }
}

TEST_CASE("occupation density consistency") {
  auto dom = BoxDomain::centered(2.0, 1);
  std::vector<Point> pts(50, Point{0, 0, 0});
  auto r = simulate_dw(pts, RateField::constant(0.0), dom, 1.0, small_cfg(50, 0.125), 9, 2, {0.5});
  CHECK(occupation_density(r, 0.3, 0.3, {0, 0, 0}, 0.125) == 0.0);
  double path_integral = 0.0;
  for (std::size_t k = 0; k + 1 < r.alive_counts.size(); ++k) path_integral += r.alive_counts[k] / r.N * r.dt;
  double dens = 0.0;
  for (double x = -2.0; x < 2.0; x += 0.125) dens += occupation_density(r, 0.0, 1.0, {x, 0, 0}, 0.125) * 0.125;
  CHECK(dens == doctest::Approx(path_integral).epsilon(1e-12));
  const double a = r.occupation_between(0.0, 0.5).total(), b = r.occupation_between(0.5, 1.0).total();
  CHECK(a + b == doctest::Approx(r.occupation_mass()).epsilon(1e-12));
  CHECK_THROWS_AS(occupation_density(r, 0.0, 1.0, {3, 0, 0}, 0.125), std::invalid_argument);
  CHECK_THROWS_AS(occupation_density(r, 0.0, 0.7, {0, 0, 0}, 0.125), std::invalid_argument);
}

TEST_CASE("mean mass decays like exp(-gamma t)") {
  RunningStats s;
  std::vector<Point> pts(20, Point{0, 0, 0});
  for (std::uint64_t rep = 0; rep < 2000; ++rep) {
    auto r = simulate_dw(pts, RateField::constant(1.0), BoxDomain::unbounded(1), 1.0, small_cfg(20), 5, rep);
    s.push(r.final_mass());
  }
  CHECK(std::abs(s.mean() - std::exp(-1.0)) < 4 * s.standard_error());
}

TEST_CASE("moment oracles") {
  Grid g(BoxDomain::centered(4, 1), 0.25);
  auto mu = FiniteMeasure::point_mass(g, {0.01, 0, 0}, 1.0);
  std::vector<double> one(g.size(), 1.0);
  SemigroupConfig free{1.0, 0.0, BoundaryMode::free};
  CHECK(moment_oracle_first(mu, one, 1.5, 0.7, free) == doctest::Approx(std::exp(-0.7 * 1.5)).epsilon(1e-10));
  CHECK(moment_oracle_second(mu, one, one, 1.0, 1.0, 0.0, free) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(moment_oracle_second(mu, one, one, 2.5, 2.5, 0.0, free) == doctest::Approx(3.5).epsilon(1e-10));
  const double kill = moment_oracle_first(mu, one, 1.0, 0.0);
  CHECK(kill < 1.0);
  CHECK(kill > 0.9);
  // gamma > 0 second moment, free walls: e^{-2gt} + int_0^t e^{-g r} e^{-2 g (t - r)} dr.
  const double gm = 0.5, t = 1.0;
  const double expect = std::exp(-2 * gm * t) + (std::exp(-gm * t) - std::exp(-2 * gm * t)) / gm;
  CHECK(moment_oracle_second(mu, one, one, t, t, gm, free) == doctest::Approx(expect).epsilon(1e-3));
  SemigroupConfig bad{1.0, 1.0, BoundaryMode::dirichlet};
  CHECK_THROWS_AS(moment_oracle_first(mu, one, 1.0, 0.0, bad), std::invalid_argument);
}

TEST_CASE("heat semigroup matches the Gaussian kernel away from walls") {
  Grid g(BoxDomain::centered(8, 1), 0.05);
  auto mu = FiniteMeasure::point_mass(g, {0.01, 0, 0}, 1.0);
  std::vector<double> ind(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (std::abs(g.cell_center(c)[0]) < 1.0) ind[c] = 1.0;
  // P(|B| < 1) with variance 2t = 1.
  CHECK(moment_oracle_first(mu, ind, 0.5, 0.0) == doctest::Approx(std::erf(1 / std::numbers::sqrt2)).epsilon(5e-3));
}
