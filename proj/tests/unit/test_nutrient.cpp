#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rdphase/core/stats.hpp"
#include "rdphase/dw/simulate.hpp"
#include "rdphase/nutrient/nutrient.hpp"

using namespace rdphase;
using namespace rdphase::nutrient;

namespace {

dw::EngineConfig engine(double N) {
  dw::EngineConfig c;
  c.N = N;
  return c;
}

std::vector<Point> sorted(std::vector<Point> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("build_packages") {
  auto dom = BoxDomain::centered(1, 1);
  auto zero = build_packages(dom, 10, [](const Point&) { return 0.0; });
  CHECK(zero.total() == 0);

  // One cell of width 0.1 at N = 10.
  BoxDomain cell({0.0}, {0.1});
  auto full = build_packages(cell, 10, [](const Point&) { return 1.0; });
  REQUIRE(full.grid.size() == 1);
  CHECK(full.total() == 10);
  CHECK(full.package_integral() == doctest::Approx(0.1 / 10));
  auto half = build_packages(cell, 10, [](const Point&) { return 0.5; });
  CHECK(half.total() == 5);
  CHECK(half.level(0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(build_packages(dom, 10, [](const Point&) { return 1.5; }), std::invalid_argument);
  CHECK_THROWS_AS(build_packages(dom, 10, [](const Point&) { return -0.1; }), std::invalid_argument);
  CHECK_THROWS_AS(build_packages(NutrientField::constant(Grid(dom, 0.5), 1.0), 10), std::invalid_argument);
}

TEST_CASE("package invariants and L1 convergence") {
  auto f = [](const Point& x) { return 0.5 + 0.4 * std::sin(2 * x[0]) * std::cos(x[1]); };
  double prev = 1e9;
  for (double N : {4.0, 8.0, 16.0, 32.0}) {
    auto dom = BoxDomain::centered(1, 2);
    auto p = build_packages(dom, N, f);
    const double diam = p.grid.pitch() * std::sqrt(2.0);
    CHECK(diam <= 1.0 / N + 1e-12);
    CHECK(p.package_integral() <= std::pow(N, -3.0) + 1e-15);
    double l1 = 0;
    for (std::size_t c = 0; c < p.grid.size(); ++c) {
      CHECK(p.level(c) <= 1.0);
      l1 += std::abs(p.level(c) - f(p.grid.cell_center(c))) * p.grid.cell_volume();
    }
    CHECK(l1 <= 4.0 / N + 1e-12);
    CHECK(l1 < prev);
    prev = l1;
  }
}

TEST_CASE("embed_packages keeps inner counts and fills the rest") {
  auto inner = build_packages(BoxDomain::centered(1, 1), 10, [](const Point& x) { return x[0] > 0 ? 0.3 : 0.7; });
  auto outer = embed_packages(inner, BoxDomain::centered(2, 1), 1.0);
  CHECK(outer.total() == inner.total() + 20 * 10);
  for (std::size_t c = 0; c < inner.grid.size(); ++c)
    CHECK(outer.count[outer.grid.cell_of(inner.grid.cell_center(c))] == inner.count[c]);
  for (std::uint64_t k = 0; k < outer.total(); k += 7) {
    const auto c = outer.cell_of_package(k);
    CHECK(k >= outer.offset[c]);
    CHECK(k < outer.offset[c] + outer.count[c]);
  }
}

TEST_CASE("approximation: no reaction gives the plain branching system pathwise") {
  auto dom = BoxDomain::centered(2, 1);
  const double N = 20;
  auto pk = build_packages(dom, N, [](const Point&) { return 1.0; });
  Coefficients k = Coefficients::from_params({0.0, 0.5, 1});
  auto cfg = engine(N);
  auto init = dw::point_mass_particles({0.3, 0, 0}, 1.0, N);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto a = simulate_nutrient_approx(init, pk, k, cfg, 5, s);
    CHECK(a.tally.injected == 0);
    auto dcfg = cfg;
    dcfg.occupation_pitch = pk.grid.pitch();
    auto b = dw::simulate_dw(init, dw::RateField::constant(0.5), dom, std::numeric_limits<double>::infinity(), dcfg,
                             5, s);
    CHECK(a.occupation == b.occupation);
    CHECK(a.exit_points == b.exit_points);
  }
}

TEST_CASE("approximation: empty start triggers nothing") {
  auto dom = BoxDomain::centered(1, 1);
  auto pk = build_packages(dom, 10, [](const Point&) { return 0.8; });
  auto r = simulate_nutrient_approx({}, pk, Coefficients::from_params({2, 0, 1}), engine(10), 1, 1,
                                    {.horizon = 1.0, .snapshot_times = {}, .pretriggered = {}, .component_base = 0});
  CHECK(r.triggers.empty());
  CHECK(r.extinct);
  for (std::size_t c = 0; c < pk.grid.size(); ++c) CHECK(r.v_final[c] == doctest::Approx(0.8));
}

TEST_CASE("approximation: trigger set grows and nutrient only decreases") {
  auto dom = BoxDomain::centered(2, 1);
  const double N = 20;
  auto pk = build_packages(dom, N, [](const Point&) { return 1.0; });
  Coefficients k = Coefficients::from_params({3.0, 0.2, 1});
  auto init = dw::point_mass_particles({0, 0, 0}, 1.0, N);
  ReactionOptions opt;
  opt.horizon = 4.0;
  opt.snapshot_times = {0.5, 1.0, 2.0, 3.0, 4.0};
  int with_triggers = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto r = simulate_nutrient_approx(init, pk, k, engine(N), 3, s, opt);
    if (!r.triggers.empty()) ++with_triggers;
    std::vector<std::uint64_t> ids;
    for (std::size_t i = 0; i < r.triggers.size(); ++i) {
      ids.push_back(r.triggers[i].package);
      if (i) CHECK(r.triggers[i].time >= r.triggers[i - 1].time);
    }
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
    std::vector<double> prev(pk.grid.size(), 1.0);
    for (const auto& v : r.v_snapshots) {
      for (std::size_t c = 0; c < v.size(); ++c) CHECK(v[c] <= prev[c]);
      prev = v;
    }
    const auto& t = r.tally;
    CHECK(r.alive_counts.back() + t.frozen + t.eta_deaths + t.branch_deaths ==
          t.initial + t.injected + t.eta_births + t.branch_splits);
  }
  CHECK(with_triggers > 10);
}

TEST_CASE("dynamic trigger set equals the static smallest fixed point") {
  auto dom = BoxDomain::centered(1, 1);
  const double N = 15;
  auto pk = build_packages(dom, N, [](const Point& x) { return x[0] < 0.3 ? 1.0 : 0.5; });
  Coefficients k = Coefficients::from_params({6.0, 0.5, 1});
  auto init = dw::point_mass_particles({0, 0, 0}, 1.0, N);
  int nontrivial = 0;
  for (std::uint64_t s = 0; s < 12; ++s) {
    auto dyn = simulate_nutrient_approx(init, pk, k, engine(N), 17, s);
    auto sc = build_static(init, pk, k, engine(N), 17, s);
    auto st = solve_static(sc, pk);
    std::vector<std::uint64_t> dset;
    for (const auto& t : dyn.triggers) dset.push_back(t.package);
    std::sort(dset.begin(), dset.end());
    std::vector<std::uint64_t> sset(st.set.begin(), st.set.end());
    CHECK(dset == sset);
    CHECK(dyn.occupation == st.occupation);
    CHECK(sorted(dyn.exit_points) == sorted(st.exit_points));
    CHECK(dyn.remaining == st.remaining);
    if (dset.size() > 3) ++nontrivial;

    // Sum rule: total occupation is the base plus the triggered components.
    std::vector<std::uint64_t> sum = sc.instance.base;
    for (auto a : st.set)
      for (const auto& e : sc.components[a].occupation) sum[e.cell] += e.count;
    CHECK(sum == st.occupation);
  }
  CHECK(nontrivial > 5);
}

TEST_CASE("nutrient converted to mass dominates pathwise") {
  auto dom = BoxDomain::centered(1, 1);
  const double N = 15;
  auto pk = build_packages(dom, N, [](const Point&) { return 1.0; });
  Coefficients k = Coefficients::from_params({5.0, 0.5, 1});
  auto init = dw::point_mass_particles({0, 0, 0}, 1.0, N);
  std::vector<std::uint64_t> g;
  for (std::uint64_t a = 0; a < pk.total(); a += 3) g.push_back(a);
  ReactionOptions conv;
  conv.pretriggered = g;
  for (std::uint64_t s = 0; s < 15; ++s) {
    auto a = simulate_nutrient_approx(init, pk, k, engine(N), 23, s);
    auto b = simulate_nutrient_approx(init, pk, k, engine(N), 23, s, conv);
    for (std::size_t c = 0; c < a.occupation.size(); ++c) CHECK(a.occupation[c] <= b.occupation[c]);
    CHECK(a.exit_points.size() <= b.exit_points.size());
  }
}

TEST_CASE("direct simulator: no nutrient gives the plain branching system pathwise") {
  auto dom = BoxDomain::centered(2, 1);
  const double N = 20;
  Grid g(dom, side_pitch(dom, N));
  auto f = NutrientField::constant(g, 0.0);
  Coefficients k = Coefficients::from_params({2.0, 0.5, 1});
  auto init = dw::point_mass_particles({-0.4, 0, 0}, 1.0, N);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto a = simulate_direct(init, f, k, engine(N), 8, s);
    auto cfg = engine(N);
    cfg.occupation_pitch = g.pitch();
    auto b = dw::simulate_dw(init, dw::RateField::constant(0.5), dom, std::numeric_limits<double>::infinity(), cfg,
                             8, s);
    CHECK(a.occupation == b.occupation);
    CHECK(a.exit_points == b.exit_points);
  }
  CHECK_THROWS_AS(simulate_direct(init, NutrientField::constant(Grid(dom, 0.1), 1.0), k, engine(N), 1, 1),
                  std::invalid_argument);
}

TEST_CASE("direct simulator: nutrient decreases and balanced rates give a supermartingale") {
  auto dom = BoxDomain::centered(2, 1);
  const double N = 20;
  Grid g(dom, side_pitch(dom, N));
  auto f = NutrientField::constant(g, 1.0);
  Coefficients k = Coefficients::from_params({1.0, 1.0, 1});
  auto init = dw::point_mass_particles({0, 0, 0}, 1.0, N);
  ReactionOptions opt;
  opt.horizon = 2.0;
  opt.snapshot_times = {0.25, 0.5, 1.0, 2.0};
  std::vector<RunningStats> mass(opt.snapshot_times.size() + 1);
  for (std::uint64_t s = 0; s < 400; ++s) {
    auto r = simulate_direct(init, f, k, engine(N), 4, s, opt);
    std::vector<double> prev(g.size(), 1.0);
    for (const auto& v : r.v_snapshots) {
      for (std::size_t c = 0; c < v.size(); ++c) CHECK(v[c] <= prev[c]);
      prev = v;
    }
    mass[0].push(r.alive_counts[0] / N);
    for (std::size_t i = 0; i < r.snapshot_times.size(); ++i) {
      const auto step = static_cast<std::size_t>(std::llround(r.snapshot_times[i] / r.dt));
      mass[i + 1].push(step < r.alive_counts.size() ? r.alive_counts[step] / N : 0.0);
    }
  }
  for (std::size_t i = 1; i < mass.size(); ++i) {
    const double se = std::hypot(mass[i].standard_error(), mass[i - 1].standard_error());
    CHECK(mass[i].mean() <= mass[i - 1].mean() + 3 * se);
  }
  CHECK(mass.back().mean() < mass.front().mean());
}

TEST_CASE("direct simulator: local extinction with killing") {
  auto dom = BoxDomain::centered(2, 1);
  const double N = 20;
  Grid g(dom, side_pitch(dom, N));
  auto f = NutrientField::constant(g, 1.0);
  Coefficients k = Coefficients::from_params({2.0, 0.5, 1});
  auto init = dw::point_mass_particles({0, 0, 0}, 1.0, N);
  ReactionOptions opt;
  opt.horizon = 8.0;
  std::array<int, 3> alive{0, 0, 0};
  const std::array<double, 3> times{1.0, 3.0, 7.0};
  const int R = 300;
  for (std::uint64_t s = 0; s < R; ++s) {
    auto r = simulate_direct(init, f, k, engine(N), 6, s, opt);
    for (int i = 0; i < 3; ++i) {
      const auto step = static_cast<std::size_t>(std::llround(times[i] / r.dt));
      if (step < r.alive_counts.size() && r.alive_counts[step] > 0) ++alive[i];
    }
  }
  CHECK(alive[0] > alive[1]);
  CHECK(alive[1] > alive[2]);
  CHECK(wilson_interval(alive[2], R).high < wilson_interval(alive[0], R).low);
}
