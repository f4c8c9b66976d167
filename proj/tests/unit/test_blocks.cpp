#include <cmath>

#include "doctest.h"
#include "rdphase/blocks/blocks.hpp"

using namespace rdphase;
using namespace rdphase::blocks;

namespace {

dw::EngineConfig engine(double N) {
  dw::EngineConfig c;
  c.N = N;
  return c;
}

std::vector<std::uint8_t> row(const OpLattice& lat, int j) { return lat.omega[j]; }

}  // namespace

TEST_CASE("block config and boxes") {
  BlockConfig cfg{1.0, 1.0, 2};
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS((BlockConfig{0.0, 1.0, 2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((BlockConfig{1.0, 0.0, 2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((BlockConfig{1.0, 1.0, 1}.validate()), std::invalid_argument);
  const auto b2 = block_box(cfg, 2);
  CHECK(b2.lower(0) == doctest::Approx(-6.0));
  CHECK(b2.upper(1) == doctest::Approx(6.0));
  CHECK_THROWS_AS(block_box(cfg, 0), std::invalid_argument);
}

TEST_CASE("windows") {
  BlockConfig cfg{1.0, 1.0, 3};
  CHECK(in_window({3.0, 2.0, 0.0}, cfg, 1, 1));
  CHECK(in_window({3.0, 1.0, -1.0}, cfg, 1, 1));
  CHECK(in_window({3.0, 1.0, -1.0}, cfg, 1, 0));
  CHECK_FALSE(in_window({3.0, 3.5, 0.0}, cfg, 1, 1));
  CHECK_FALSE(in_window({3.0, 2.0, 1.5}, cfg, 1, 1));
  CHECK_FALSE(in_window({2.9, 2.0, 0.0}, cfg, 1, 1));
  CHECK(in_window({-6.0, -4.0, 0.0}, cfg, -2, -2));
  std::vector<Point> pts{{3.0, 2.0, 0.0}, {3.0, -2.0, 0.0}, {3.0, 2.5, 0.5}};
  CHECK(window_mass(pts, 2.0, cfg, 1, 1) == doctest::Approx(1.0));
  CHECK(window_mass(pts, 2.0, cfg, 1, -1) == doctest::Approx(0.5));
}

TEST_CASE("parent rule on a hand-built lattice") {
  auto lat = sites_from_tilde({{1}, {0, 1}, {1, 0, 0}, {0, 1, 1, 0}});
  CHECK(lat.provenance == Provenance::derived_from_blocks);
  CHECK(lat.generations == 3);
  CHECK(row(lat, 1) == std::vector<std::uint8_t>{0, 1});
  CHECK(row(lat, 2) == std::vector<std::uint8_t>{1, 0, 0});
  CHECK(row(lat, 3) == std::vector<std::uint8_t>{0, 1, 1, 1});
  const auto c = op_cluster(lat);
  CHECK(c.size == 2);
  CHECK(c.reached == 1);
  CHECK_FALSE(c.survived);
  CHECK(c.generations_reached == std::vector<std::uint8_t>{1, 1, 0, 0});
  CHECK_THROWS_AS(sites_from_tilde({{1}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(lat.open(1, 0), std::out_of_range);
}

TEST_CASE("all-closed tilde gives an open lattice") {
  std::vector<std::vector<std::uint8_t>> tilde;
  for (int j = 0; j <= 6; ++j) tilde.emplace_back(j + 1, 0);
  const auto lat = sites_from_tilde(tilde);
  for (int j = 1; j <= 6; ++j)
    for (int k = -j; k <= j; k += 2) CHECK(lat.open(j, k));
  const auto c = op_cluster(lat);
  CHECK(c.survived);
  CHECK(c.size == 28);
}

TEST_CASE("simulated lattices at extreme densities") {
  for (int kd : {0, 3}) {
    const auto full = op_simulate(1.0, kd, 40, 1, 2);
    const auto c = op_cluster(full);
    CHECK(c.survived);
    CHECK(c.size == 41u * 42u / 2u);
    const auto none = op_cluster(op_simulate(0.0, kd, 40, 1, 2));
    CHECK(none.reached == 0);
    CHECK(none.size == 1);
  }
  CHECK(op_simulate(0.5, 0, 5, 1, 2).provenance == Provenance::simulated_iid);
  CHECK(op_simulate(0.5, 3, 5, 1, 2).provenance == Provenance::simulated_dependent);
  CHECK_THROWS_AS(op_simulate(1.5, 0, 5, 1, 2), std::invalid_argument);
}

TEST_CASE("site density matches the requested density") {
  for (int kd : {0, 3}) {
    const auto lat = op_simulate(0.3, kd, 200, 7, 0);
    double open = 0, n = 0;
    for (int j = 1; j <= 200; ++j)
      for (auto v : lat.omega[j]) open += v, ++n;
    CHECK(open / n == doctest::Approx(0.3).epsilon(0.05));
  }
}

TEST_CASE("dependent sites are correlated at short range only") {
  const auto lat = op_simulate(0.5, 3, 300, 11, 0);
  auto corr = [&](int dj) {
    double sxy = 0, sx = 0, sy = 0, n = 0;
    for (int j = 1; j + dj <= 300; ++j)
      for (int k = -j; k <= j; k += 2) {
        const double x = lat.open(j, k), y = lat.open(j + dj, k);
        sxy += x * y, sx += x, sy += y, ++n;
      }
    return sxy / n - (sx / n) * (sy / n);
  };
  CHECK(corr(2) > 0.05);
  CHECK(std::abs(corr(4)) < 0.01);
  const auto iid = op_simulate(0.5, 0, 300, 11, 0);
  double sxy = 0, sx = 0, n = 0;
  for (int j = 1; j + 2 <= 300; ++j)
    for (int k = -j; k <= j; k += 2) sxy += iid.open(j, k) * iid.open(j + 2, k), sx += iid.open(j, k), ++n;
  CHECK(std::abs(sxy / n - 0.25) < 0.01);
}

TEST_CASE("density sweep is monotone under common random numbers") {
  const std::vector<double> ps{0.5, 0.6, 0.65, 0.7, 0.75, 0.8, 0.9};
  for (int kd : {0, 3}) {
    const auto sw = op_density_sweep(ps, kd, 150, 200, 5);
    for (std::size_t i = 1; i < sw.size(); ++i) CHECK(sw[i].survived >= sw[i - 1].survived);
    CHECK(sw.front().survived == 0);
    CHECK(sw.back().survived > 150);
  }
}

TEST_CASE("critical bracket") {
  std::vector<SweepPoint> sw;
  for (auto [p, s] : std::vector<std::pair<double, std::size_t>>{{0.6, 0}, {0.7, 100}, {0.8, 900}}) {
    SweepPoint pt{p, s, 1000, wilson_interval(s, 1000)};
    sw.push_back(pt);
  }
  auto b = bracket_critical_density(sw, 0.5, 0.5);
  CHECK(b.found);
  CHECK(b.low == doctest::Approx(0.7));
  CHECK(b.high == doctest::Approx(0.8));
  b = bracket_critical_density(sw, 0.05, 0.05);
  CHECK(b.found);
  CHECK(b.low == doctest::Approx(0.6));
  CHECK(b.high == doctest::Approx(0.7));
  b = bracket_critical_density(sw, 0.05, 0.5);
  CHECK(b.low == doctest::Approx(0.6));
  CHECK(b.high == doctest::Approx(0.8));
  CHECK_FALSE(bracket_critical_density(sw, 0.95, 0.95).found);
}

TEST_CASE("iterated exits from zero mass stay zero") {
  BlockConfig cfg{0.5, 0.5, 2};
  const auto k = Coefficients::from_params({2.0, 0.0, 2});
  const auto st = iterate_exit_measures({}, k, cfg, 3, engine(4), 1, 2);
  REQUIRE(st.size() == 3);
  for (int n = 0; n < 3; ++n) {
    CHECK(st[n].exits.empty());
    CHECK(st[n].box.upper(0) == doctest::Approx(1.5 * (n + 1)));
    for (double v : st[n].v_final.value) CHECK(v == 1.0);
  }
  const auto lat = blocks_to_sites(st, cfg, 0.0);
  CHECK_FALSE(lat.tilde_at(0, 0));
  CHECK(chain_implication_holds(lat, st));
}

TEST_CASE("iterated exits and the chain implication") {
  BlockConfig cfg{0.5, 0.25, 2};
  const auto k = Coefficients::from_params({3.0, 0.0, 2});
  const double N = 4;
  const auto init = window_particles(cfg, 2.0, N, 9);
  CHECK(init.size() == 8);
  for (const auto& x : init) CHECK(in_window(x, cfg, 0, 0));
  const double mu = initial_window_mass(init, N, cfg);
  CHECK(mu == doctest::Approx(2.0));
  int nonzero = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto st = iterate_exit_measures(init, k, cfg, 3, engine(N), 3, s);
    REQUIRE(st.size() == 3);
    for (std::size_t n = 1; n < st.size(); ++n) {
      CHECK(st[n].v_final.grid.size() > st[n - 1].v_final.grid.size());
      for (double v : st[n].v_final.value) CHECK((v >= 0 && v <= 1));
    }
    const auto lat = blocks_to_sites(st, cfg, mu);
    CHECK(lat.tilde_at(0, 0));
    CHECK(chain_implication_holds(lat, st));
    nonzero += st[0].exits.size() > 0;
  }
  CHECK(nonzero > 0);
}

TEST_CASE("life probe failure falls with initial mass at beta = 0") {
  BlockConfig cfg{0.5, 0.25, 2};
  const auto k = Coefficients::from_params({0.0, 0.0, 2});
  const auto small = life_block_probe(k, cfg, 0.5, 150, engine(4), 1);
  const auto large = life_block_probe(k, cfg, 6.0, 150, engine(4), 1);
  CHECK(small.budget_exceeded == 0);
  CHECK(large.budget_exceeded == 0);
  for (int s = 0; s < 2; ++s) {
    CHECK(small.estimate[s] > large.estimate[s]);
    CHECK(small.ci[s].low <= small.estimate[s]);
  }
  CHECK_THROWS_AS(life_block_probe(k, cfg, 0.1, 5, engine(4), 1), std::invalid_argument);
}
