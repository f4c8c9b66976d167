#include <cmath>

#include "doctest.h"
#include "rdphase/wave/wave.hpp"

using namespace rdphase::wave;

TEST_CASE("eigenvalue examples") {
  auto o = eigenvalues(Equilibrium::origin, 1.5, 0.0);
  CHECK(o.classification == "real-split");
  CHECK(o.first.real() == doctest::Approx(-1.5));
  CHECK(o.second.real() == doctest::Approx(0.0));
  auto d = eigenvalues(Equilibrium::nutrient_one, 2.0, 0.0);
  CHECK(d.discriminant == 0.0);
  CHECK(d.classification == "real-double");
  CHECK(d.first.real() == doctest::Approx(-1.0));
  CHECK(d.second.real() == doctest::Approx(-1.0));
  auto z = eigenvalues(Equilibrium::nutrient_one, 1.0, 0.0);
  CHECK(z.complex);
  CHECK(z.classification == "complex");
  CHECK(z.first.imag() != 0.0);
  auto s = eigenvalues(Equilibrium::origin, 1.0, 0.5);
  CHECK(s.first.real() < 0);
  CHECK(s.second.real() > 0);
  CHECK_THROWS_AS(eigenvalues(Equilibrium::origin, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("eigenvalue sums and products match the quadratic") {
  for (int at = 0; at < 2; ++at)
    for (double c = 0.05; c < 5; c += 0.173)
      for (double g = 0.0; g <= 1.5; g += 0.0625) {
        const auto e = eigenvalues(at ? Equilibrium::nutrient_one : Equilibrium::origin, c, g);
        const double q = at ? 1.0 - g : -g;
        const auto sum = e.first + e.second, prod = e.first * e.second;
        CHECK(std::abs(sum.real() + c) <= 1e-12 * std::max(1.0, c));
        CHECK(std::abs(sum.imag()) <= 1e-12);
        CHECK(std::abs(prod.real() - q) <= 1e-12 * std::max(1.0, std::abs(q) + c * c));
        CHECK(std::abs(prod.imag()) <= 1e-12);
      }
}

TEST_CASE("admissibility examples") {
  CHECK(wave_admissible(2.0, 0.0).admissible);
  CHECK(wave_admissible(0.1, 1.0).admissible);
  CHECK(wave_admissible(1.0, 0.75).admissible);
  CHECK_FALSE(wave_admissible(1.0, 0.0).admissible);
  const auto hi = wave_admissible(0.5, 1.2);
  CHECK(hi.admissible);
  CHECK(hi.gamma_above_one);
  CHECK_FALSE(wave_admissible(2.0, 0.5).gamma_above_one);
}

TEST_CASE("admissibility is monotone and matches the eigenvalue classification") {
  for (double c = 0.0625; c <= 3.0; c += 0.0625)
    for (double g = 0.0; g <= 1.0; g += 0.03125) {
      const bool ok = wave_admissible(c, g).admissible;
      CHECK(ok == !eigenvalues(Equilibrium::nutrient_one, c, g).complex);
      CHECK(ok == (c * c >= 4.0 * (1.0 - g)));
      if (ok) {
        CHECK(wave_admissible(c + 0.0625, g).admissible);
        CHECK(wave_admissible(c, std::min(1.0, g + 0.03125)).admissible);
      }
    }
}

TEST_CASE("residual nutrient") {
  for (double g : {0.05, 0.2, 0.5, 0.9}) {
    const double a = residual_nutrient(g);
    CHECK(a > 0);
    CHECK(a < g);
    CHECK(1 - a == doctest::Approx(g * std::log(1 / a)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(residual_nutrient(1.0), std::invalid_argument);
}

TEST_CASE("shooting examples") {
  const auto ok = shoot(2.0, 0.5);
  CHECK(ok.stays_positive);
  CHECK_FALSE(ok.diverged);
  CHECK(ok.terminal_distance < 0.05);
  CHECK(ok.v_monotone);
  CHECK(ok.trajectory.back().V == doctest::Approx(1.0).epsilon(1e-6));

  const auto bad = shoot(0.5, 0.5);
  CHECK_FALSE(bad.stays_positive);
  CHECK(bad.min_U < -1e-3);

  ShootConfig fine;
  fine.delta = 1e-7;
  const auto ok2 = shoot(2.0, 0.5, fine);
  CHECK(ok2.terminal_distance < 2 * ok.terminal_distance);
  CHECK(ok.terminal_distance < 2 * ok2.terminal_distance);
}

TEST_CASE("V increases along trajectories while U is positive") {
  for (double c : {1.5, 2.0, 3.0})
    for (double g : {0.2, 0.5, 0.8}) {
      const auto r = shoot(c, g);
      CHECK(r.v_monotone);
      for (std::size_t i = 1; i < r.trajectory.size(); ++i)
        if (r.trajectory[i].U > 0 && r.trajectory[i - 1].U > 0 && r.trajectory[i].V < 1)
          CHECK(r.trajectory[i].V >= r.trajectory[i - 1].V * (1 - 1e-12));
    }
}

TEST_CASE("inadmissible speeds oscillate") {
  for (double g : {0.2, 0.5}) {
    const double cstar = 2 * std::sqrt(1 - g);
    CHECK(shoot(1.2 * cstar, g).stays_positive);
    CHECK_FALSE(shoot(0.6 * cstar, g).stays_positive);
  }
}
