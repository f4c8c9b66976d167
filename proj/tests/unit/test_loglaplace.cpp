#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rdphase/core/errors.hpp"
#include "rdphase/loglaplace/solvers.hpp"

using namespace rdphase;
using namespace rdphase::loglaplace;

namespace {

GridField smooth_random(const NodeGrid& g, std::mt19937_64& rng, double scale, double offset) {
  std::uniform_real_distribution<double> U(-1, 1);
  const double a = U(rng), b = U(rng), c = U(rng);
  return GridField::from_function(g, [&](const Point& x) {
    return offset + scale * (1.0 + 0.5 * a * std::sin(1.3 * x[0] + b) + 0.5 * c * std::cos(0.7 * x[1] - b));
  });
}

}  // namespace

TEST_CASE("riccati closed form") {
  CHECK(riccati_lambda(0, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(riccati_lambda(1, 1) == doctest::Approx(2.0 / (std::numbers::e - 1)).epsilon(1e-14));
  CHECK(std::abs(riccati_lambda(1e-12, 3) - 2.0 / 3) < 1e-9);
  CHECK_THROWS_AS(riccati_lambda(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(riccati_lambda(1, -1), std::invalid_argument);
  double worst = 0;
  for (double g = 0; g <= 4.0 + 1e-12; g += 0.25)
    for (double t = 0.1; t <= 5.0 + 1e-12; t += 0.35) {
      const double a = riccati_lambda(g, t), b = riccati_lambda_numeric(g, t);
      worst = std::max(worst, std::abs(a - b) / a);
    }
  CHECK(worst < 1e-8);
}

TEST_CASE("parabolic: zero data gives zero") {
  NodeGrid g(BoxDomain::centered(1, 2), 0.25);
  ParabolicProblem p{GridField(g), {}, {}, {}};
  auto phi = solve_parabolic_loglaplace(p, 1.0);
  for (double v : phi.values) CHECK(v == 0.0);
}

TEST_CASE("parabolic: spatially constant data follows the Riccati ODE") {
  NodeGrid g(BoxDomain::centered(1, 1), 0.25);
  ParabolicProblem p{GridField(g, 1.0), {}, {}, std::vector<double>(g.size(), 1.0)};
  auto phi = solve_parabolic_loglaplace(p, 1.0, {1e-5, Boundary::neumann});
  const double exact = 1.0 / (1.5 * std::numbers::e - 0.5);
  for (double v : phi.values) CHECK(std::abs(v - exact) / exact < 1e-4);
}

TEST_CASE("parabolic: comparison principle on random monotone pairs") {
  std::mt19937_64 rng(7);
  NodeGrid g(BoxDomain::centered(1, 2), 0.2);
  for (int rep = 0; rep < 10; ++rep) {
    auto lo = smooth_random(g, rng, 0.5, 0.0);
    auto bump = smooth_random(g, rng, 0.3, 0.0);
    GridField hi = lo;
    for (std::size_t k = 0; k < g.size(); ++k) hi.values[k] += bump.values[k];
    auto h3lo = [](double s, const Point& x) { return 0.2 * s + 0.1 * x[0] + 0.1; };
    auto h3hi = [](double s, const Point& x) { return 0.3 * s + 0.1 * x[0] + 0.2; };
    ParabolicProblem a{lo, {}, h3lo, {}}, b{hi, {}, h3hi, {}};
    auto pa = solve_parabolic_loglaplace(a, 0.5), pb = solve_parabolic_loglaplace(b, 0.5);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(pa.values[k] <= pb.values[k] + 1e-14);
  }
}

TEST_CASE("parabolic: step bound and blow-up detection") {
  NodeGrid g(BoxDomain::centered(1, 1), 0.25);
  ParabolicProblem p{GridField(g), {}, {}, {}};
  CHECK_THROWS_AS(solve_parabolic_loglaplace(p, 1.0, {0.05, Boundary::dirichlet}), std::invalid_argument);
  // phi' = -phi^2/2 from -1 blows up at t = 2.
  ParabolicProblem q{GridField(g, -1.0), {}, {}, {}};
  CHECK_THROWS_AS(solve_parabolic_loglaplace(q, 3.0, {0.0, Boundary::neumann}), StepSizeError);
}

TEST_CASE("elliptic: zero data gives zero") {
  NodeGrid g(BoxDomain::centered(1, 2), 0.25);
  auto r = solve_elliptic_loglaplace(GridField(g), GridField(g), {});
  for (double v : r.phi.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(solve_elliptic_loglaplace(GridField(g), GridField(g), std::vector<double>(g.size(), -1.0)),
                  std::invalid_argument);
}

TEST_CASE("elliptic: Newton and relaxation agree on random smooth inputs") {
  std::mt19937_64 rng(11);
  for (int d : {1, 2}) {
    NodeGrid g(BoxDomain::centered(d == 1 ? 2.0 : 1.0, d), d == 1 ? 0.1 : 0.25);
    for (int rep = 0; rep < 3; ++rep) {
      auto h1 = smooth_random(g, rng, 1.0, 0.0);
      auto h2 = smooth_random(g, rng, 1.0, 0.5);
      auto etaf = smooth_random(g, rng, 0.5, 0.0);
      auto a = solve_elliptic_newton(h1, h2, etaf.values);
      auto b = solve_elliptic_relaxation(h1, h2, etaf.values);
      CHECK(b.used_relaxation);
      double diff = 0;
      for (std::size_t k = 0; k < g.size(); ++k) diff = std::max(diff, std::abs(a.phi.values[k] - b.phi.values[k]));
      CHECK(diff < 1e-8);
      CHECK(elliptic_residual(a.phi, h1, etaf.values) < 1e-10);
    }
  }
}

TEST_CASE("elliptic: comparison in boundary data and source") {
  NodeGrid g(BoxDomain::centered(4, 1), 0.05);
  GridField b1(g), b2(g), src(g, 0.1);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.is_boundary(k)) {
      b1.values[k] = 1.0;
      b2.values[k] = 2.0;
    }
  auto lo = solve_elliptic_loglaplace(GridField(g), b1, {});
  auto hi = solve_elliptic_loglaplace(src, b2, {});
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(lo.phi.values[k] <= hi.phi.values[k]);
  CHECK(lo.phi.at({0, 0, 0}) > 0);
  CHECK(lo.phi.at({0, 0, 0}) < 1);
}

TEST_CASE("death witness") {
  auto w1 = death_test_function(1, 0.05);
  auto rep = death_witness_check(w1, {}, 1.0);
  CHECK(rep.holds);
  CHECK(rep.nodes_checked == w1.grid.size() - 2);
  const std::size_t mid = w1.grid.nearest({0, 0, 0});
  CHECK(w1.values[mid] == doctest::Approx(24.0 / 9));
  CHECK((*w1.laplacian)[mid] == doctest::Approx(144.0 / 81));
  CHECK(0.5 * w1.values[mid] * w1.values[mid] - (*w1.laplacian)[mid] == doctest::Approx(144.0 / 81));

  GridField fd = w1;
  fd.laplacian.reset();
  auto rep_fd = death_witness_check(fd, {}, 1.0);
  CHECK(rep_fd.nodes_skipped == 2);
  CHECK(rep_fd.nodes_checked == w1.grid.size() - 4);

  NodeGrid g(BoxDomain::centered(3, 2), 0.5);
  auto zero = death_witness_check(GridField(g), std::vector<double>(g.size(), 0.5), 1.0);
  CHECK(zero.holds);
  CHECK(zero.worst_margin == 0.0);

  CHECK(death_witness_check(death_test_function(2, 0.05), {}, 1.0).holds);
  CHECK(death_witness_check(death_test_function(3, 0.1), {}, std::pow(2.0, -1.0 / 3)).holds);
  // Larger diffusion breaks the inequality near the walls.
  CHECK_FALSE(death_witness_check(w1, {}, 3.0).holds);
}

TEST_CASE("maximal singular solution") {
  SingularConfig cfg;
  auto s = maximal_singular_solution(cfg);
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    CHECK(s.psi[i] >= 0);
    CHECK(s.psi[i] <= 4.0 / (s.r[i] * s.r[i]) * (1 + 1e-9));
  }
  // log psi has slope close to -1 in the tail (psi ~ C e^{-r} / r).
  auto value_at = [&](double r) {
    std::size_t i = 0;
    while (s.r[i + 1] < r) ++i;
    return s.psi[i];
  };
  const double slope1 = (std::log(value_at(12)) - std::log(value_at(8))) / 4;
  const double slope2 = (std::log(value_at(18)) - std::log(value_at(14))) / 4;
  CHECK(slope1 < -1.0);
  CHECK(std::abs(slope2 - slope1) < 0.1);

  auto a = singular_solution_at(0.02, cfg);
  SingularConfig fine = cfg;
  fine.nodes *= 2;
  auto b = singular_solution_at(0.01, fine);
  CHECK(std::abs(a.c0 - b.c0) / b.c0 < 0.01);
}
