#include <cmath>

#include "doctest.h"
#include "rdphase/dw/simulate.hpp"
#include "rdphase/loglaplace/solvers.hpp"
#include "rdphase/phase/phase.hpp"

using namespace rdphase;
using namespace rdphase::phase;

namespace {

dw::EngineConfig engine(double N) {
  dw::EngineConfig c;
  c.N = N;
  return c;
}

// Extinction by time t of N critical binary branching particles of mass 1/N at rate N.
double particle_extinction(double N, double t) { return std::pow(1.0 - 2.0 / (2.0 + N * t), N); }

double se(double p, std::size_t n) { return std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST_CASE("verdicts") {
  CHECK(classify({0.2, 0.4}, 0.1) == Verdict::life_consistent);
  CHECK(classify({0.0, 0.04}, 0.05) == Verdict::death_consistent);
  CHECK(classify({0.03, 0.2}, 0.05) == Verdict::undecided);
  CHECK(std::string(verdict_name(Verdict::death_consistent)) == "death-consistent");
  CHECK(std::string(verdict_name(Verdict::life_consistent)) == "life-consistent");
  CHECK(std::string(verdict_name(Verdict::undecided)) == "undecided");
}

TEST_CASE("replica results do not depend on the thread count") {
  auto f = [](std::size_t r) { return static_cast<double>(hash_words({r, 5})); };
  CHECK(run_replicas<double>(37, 1, f) == run_replicas<double>(37, 3, f));
}

TEST_CASE("survival without reaction follows the particle extinction law") {
  const auto init = dw::point_mass_particles({0, 0, 0}, 1.0, 50);
  SurvivalSpec spec;
  spec.L_box = 8;
  spec.horizon = 1.0;
  spec.reps = 2000;
  const auto pt = survival_probability({0.0, 0.0, 1}, init, spec, engine(50), 3, 0);
  const double expect = 1 - particle_extinction(50, 1.0);
  CHECK(std::abs(pt.survival_estimate - expect) < 3 * se(expect, spec.reps));
  CHECK(std::abs(expect - (1 - std::exp(-2.0))) < 0.01);
  CHECK(pt.ci_low <= pt.survival_estimate);
  CHECK(pt.survival_estimate <= pt.ci_high);
  CHECK(pt.budget_exceeded == 0);
  CHECK(pt.censor_box == 8);
  CHECK(pt.censor_horizon == 1.0);
  CHECK(pt.verdict == Verdict::life_consistent);
}

TEST_CASE("survival without reaction decreases in the horizon") {
  const auto init = dw::point_mass_particles({0, 0, 0}, 1.0, 40);
  SurvivalSpec spec;
  spec.L_box = 8;
  spec.reps = 600;
  spec.horizon = 0.5;
  const auto a = survival_probability({0.0, 1.0, 1}, init, spec, engine(40), 4, 0);
  spec.horizon = 2.0;
  const auto b = survival_probability({0.0, 1.0, 1}, init, spec, engine(40), 4, 0);
  CHECK(a.ci_low > b.ci_high);
  CHECK(b.survival_estimate == doctest::Approx(1 - std::exp(-2 / (std::exp(2.0) - 1))).epsilon(0.2));
}

TEST_CASE("pure death in a large box is death-consistent") {
  const auto init = dw::point_mass_particles({0, 0, 0}, 1.0, 40);
  SurvivalSpec spec;
  spec.L_box = 8;
  spec.reps = 400;
  const auto pt = survival_probability({0.0, 1.0, 1}, init, spec, engine(40), 5, 0);
  CHECK(pt.verdict == Verdict::death_consistent);
  CHECK(std::isinf(pt.censor_horizon));
}

TEST_CASE("survival preconditions") {
  const std::vector<Point> outside{{9.0, 0, 0}};
  SurvivalSpec spec;
  spec.L_box = 8;
  CHECK_THROWS_AS(survival_probability({0.0, 1.0, 1}, outside, spec, engine(10), 1, 0), std::invalid_argument);
  spec.L_box = 0;
  CHECK_THROWS_AS(survival_probability({0.0, 1.0, 1}, {}, spec, engine(10), 1, 0), std::invalid_argument);
}

TEST_CASE("psi bisection with a known boundary") {
  const double psi = 0.3;
  std::size_t calls = 0;
  auto fake = [&](double g, std::size_t reps) {
    ++calls;
    PhasePoint p;
    p.gamma = g;
    p.replicas = reps;
    const double margin = 0.08 / std::sqrt(static_cast<double>(reps));
    p.verdict = g < psi - margin ? Verdict::life_consistent
                                 : (g > psi + margin ? Verdict::death_consistent : Verdict::undecided);
    return p;
  };
  const auto b = estimate_psi(1.0, 0.01, 1'000'000, fake, 1.0, 16);
  CHECK_FALSE(b.undecided);
  CHECK(b.gamma_low <= psi);
  CHECK(b.gamma_high >= psi);
  CHECK(b.gamma_high - b.gamma_low <= 0.01);
  for (std::size_t i = 1; i < b.trace.size(); ++i) {
    CHECK(b.trace[i].low >= b.trace[i - 1].low);
    CHECK(b.trace[i].high <= b.trace[i - 1].high);
  }
  std::size_t used = 0;
  for (const auto& st : b.trace) used += st.point.replicas;
  CHECK(used == b.replicas_used);

  const auto tight = estimate_psi(1.0, 1e-6, 200, fake, 1.0, 16);
  CHECK(tight.undecided);
  CHECK(tight.replicas_used <= 200);
  CHECK(tight.gamma_low <= psi);
  CHECK(tight.gamma_high >= psi);

  auto dead = [](double g, std::size_t reps) {
    PhasePoint p;
    p.gamma = g;
    p.replicas = reps;
    p.verdict = Verdict::death_consistent;
    return p;
  };
  const auto z = estimate_psi(1.0, 0.01, 1000, dead, 1.0, 16);
  CHECK(z.gamma_low == 0.0);
  CHECK(z.gamma_high == 0.0);
  CHECK_FALSE(z.undecided);
  CHECK_THROWS_AS(estimate_psi(0.0, 0.01, 10, dead, 1.0, 1), std::invalid_argument);
}

TEST_CASE("death block scaling") {
  const double b = 8.0;
  const auto k = death_block_coefficients({1.0, 1.0, 3}, std::pow(b, 2.0 / 3.0), b);
  CHECK(k.diffusion == doctest::Approx(std::pow(b, -1.0 / 3.0)));
  CHECK(k.reaction == doctest::Approx(b));
  CHECK(k.death == doctest::Approx(b));
  CHECK(k.noise == doctest::Approx(1.0));
  CHECK(k.depletion == doctest::Approx(1.0));
  CHECK(death_block_epsilon(3) == doctest::Approx(1.0 / 108));
  CHECK(death_block_epsilon(1) == doctest::Approx(1.0 / 12));
}

// Each particle's family exits with probability phi_N / N, where phi_N solves the log-Laplace equation with
// boundary value N; phi_N increases to the maximal solution as N grows.
double particle_exit_probability(double N, double eta, double a, double x) {
  const loglaplace::NodeGrid g(BoxDomain::centered(a, 1), 0.005);
  const auto h1 = loglaplace::GridField::from_function(g, [](const Point&) { return 0.0; });
  const auto h2 = loglaplace::GridField::from_function(g, [&](const Point&) { return N; });
  const auto phi = loglaplace::solve_elliptic_loglaplace(h1, h2, std::vector<double>(g.size(), eta)).phi;
  return 1 - std::pow(1 - phi.at({x, 0, 0}) / N, N);
}

TEST_CASE("death block without reaction matches the particle exit law") {
  const std::size_t reps = 1000;
  const double N = 50;
  const auto rep = death_block_check({0.0, 1.0, 1}, 1.0, 1.0, reps, engine(N), 8);
  REQUIRE(rep.placements.size() == 2);
  const double pc = particle_exit_probability(N, 1.0, 3.0, 0.0);
  const double pk = particle_exit_probability(N, 1.0, 3.0, 1.0);
  CHECK(rep.placements[0].placement == "center");
  CHECK(std::abs(rep.placements[0].p_exit_nonzero - pc) < 3 * se(pc, reps));
  CHECK(std::abs(rep.placements[1].p_exit_nonzero - pk) < 3 * se(pk, reps));
  CHECK_FALSE(rep.passes);
  for (const auto& e : rep.placements) {
    CHECK(e.p_ci.low <= e.p_exit_nonzero);
    CHECK(e.mean_ci.low <= e.mean_exit_over_M);
    CHECK(e.mean_exit_over_M <= e.mean_ci.high);
  }
  // The superprocess limit is approached from below.
  const double limit = 1 - std::exp(-loglaplace::maximal_solution_1d(1.0, 3.0, 0.0));
  CHECK(pc < particle_exit_probability(400, 1.0, 3.0, 0.0));
  CHECK(particle_exit_probability(400, 1.0, 3.0, 0.0) < limit);
}

TEST_CASE("death block without reaction passes in a large block") {
  const auto a = death_block_check({0.0, 1.0, 1}, 4.0, 1.0, 500, engine(20), 9);
  CHECK(a.passes);
  const auto b = death_block_check({0.0, 2.0, 1}, 4.0, 1.0, 500, engine(20), 9);
  CHECK(b.passes);
  CHECK(b.p_upper <= a.p_upper + 1e-12);
}

TEST_CASE("trivial decompositions start stage two empty") {
  DecompositionSetup s;
  s.N = 10;
  s.mu_minus_fraction = 1.0;
  CHECK(decomposition_two_stage(s, "i", 1, 0).stage_two_particles == 0);
  s.beta_minus = s.p.beta;
  for (std::uint64_t r = 0; r < 5; ++r) CHECK(decomposition_two_stage(s, "iv", 1, r).stage_two_particles == 0);
  s.gamma_plus = 0.0;
  for (std::uint64_t r = 0; r < 5; ++r) CHECK(decomposition_two_stage(s, "v", 1, r).stage_two_particles == 0);
  CHECK_THROWS_AS(decomposition_two_stage(s, "vi", 1, 0), std::invalid_argument);
}

TEST_CASE("small decomposition suite") {
  DecompositionSetup s;
  s.N = 10;
  const auto rep = decomposition_suite(s, 300, 21);
  CHECK(rep.tests.size() == 12);
  CHECK(rep.alpha_per_test == doctest::Approx(0.01 / 12));
  for (const auto& t : rep.tests) {
    INFO(t.name << " " << t.statistic << " p=" << t.ks.p_value);
    CHECK(t.pass);
  }
  CHECK(rep.all_pass);
}

TEST_CASE("CRN monotonicity on a small grid") {
  const auto init = dw::point_mass_particles({0, 0, 0}, 1.0, 20);
  const auto rep = crn_monotonicity({0.0, 1.0, 2.0}, {0.0, 0.5, 1.0}, 1, 2.0, init, 8, engine(20), 3);
  CHECK(rep.comparisons == 8 * 12);
  CHECK(rep.gamma_flips == 0);
  CHECK(rep.beta_flips == 0);
  CHECK(rep.set_violations == 0);
  CHECK(rep.budget_exceeded == 0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j + 1 < 3; ++j) CHECK(rep.deaths[i][j] <= rep.deaths[i][j + 1]);
}
