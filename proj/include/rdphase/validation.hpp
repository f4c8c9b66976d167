#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "rdphase/core/params.hpp"
#include "rdphase/core/stats.hpp"

namespace rdphase::validation {

// z = (estimate - oracle) / se. Deterministic checks carry their absolute tolerance in se.
struct OracleCheck {
  std::string check;
  double estimate = 0.0;
  double se = 0.0;
  double oracle = 0.0;
  double z = 0.0;
  double z_limit = 3.0;
  std::size_t replicas = 0;
  bool pass = false;
};

struct McLevel {
  double N = 200.0;
  double dt = 0.0;  // 0 selects the stability cap
  std::size_t reps = 10'000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  unsigned threads = 1;
};

// Fraction of runs extinct by t, started from mass m, against exp(-lambda_t m).
OracleCheck extinction_check(double gamma, double t, double mass, const McLevel& mc);
// E[U_t(1)] = exp(-gamma t) m.
OracleCheck first_moment_check(double gamma, double t, double mass, const McLevel& mc);
// E[U_t(1)^2] = m^2 + m t without killing.
OracleCheck second_moment_check(double t, double mass, const McLevel& mc);
// E[exp(-exit mass)] from a unit point mass at 0 on (-a, a) against exp(-phi(0)) from the elliptic solver.
OracleCheck laplace_exit_check(double half_width, double pitch, const McLevel& mc);
// Closed-form Riccati lambda against RK4 integration.
OracleCheck riccati_check(double gamma, double t);

struct NutrientComparison {
  std::size_t replicas = 0;
  RunningStats approx_exit, direct_exit;
  RunningStats approx_occupation, direct_occupation;
  KsResult exit_ks{0, 1}, occupation_ks{0, 1};
  std::size_t static_checked = 0, static_agree = 0;
  std::size_t budget_exceeded = 0;
};

// Package approximation against the direct simulator on (-a, a)^d from mass m at the origin with nutrient 1,
// and its dynamic trigger set against the static smallest fixed point on the first static_reps replicas.
NutrientComparison nutrient_compare(const Params& p, double half_width, double mass, const McLevel& mc,
                                    std::size_t static_reps);

}  // namespace rdphase::validation
