#pragma once
#include <array>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rdphase/core/params.hpp"
#include "rdphase/core/stats.hpp"
#include "rdphase/dw/engine.hpp"
#include "rdphase/nutrient/nutrient.hpp"

namespace rdphase::phase {

// Replica r writes slot r, so results do not depend on the thread count.
template <class T, class Fn>
std::vector<T> run_replicas(std::size_t reps, unsigned threads, Fn&& fn) {
  std::vector<T> out(reps);
  if (threads <= 1 || reps < 2) {
    for (std::size_t r = 0; r < reps; ++r) out[r] = fn(r);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t r = t; r < reps; r += threads) out[r] = fn(r);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

enum class Verdict { death_consistent, life_consistent, undecided };
const char* verdict_name(Verdict v);

// Life when the CI lies above the threshold, death when it lies below.
Verdict classify(const Interval& ci, double threshold);

struct PhasePoint {
  double beta = 0.0, gamma = 0.0;
  double survival_estimate = 0.0;
  double ci_low = 0.0, ci_high = 1.0;
  std::size_t replicas = 0;  // completed replicas
  std::size_t survived = 0;
  std::size_t budget_exceeded = 0;
  double censor_box = 0.0;
  double censor_horizon = std::numeric_limits<double>::infinity();
  Verdict verdict = Verdict::undecided;
};

struct SurvivalSpec {
  double L_box = 4.0;
  double horizon = std::numeric_limits<double>::infinity();
  std::size_t reps = 100;
  double threshold = 0.05;
  unsigned threads = 1;
};

// A replica is dead when it goes extinct before the horizon with zero exit measure on (-L_box, L_box)^d.
// Budget-exceeded replicas are excluded from the estimate and force an undecided verdict.
PhasePoint survival_probability(const Params& p, std::span<const Point> initial, const SurvivalSpec& spec,
                                const dw::EngineConfig& engine, std::uint64_t seed, std::uint64_t stream);

using GammaClassifier = std::function<PhasePoint(double gamma, std::size_t reps)>;

struct PsiStep {
  double gamma;
  PhasePoint point;
  double low, high;  // bracket after this evaluation
};

struct PsiBracket {
  double gamma_low = 0.0, gamma_high = 0.0;
  bool undecided = false;
  std::size_t replicas_used = 0;
  std::vector<PsiStep> trace;
};

// Bisection on gamma in [0, gamma_max] for the life/death boundary at fixed beta. Undecided points are
// re-run with doubled replicas while the replica budget lasts.
PsiBracket estimate_psi(double beta, double tol, std::size_t budget, const GammaClassifier& classifier,
                        double gamma_max, std::size_t reps0);

struct BlockEstimate {
  std::string placement;
  std::size_t replicas = 0;
  std::size_t nonzero = 0;
  std::size_t budget_exceeded = 0;
  double p_exit_nonzero = 0.0;
  Interval p_ci{0, 0};
  double mean_exit_over_M = 0.0;
  Interval mean_ci{0, 0};
};

struct DeathBlockReport {
  double L = 0.0, M = 0.0;
  int d = 1;
  double epsilon0 = 0.0;
  std::vector<BlockEstimate> placements;  // center, corner
  double p_upper = 0.0, mean_upper = 0.0;  // worst over placements
  bool passes = false;
};

double death_block_epsilon(int d);

// The block is mapped to L = M = 1 by the scaling map and run from mass 1 at the center and at a corner
// of [-1, 1]^d inside (-3, 3)^d with nutrient 1.
DeathBlockReport death_block_check(const Params& p, double L, double M, std::size_t reps,
                                   const dw::EngineConfig& engine, std::uint64_t seed, unsigned threads = 1);

// Coefficients of the block problem after scaling L and M to 1.
Coefficients death_block_coefficients(const Params& p, double L, double M);

struct DecompositionSetup {
  Params p{2.0, 0.5, 1};
  double half_width = 4.0;
  double N = 50.0;
  double mu_mass = 1.0;           // point mass at the origin
  double mu_minus_fraction = 0.5;  // (i)
  double f_split_at = 0.0;        // (ii): f- = I(x_1 < a)
  double inner_half_width = 2.0;  // (iii)
  double beta_minus = 1.0;        // (iv)
  double gamma_plus = 0.5;        // (v)
  double g_level = 0.5;           // (0): g = g_level on |x_1| < g_half_width
  double g_half_width = 1.0;
  double alpha = 0.01;
  unsigned threads = 1;
};

struct DecompositionTest {
  std::string name;
  std::string statistic;
  bool one_sided = false;
  KsResult ks{0, 1};
  bool pass = true;
};

struct DecompositionReport {
  std::size_t reps = 0;
  double alpha = 0.0, alpha_per_test = 0.0;
  std::vector<DecompositionTest> tests;
  bool all_pass = true;
};

struct MassPair {
  double exit = 0.0, occupation = 0.0;
  std::size_t stage_two_particles = 0;
};

// Names of the constructions: "0", "i", ..., "v".
const std::array<const char*, 6>& decomposition_names();
// One replica of the one-shot run, and of the two-stage construction with the given name.
MassPair decomposition_one_shot(const DecompositionSetup& s, std::uint64_t seed, std::uint64_t replica);
MassPair decomposition_two_stage(const DecompositionSetup& s, const std::string& name, std::uint64_t seed,
                                 std::uint64_t replica);
DecompositionReport decomposition_suite(const DecompositionSetup& s, std::size_t reps, std::uint64_t seed);

struct CrnReport {
  std::vector<double> betas, gammas;
  std::size_t reps = 0;
  std::size_t comparisons = 0;
  std::size_t gamma_flips = 0;  // death at gamma, life at a larger gamma
  std::size_t beta_flips = 0;   // life at beta, death at a larger beta
  std::size_t set_violations = 0;
  std::size_t budget_exceeded = 0;
  std::vector<std::vector<std::size_t>> deaths;  // [beta][gamma]
};

// Package approximation on (-half_width, half_width)^d with one dt, one set of thresholds and one set of
// particle streams shared across the grid.
CrnReport crn_monotonicity(const std::vector<double>& betas, const std::vector<double>& gammas, int d,
                           double half_width, std::span<const Point> initial, std::size_t reps,
                           const dw::EngineConfig& engine, std::uint64_t seed);

}  // namespace rdphase::phase
