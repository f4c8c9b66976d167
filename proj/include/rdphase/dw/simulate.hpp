#pragma once
#include <optional>
#include <span>
#include <vector>

#include "rdphase/dw/engine.hpp"

namespace rdphase::dw {

struct DwRunResult {
  double N = 1.0;
  double dt = 0.0;
  double horizon = 0.0;
  double end_time = 0.0;
  bool extinct = false;
  bool budget_exceeded = false;
  BoxDomain domain;
  std::vector<std::uint64_t> alive_counts;  // index k: after k steps
  std::optional<Grid> grid;
  std::vector<double> snapshot_times;
  std::vector<std::vector<std::uint64_t>> snapshots;  // cumulative occupation counts
  std::vector<std::uint64_t> occupation;
  std::vector<Point> exit_points;
  Tally tally;

  double mass_at(double t) const;
  double final_mass() const { return alive_counts.empty() ? 0.0 : alive_counts.back() / N; }
  double exit_mass() const { return static_cast<double>(exit_points.size()) / N; }
  double occupation_mass() const;
  // Occupation counts accumulated over [s, t]; s and t must be 0, a snapshot time, or >= end.
  std::vector<std::uint64_t> occupation_counts_between(double s, double t) const;
  FiniteMeasure occupation_between(double s, double t) const;
  BoundaryMeasure exit_measure(double pitch) const;
};

std::vector<Point> sample_particles(const FiniteMeasure& mu, double N, RngStream& rng);
std::vector<Point> point_mass_particles(const Point& x, double mass, double N);

// Runs to the horizon (or extinction if horizon is infinite). A finite horizon is split
// into an integer number of equal steps no larger than the stability cap.
DwRunResult simulate_dw(std::span<const Point> initial, const RateField& eta, const BoxDomain& domain,
                        double horizon, const EngineConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                        const std::vector<double>& snapshot_times = {});
DwRunResult simulate_dw(const FiniteMeasure& mu, const RateField& eta, const BoxDomain& domain, double horizon,
                        const EngineConfig& cfg, RngStream& rng, const std::vector<double>& snapshot_times = {});

double resolve_dt(const EngineConfig& cfg, double eta_bound, double horizon);

// eps^{-d} times the occupation mass in [x, x+eps)^d over [s, t].
double occupation_density(const DwRunResult& run, double s, double t, const Point& x, double eps);

}  // namespace rdphase::dw
