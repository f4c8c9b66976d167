#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "rdphase/core/params.hpp"
#include "rdphase/core/stats.hpp"
#include "rdphase/dw/engine.hpp"
#include "rdphase/nutrient/nutrient.hpp"

namespace rdphase::blocks {

struct BlockConfig {
  double L = 1.0;
  double M = 1.0;
  int d = 2;

  void validate() const;
};

// D(n) = (-3nL, 3nL)^d.
BoxDomain block_box(const BlockConfig& cfg, int n);

struct ExitStage {
  BoxDomain box;
  std::vector<Point> exits;
  double N = 1.0;
  nutrient::NutrientField v_final;
  double mass() const { return static_cast<double>(exits.size()) / N; }
};

// Stage n runs on D(n) from the exit measure of stage n-1 (stage 1 from the initial particles),
// with the previous final nutrient carried on D(n-1) and fresh nutrient 1 outside.
// Throws BudgetExceeded if a stage does not finish within the engine budget.
std::vector<ExitStage> iterate_exit_measures(std::span<const Point> initial, const Coefficients& k,
                                             const BlockConfig& cfg, int n_max, const dw::EngineConfig& engine,
                                             std::uint64_t seed, std::uint64_t stream);

// Point x lies in the window x^L_{j,k} + I_L: x_1 = 3jL, |x_2 - 2kL| <= L, |x_3| <= L.
bool in_window(const Point& x, const BlockConfig& cfg, int j, int k);
double window_mass(std::span<const Point> pts, double N, const BlockConfig& cfg, int j, int k);

enum class Provenance { simulated_iid, simulated_dependent, derived_from_blocks };

// Sites (j, k) with j + k even and |k| <= j; row j holds k = -j, -j+2, ..., j.
struct OpLattice {
  int generations = 0;
  Provenance provenance = Provenance::simulated_iid;
  std::vector<std::vector<std::uint8_t>> omega;  // row 0 unused
  std::vector<std::vector<std::uint8_t>> tilde;  // derived lattices only, rows 0..generations

  static std::size_t index(int j, int k) { return static_cast<std::size_t>((k + j) / 2); }
  bool open(int j, int k) const;
  bool tilde_at(int j, int k) const;
};

// omega from tilde by the parent rule: both parents closed means open, otherwise tilde.
OpLattice sites_from_tilde(std::vector<std::vector<std::uint8_t>> tilde);
// tilde(j,k) = [stage j window mass > M]; tilde(0,0) = [mu(I_L) >= M].
OpLattice blocks_to_sites(const std::vector<ExitStage>& exits, const BlockConfig& cfg, double mu_window_mass);
double initial_window_mass(std::span<const Point> pts, double N, const BlockConfig& cfg);

// density in [0, 1]; k_dependence <= 1 gives i.i.d. sites, larger values a moving-average Gaussian copula.
OpLattice op_simulate(double density, int k_dependence, int generations, std::uint64_t seed, std::uint64_t stream);

struct ClusterResult {
  std::uint64_t size = 0;  // sites reached, including the origin
  int reached = 0;         // last generation with a reached site
  bool survived = false;   // reached the final generation
  std::vector<std::uint8_t> generations_reached;  // index j: some (j, k) is reached
};
ClusterResult op_cluster(const OpLattice& lat);

struct SweepPoint {
  double density;
  std::size_t survived;
  std::size_t replicas;
  Interval ci;
};
// Common random numbers across densities: replica r uses the same field at every density.
std::vector<SweepPoint> op_density_sweep(const std::vector<double>& densities, int k_dependence, int generations,
                                         std::size_t reps, std::uint64_t seed);

struct CriticalBracket {
  double low = 0.0;   // largest swept density with survival CI upper bound below low_threshold
  double high = 1.0;  // smallest swept density with survival CI lower bound above high_threshold
  bool found = false;
};
CriticalBracket bracket_critical_density(const std::vector<SweepPoint>& sweep, double low_threshold,
                                         double high_threshold);

struct LifeProbe {
  std::size_t replicas = 0;
  std::size_t budget_exceeded = 0;
  std::array<std::size_t, 2> failures{0, 0};  // targets k = +1, -1
  std::array<double, 2> estimate{0, 0};
  std::array<Interval, 2> ci{};
};

// Failure probability that the exit of D_{3L} puts mass <= M on x^L_{1,+-1} + I_L, started from
// mass mu_mass spread uniformly over I_L with nutrient I(x_1 >= 0).
LifeProbe life_block_probe(const Coefficients& k, const BlockConfig& cfg, double mu_mass, std::size_t reps,
                           const dw::EngineConfig& engine, std::uint64_t seed);
std::vector<Point> window_particles(const BlockConfig& cfg, double mass, double N, std::uint64_t seed);

// Pathwise: if tilde(0,0) = 1 and the cluster reaches generation n, stage n has nonzero exit.
bool chain_implication_holds(const OpLattice& lat, const std::vector<ExitStage>& exits);

}  // namespace rdphase::blocks
