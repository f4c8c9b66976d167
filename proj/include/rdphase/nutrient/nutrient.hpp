#pragma once
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "rdphase/core/boundary_measure.hpp"
#include "rdphase/core/finite_measure.hpp"
#include "rdphase/core/params.hpp"
#include "rdphase/dw/engine.hpp"
#include "rdphase/trigger/trigger.hpp"

namespace rdphase::nutrient {

// Nutrient level per cell of a grid, values in [0, 1].
struct NutrientField {
  Grid grid;
  std::vector<double> value;

  static NutrientField constant(const Grid& g, double v);
  static NutrientField from_function(const Grid& g, const std::function<double(const Point&)>& f);
  void validate() const;
};

// Field of inner copied into a same-pitch grid on outer; other cells get fill.
NutrientField embed_field(const NutrientField& inner, const BoxDomain& outer, double fill);

// Largest pitch dividing the box whose cells have diameter <= 1/N.
double package_pitch(const BoxDomain& domain, double N);
// Largest pitch dividing the box with side <= 1/N.
double side_pitch(const BoxDomain& domain, double N);

// Package k sits in one cell with height 1/N; packages are numbered cell by cell.
struct NutrientPackages {
  Grid grid;
  double N = 1.0;
  std::vector<std::uint32_t> count;
  std::vector<std::uint64_t> offset;  // first package id of each cell

  std::uint64_t total() const { return offset.empty() ? 0 : offset.back() + count.back(); }
  double weight() const { return 1.0 / N; }
  double package_integral() const { return grid.cell_volume() / N; }
  double level(std::size_t cell) const { return count[cell] / N; }
  std::uint32_t cell_of_package(std::uint64_t k) const;
  FiniteMeasure as_measure() const;
  NutrientField as_field() const;
};

NutrientPackages packages_from_counts(const Grid& g, double N, std::vector<std::uint32_t> count);
NutrientPackages build_packages(const NutrientField& f, double N);
NutrientPackages build_packages(const BoxDomain& domain, double N, const std::function<double(const Point&)>& f);
// Packages of inner copied into a grid on outer; cells of outer outside inner get floor(N * fill).
NutrientPackages embed_packages(const NutrientPackages& inner, const BoxDomain& outer, double fill);

struct TriggerEvent {
  std::uint64_t package;
  std::uint32_t cell;
  double time;
};

struct ReactionResult {
  double N = 1.0;
  double dt = 0.0;
  double horizon = 0.0;
  double end_time = 0.0;
  bool extinct = false;
  bool budget_exceeded = false;
  BoxDomain domain;
  Grid grid;
  std::vector<std::uint64_t> alive_counts;  // index k: after k steps
  std::vector<std::uint64_t> occupation;    // cumulative counts per cell
  std::vector<Point> exit_points;
  std::vector<double> v_final;  // nutrient level per cell at the end
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> v_snapshots;
  std::vector<TriggerEvent> triggers;  // approximation only, in trigger order
  std::vector<std::uint32_t> remaining;  // approximation only, untriggered packages per cell
  dw::Tally tally;

  double final_mass() const { return alive_counts.empty() ? 0.0 : alive_counts.back() / N; }
  double exit_mass() const { return static_cast<double>(exit_points.size()) / N; }
  double occupation_mass() const;
  bool died() const { return extinct && exit_points.empty(); }
  FiniteMeasure occupation_measure() const;
  BoundaryMeasure exit_measure(double pitch) const;
  NutrientPackages remaining_packages() const { return packages_from_counts(grid, N, remaining); }
};

struct ReactionOptions {
  double horizon = std::numeric_limits<double>::infinity();
  std::vector<double> snapshot_times;
  // Packages injected at time zero, as if triggered before the run starts.
  std::vector<std::uint64_t> pretriggered;
  // Distinguishes independent runs sharing (seed, stream), e.g. stages of a decomposition.
  std::uint64_t component_base = 0;
};

// Engine configuration with diffusion and noise taken from the coefficients.
dw::EngineConfig engine_for(const Coefficients& k, const dw::EngineConfig& base);

// Particles of package k's component: random rounding of reaction * cell volume, uniform in the cell.
std::vector<Point> package_particles(const NutrientPackages& pkgs, std::uint64_t k, double reaction,
                                     std::uint64_t seed, std::uint64_t stream);
// Exponential thresholds of the packages in one cell, sorted increasingly.
std::vector<double> cell_thresholds(const NutrientPackages& pkgs, std::uint32_t cell, std::uint64_t seed,
                                    std::uint64_t stream);

ReactionResult simulate_nutrient_approx(std::span<const Point> initial, const NutrientPackages& pkgs,
                                        const Coefficients& k, const dw::EngineConfig& cfg, std::uint64_t seed,
                                        std::uint64_t stream, const ReactionOptions& opt = {});

// Net creation rate reaction * v - death with v = f exp(-depletion * occupation density) on the grid.
ReactionResult simulate_direct(std::span<const Point> initial, const NutrientField& f, const Coefficients& k,
                               const dw::EngineConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                               const ReactionOptions& opt = {});

// Static form: every component is run separately to extinction and the trigger set is the
// smallest fixed point of the resulting instance.
struct ComponentTrace {
  std::vector<trigger::CellTriggerInstance::Entry> occupation;
  std::vector<Point> exits;
  bool budget_exceeded = false;
};

struct StaticConstruction {
  trigger::CellTriggerInstance instance;
  ComponentTrace base;
  std::vector<ComponentTrace> components;
  double dt = 0.0;
};

struct StaticResult {
  trigger::LabelSet set;
  std::vector<std::uint64_t> occupation;
  std::vector<Point> exit_points;
  std::vector<std::uint32_t> remaining;
};

StaticConstruction build_static(std::span<const Point> initial, const NutrientPackages& pkgs, const Coefficients& k,
                                const dw::EngineConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t component_base = 0);
StaticResult solve_static(const StaticConstruction& sc, const NutrientPackages& pkgs);

}  // namespace rdphase::nutrient
