#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <vector>

#include "rdphase/core/boundary_measure.hpp"
#include "rdphase/core/finite_measure.hpp"
#include "rdphase/core/grid.hpp"
#include "rdphase/core/rng.hpp"

namespace rdphase::dw {

enum class Status : std::uint8_t { alive, frozen, dead };

struct Particle {
  Point x;
  std::uint64_t lineage;
  std::uint32_t age;
  Status status;
};

struct EngineConfig {
  double N = 100.0;        // particles per unit mass
  double dt = 0.0;         // 0 selects the stability cap
  double diffusion = 1.0;  // generator diffusion * Laplacian
  double noise = 1.0;      // branching rate is N * noise
  bool bridge_correction = true;
  double occupation_pitch = 0.0;  // 0 disables the occupation grid
  std::size_t max_particles = 50'000'000;
  std::uint64_t max_steps = 1ULL << 40;

  void validate() const;
};

// Per-cell creation/annihilation rate on the occupation grid, or a constant.
class RateField {
 public:
  static RateField constant(double eta) { return RateField(eta); }
  RateField(const Grid& grid, std::vector<double> values);

  bool is_constant() const { return values_.empty(); }
  double value() const { return constant_; }
  double at(std::size_t cell) const { return values_.empty() ? constant_ : values_[cell]; }
  double bound() const { return bound_; }
  const std::optional<Grid>& grid() const { return grid_; }

 private:
  explicit RateField(double eta) : constant_(eta), bound_(std::abs(eta)) {}
  double constant_ = 0.0;
  double bound_ = 0.0;
  std::vector<double> values_;
  std::optional<Grid> grid_;
};

struct Tally {
  std::uint64_t initial = 0, injected = 0;
  std::uint64_t eta_deaths = 0, eta_births = 0;
  std::uint64_t branch_deaths = 0, branch_splits = 0;
  std::uint64_t frozen = 0;
  std::uint64_t particle_steps = 0;
};

double stability_cap(const EngineConfig& cfg, double eta_bound);

class ParticleSystem {
 public:
  ParticleSystem(const BoxDomain& domain, const EngineConfig& cfg, std::uint64_t seed, std::uint64_t stream);

  const BoxDomain& domain() const { return domain_; }
  const EngineConfig& config() const { return cfg_; }
  const std::optional<Grid>& grid() const { return grid_; }
  double N() const { return cfg_.N; }
  double time() const { return time_; }
  std::uint64_t steps() const { return steps_; }

  // Lineage ids are derived from (component, index) so draws are keyed, not sequential.
  void add(const Point& x, std::uint64_t component, std::uint64_t index);
  void add_lineage(const Point& x, std::uint64_t lineage);

  std::size_t alive() const { return alive_.size(); }
  double alive_mass() const { return static_cast<double>(alive_.size()) / cfg_.N; }
  bool extinct() const { return alive_.empty(); }
  const std::vector<Particle>& particles() const { return alive_; }
  const std::vector<Particle>& frozen() const { return frozen_; }
  double exit_mass() const { return static_cast<double>(frozen_.size()) / cfg_.N; }
  const Tally& tally() const { return tally_; }

  // Occupation counts per cell; occupation mass = count * dt / N.
  const std::vector<std::uint64_t>& occupation_counts() const { return occ_; }
  std::uint64_t occupation_total() const { return occ_total_; }
  double occupation_mass() const { return static_cast<double>(occ_total_) * dt_used_ / cfg_.N; }
  // Cells that received occupation during the most recent step.
  const std::vector<std::uint32_t>& touched() const { return touched_; }
  double step_dt() const { return dt_used_; }

  template <class EtaFn>
  void step(double dt, EtaFn&& eta_of_cell);
  void step(double dt, const RateField& eta);
  void advance_time(double dt) { time_ += dt; ++steps_; }

  FiniteMeasure occupation_measure() const;
  BoundaryMeasure exit_measure(double pitch) const;
  std::vector<Point> frozen_points() const;

 private:
  bool try_exit(Particle& p, const Point& y, const Philox4x32* extra);

  BoxDomain domain_;
  EngineConfig cfg_;
  KeyedRng key_;
  std::optional<Grid> grid_;
  std::vector<Particle> alive_, next_, frozen_;
  std::vector<std::uint64_t> occ_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint32_t> touched_;
  std::uint32_t stamp_id_ = 0;
  std::uint64_t occ_total_ = 0;
  double time_ = 0.0;
  double dt_used_ = 0.0;
  std::uint64_t steps_ = 0;
  Tally tally_;
};

// Validates the stability cap and domain, then advances one Euler step.
void dw_step(ParticleSystem& sys, double dt, const RateField& eta, const BoxDomain& domain);

std::uint64_t child_lineage(std::uint64_t lineage, std::uint32_t age, std::uint64_t which);

template <class EtaFn>
void ParticleSystem::step(double dt, EtaFn&& eta_of_cell) {
  if (dt_used_ == 0.0) dt_used_ = dt;
  if (dt != dt_used_) throw std::invalid_argument("ParticleSystem: time step must stay fixed within a run");
  ++stamp_id_;
  touched_.clear();
  next_.clear();
  const int d = domain_.dim();
  const bool bounded = domain_.bounded();
  const bool move = bounded || grid_.has_value();
  const double sd = std::sqrt(2.0 * cfg_.diffusion * dt);
  const double q_branch = cfg_.N * cfg_.noise * dt;
  const std::size_t count = alive_.size();
  tally_.particle_steps += count;
  for (std::size_t i = 0; i < count; ++i) {
    Particle& p = alive_[i];
    const Philox4x32 r = key_.block(p.lineage, static_cast<std::uint64_t>(p.age) << 1);
    std::size_t cell = 0;
    if (grid_) {
      cell = grid_->cell_of(p.x);
      ++occ_[cell];
      ++occ_total_;
      if (stamp_[cell] != stamp_id_) {
        stamp_[cell] = stamp_id_;
        touched_.push_back(static_cast<std::uint32_t>(cell));
      }
    }
    const double eta = eta_of_cell(cell);
    Point y = p.x;
    if (move) {
      Philox4x32 extra{};
      bool have_extra = false;
      if (d == 1) {
        y[0] += sd * gaussian_first(u32_to_unit(r[2]), u32_to_unit(r[3]));
      } else {
        const auto z = box_muller(u32_to_unit(r[2]), u32_to_unit(r[3]));
        y[0] += sd * z[0];
        y[1] += sd * z[1];
      }
      if (d == 3) {
        extra = key_.block(p.lineage, (static_cast<std::uint64_t>(p.age) << 1) | 1);
        have_extra = true;
        y[2] += sd * gaussian_first(u32_to_unit(extra[0]), u32_to_unit(extra[1]));
      }
      if (bounded && try_exit(p, y, have_extra ? &extra : nullptr)) continue;
    }
    const double u_eta = u32_to_unit(r[1]);
    if (eta > 0 && u_eta < eta * dt) {
      ++tally_.eta_deaths;
      continue;
    }
    if (eta < 0 && u_eta < -eta * dt) {
      ++tally_.eta_births;
      next_.push_back({y, child_lineage(p.lineage, p.age, 3), 0, Status::alive});
    }
    const double u_b = u32_to_unit(r[0]);
    if (u_b < q_branch) {
      if (u_b < 0.5 * q_branch) {
        ++tally_.branch_deaths;
      } else {
        ++tally_.branch_splits;
        next_.push_back({y, child_lineage(p.lineage, p.age, 1), 0, Status::alive});
        next_.push_back({y, child_lineage(p.lineage, p.age, 2), 0, Status::alive});
      }
      continue;
    }
    p.x = y;
    ++p.age;
    next_.push_back(p);
  }
  alive_.swap(next_);
  time_ += dt;
  ++steps_;
}

}  // namespace rdphase::dw
