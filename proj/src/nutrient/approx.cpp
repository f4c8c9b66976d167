#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/rng.hpp"
#include "rdphase/dw/simulate.hpp"
#include "rdphase/nutrient/nutrient.hpp"

namespace rdphase::nutrient {

namespace {

std::uint64_t component_id(std::uint64_t base, std::uint64_t j) { return (base << 40) + j; }

void check_setup(const NutrientPackages& pkgs, const Coefficients& k) {
  k.validate();
  if (!pkgs.grid.domain().bounded()) throw std::invalid_argument("nutrient: domain must be bounded");
  if (pkgs.count.size() != pkgs.grid.size()) throw std::invalid_argument("nutrient: package counts do not match grid");
}

// Lazily generated increasing thresholds per cell, identical to cell_thresholds.
class ThresholdQueue {
 public:
  ThresholdQueue(const NutrientPackages& pkgs, std::uint64_t seed, std::uint64_t stream)
      : pkgs_(pkgs),
        key_(hash_words({seed, stream, 0x7468726573ULL})),
        rank_(pkgs.grid.size(), 0),
        level_(pkgs.grid.size(), 0.0),
        valid_(pkgs.grid.size(), 0) {}

  bool exhausted(std::uint32_t c) const { return rank_[c] >= pkgs_.count[c]; }
  std::uint32_t rank(std::uint32_t c) const { return rank_[c]; }
  double current(std::uint32_t c) {
    if (!valid_[c]) {
      level_[c] += key_.exponential(c, rank_[c]) / static_cast<double>(pkgs_.count[c] - rank_[c]);
      valid_[c] = 1;
    }
    return level_[c];
  }
  void advance(std::uint32_t c) {
    current(c);
    ++rank_[c];
    valid_[c] = 0;
  }

 private:
  const NutrientPackages& pkgs_;
  KeyedRng key_;
  std::vector<std::uint32_t> rank_;
  std::vector<double> level_;
  std::vector<char> valid_;
};

dw::EngineConfig grid_engine(const Coefficients& k, const dw::EngineConfig& cfg, const Grid& g) {
  auto e = engine_for(k, cfg);
  e.occupation_pitch = g.pitch();
  return e;
}

ComponentTrace run_component(std::span<const Point> pts, std::uint64_t comp, const NutrientPackages& pkgs,
                             const Coefficients& k, const dw::EngineConfig& cfg, double dt, std::uint64_t seed,
                             std::uint64_t stream) {
  ComponentTrace tr;
  if (pts.empty()) return tr;
  dw::ParticleSystem sys(pkgs.grid.domain(), grid_engine(k, cfg, pkgs.grid), seed, stream);
  for (std::size_t i = 0; i < pts.size(); ++i) sys.add(pts[i], comp, i);
  const auto eta = dw::RateField::constant(k.death);
  while (!sys.extinct()) {
    if (sys.alive() > cfg.max_particles || sys.steps() >= cfg.max_steps) {
      tr.budget_exceeded = true;
      break;
    }
    sys.step(dt, eta);
  }
  const auto& occ = sys.occupation_counts();
  for (std::size_t c = 0; c < occ.size(); ++c)
    if (occ[c]) tr.occupation.push_back({static_cast<std::uint32_t>(c), occ[c]});
  tr.exits = sys.frozen_points();
  return tr;
}

}  // namespace

dw::EngineConfig engine_for(const Coefficients& k, const dw::EngineConfig& base) {
  auto e = base;
  e.diffusion = k.diffusion;
  e.noise = k.noise;
  return e;
}

double ReactionResult::occupation_mass() const {
  std::uint64_t s = 0;
  for (auto c : occupation) s += c;
  return static_cast<double>(s) * dt / N;
}

FiniteMeasure ReactionResult::occupation_measure() const {
  FiniteMeasure m(grid);
  for (std::size_t c = 0; c < occupation.size(); ++c)
    if (occupation[c]) m.set(c, static_cast<double>(occupation[c]) * dt / N);
  return m;
}

BoundaryMeasure ReactionResult::exit_measure(double pitch) const {
  BoundaryMeasure b(domain, pitch);
  for (const auto& x : exit_points) b.add(x, 1.0 / N);
  return b;
}

ReactionResult simulate_nutrient_approx(std::span<const Point> initial, const NutrientPackages& pkgs,
                                        const Coefficients& k, const dw::EngineConfig& cfg_in, std::uint64_t seed,
                                        std::uint64_t stream, const ReactionOptions& opt) {
  check_setup(pkgs, k);
  if (!(opt.horizon > 0)) throw std::invalid_argument("nutrient: horizon must be > 0");
  const auto cfg = grid_engine(k, cfg_in, pkgs.grid);
  cfg.validate();
  const double dt = dw::resolve_dt(cfg, k.death, opt.horizon);
  const BoxDomain& domain = pkgs.grid.domain();
  dw::ParticleSystem sys(domain, cfg, seed, stream);
  for (std::size_t i = 0; i < initial.size(); ++i) sys.add(initial[i], component_id(opt.component_base, 0), i);

  ReactionResult r;
  r.N = cfg.N;
  r.dt = dt;
  r.horizon = opt.horizon;
  r.domain = domain;
  r.grid = pkgs.grid;
  std::vector<std::uint32_t> used(pkgs.grid.size(), 0);
  std::vector<char> pre;
  if (!opt.pretriggered.empty()) pre.assign(pkgs.total(), 0);
  auto inject = [&](std::uint64_t pkg) {
    const auto pts = package_particles(pkgs, pkg, k.reaction, seed, stream);
    for (std::size_t i = 0; i < pts.size(); ++i) sys.add(pts[i], component_id(opt.component_base, 1 + pkg), i);
  };
  for (auto pkg : opt.pretriggered) {
    if (pkg >= pkgs.total()) throw std::invalid_argument("nutrient: pretriggered package out of range");
    if (pre[pkg]) continue;
    pre[pkg] = 1;
    ++used[pkgs.cell_of_package(pkg)];
    inject(pkg);
  }
  r.alive_counts.push_back(sys.alive());

  std::vector<std::uint64_t> snap_steps;
  for (double s : opt.snapshot_times) {
    if (!(s > 0 && s <= opt.horizon)) throw std::invalid_argument("nutrient: snapshot time outside (0, horizon]");
    snap_steps.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s / dt))));
    r.snapshot_times.push_back(static_cast<double>(snap_steps.back()) * dt);
  }
  r.v_snapshots.resize(snap_steps.size());
  auto levels = [&] {
    std::vector<double> v(pkgs.grid.size());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = (pkgs.count[c] - used[c]) / pkgs.N;
    return v;
  };

  ThresholdQueue queue(pkgs, seed, stream);
  const double scale = k.depletion * dt / (cfg.N * pkgs.grid.cell_volume());
  const auto eta = dw::RateField::constant(k.death);
  const std::uint64_t max_steps =
      std::isfinite(opt.horizon) ? static_cast<std::uint64_t>(std::llround(opt.horizon / dt)) : cfg.max_steps;
  std::vector<std::uint64_t> fired;
  std::uint64_t done = 0;
  while (done < max_steps && !sys.extinct()) {
    if (sys.alive() > cfg.max_particles || done >= cfg.max_steps) {
      r.budget_exceeded = true;
      break;
    }
    sys.step(dt, eta);
    ++done;
    fired.clear();
    if (k.depletion > 0) {
      const auto& occ = sys.occupation_counts();
      for (std::uint32_t c : sys.touched()) {
        const double level = scale * static_cast<double>(occ[c]);
        while (!queue.exhausted(c) && level > queue.current(c)) {
          const std::uint64_t pkg = pkgs.offset[c] + queue.rank(c);
          queue.advance(c);
          if (!pre.empty() && pre[pkg]) continue;
          fired.push_back(pkg);
          ++used[c];
        }
      }
    }
    std::sort(fired.begin(), fired.end());
    for (auto pkg : fired) {
      r.triggers.push_back({pkg, pkgs.cell_of_package(pkg), sys.time()});
      inject(pkg);
    }
    r.alive_counts.push_back(sys.alive());
    for (std::size_t i = 0; i < snap_steps.size(); ++i)
      if (snap_steps[i] == done) r.v_snapshots[i] = levels();
  }
  for (std::size_t i = 0; i < snap_steps.size(); ++i)
    if (snap_steps[i] > done) r.v_snapshots[i] = levels();
  r.end_time = sys.time();
  r.extinct = sys.extinct();
  r.occupation = sys.occupation_counts();
  r.exit_points = sys.frozen_points();
  r.v_final = levels();
  r.remaining.resize(pkgs.grid.size());
  for (std::size_t c = 0; c < used.size(); ++c) r.remaining[c] = pkgs.count[c] - used[c];
  r.tally = sys.tally();
  return r;
}

StaticConstruction build_static(std::span<const Point> initial, const NutrientPackages& pkgs, const Coefficients& k,
                                const dw::EngineConfig& cfg_in, std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t component_base) {
  check_setup(pkgs, k);
  const auto cfg = grid_engine(k, cfg_in, pkgs.grid);
  cfg.validate();
  StaticConstruction sc;
  sc.dt = dw::resolve_dt(cfg, k.death, std::numeric_limits<double>::infinity());
  sc.base = run_component(initial, component_id(component_base, 0), pkgs, k, cfg, sc.dt, seed, stream);
  auto& inst = sc.instance;
  inst.cells = pkgs.grid.size();
  inst.scale = k.depletion * sc.dt / (cfg.N * pkgs.grid.cell_volume());
  inst.base.assign(inst.cells, 0);
  for (const auto& e : sc.base.occupation) inst.base[e.cell] = e.count;
  const std::uint64_t n = pkgs.total();
  inst.cell_of.resize(n);
  inst.threshold.resize(n);
  inst.rows.resize(n);
  sc.components.resize(n);
  for (std::uint32_t c = 0; c < pkgs.grid.size(); ++c) {
    if (!pkgs.count[c]) continue;
    const auto e = cell_thresholds(pkgs, c, seed, stream);
    for (std::uint32_t i = 0; i < pkgs.count[c]; ++i) {
      const std::uint64_t pkg = pkgs.offset[c] + i;
      inst.cell_of[pkg] = c;
      inst.threshold[pkg] = e[i];
      const auto pts = package_particles(pkgs, pkg, k.reaction, seed, stream);
      sc.components[pkg] = run_component(pts, component_id(component_base, 1 + pkg), pkgs, k, cfg, sc.dt, seed, stream);
      inst.rows[pkg] = sc.components[pkg].occupation;
    }
  }
  return sc;
}

StaticResult solve_static(const StaticConstruction& sc, const NutrientPackages& pkgs) {
  StaticResult r;
  auto fp = trigger::smallest_fixed_point(sc.instance);
  r.set = std::move(fp.set);
  r.occupation = std::move(fp.occupation);
  r.exit_points = sc.base.exits;
  r.remaining = pkgs.count;
  for (auto a : r.set) {
    const auto& ex = sc.components[a].exits;
    r.exit_points.insert(r.exit_points.end(), ex.begin(), ex.end());
    --r.remaining[sc.instance.cell_of[a]];
  }
  return r;
}

}  // namespace rdphase::nutrient
