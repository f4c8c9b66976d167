#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/dw/simulate.hpp"
#include "rdphase/nutrient/nutrient.hpp"

namespace rdphase::nutrient {

ReactionResult simulate_direct(std::span<const Point> initial, const NutrientField& f, const Coefficients& k,
                               const dw::EngineConfig& cfg_in, std::uint64_t seed, std::uint64_t stream,
                               const ReactionOptions& opt) {
  k.validate();
  f.validate();
  if (!(opt.horizon > 0)) throw std::invalid_argument("direct: horizon must be > 0");
  const Grid& g = f.grid;
  if (!g.domain().bounded()) throw std::invalid_argument("direct: domain must be bounded");
  auto cfg = engine_for(k, cfg_in);
  if (g.pitch() > (1.0 / cfg.N) * (1 + 1e-9)) throw std::invalid_argument("direct: grid pitch exceeds 1/N");
  cfg.occupation_pitch = g.pitch();
  cfg.validate();

  double fmax = 0.0;
  for (double v : f.value) fmax = std::max(fmax, v);
  const double bound = std::max(std::abs(k.death), std::abs(k.death - k.reaction * fmax));
  const double dt = dw::resolve_dt(cfg, bound, opt.horizon);
  dw::ParticleSystem sys(g.domain(), cfg, seed, stream);
  for (std::size_t i = 0; i < initial.size(); ++i) sys.add(initial[i], opt.component_base << 40, i);

  std::vector<double> v = f.value, eta(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) eta[c] = k.death - k.reaction * v[c];
  const double scale = k.depletion * dt / (cfg.N * g.cell_volume());

  ReactionResult r;
  r.N = cfg.N;
  r.dt = dt;
  r.horizon = opt.horizon;
  r.domain = g.domain();
  r.grid = g;
  r.alive_counts.push_back(sys.alive());
  std::vector<std::uint64_t> snap_steps;
  for (double s : opt.snapshot_times) {
    if (!(s > 0 && s <= opt.horizon)) throw std::invalid_argument("direct: snapshot time outside (0, horizon]");
    snap_steps.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s / dt))));
    r.snapshot_times.push_back(static_cast<double>(snap_steps.back()) * dt);
  }
  r.v_snapshots.resize(snap_steps.size());

  const std::uint64_t max_steps =
      std::isfinite(opt.horizon) ? static_cast<std::uint64_t>(std::llround(opt.horizon / dt)) : cfg.max_steps;
  std::uint64_t done = 0;
  while (done < max_steps && !sys.extinct()) {
    if (sys.alive() > cfg.max_particles || done >= cfg.max_steps) {
      r.budget_exceeded = true;
      break;
    }
    sys.step(dt, [&](std::size_t c) { return eta[c]; });
    ++done;
    const auto& occ = sys.occupation_counts();
    for (std::uint32_t c : sys.touched()) {
      if (f.value[c] == 0.0) continue;
      v[c] = f.value[c] * std::exp(-scale * static_cast<double>(occ[c]));
      eta[c] = k.death - k.reaction * v[c];
    }
    r.alive_counts.push_back(sys.alive());
    for (std::size_t i = 0; i < snap_steps.size(); ++i)
      if (snap_steps[i] == done) r.v_snapshots[i] = v;
  }
  for (std::size_t i = 0; i < snap_steps.size(); ++i)
    if (snap_steps[i] > done) r.v_snapshots[i] = v;
  r.end_time = sys.time();
  r.extinct = sys.extinct();
  r.occupation = sys.occupation_counts();
  r.exit_points = sys.frozen_points();
  r.v_final = std::move(v);
  r.tally = sys.tally();
  return r;
}

}  // namespace rdphase::nutrient
