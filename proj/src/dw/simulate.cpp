#include "rdphase/dw/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdphase::dw {

double DwRunResult::mass_at(double t) const {
  if (alive_counts.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::llround(t / dt));
  if (k >= alive_counts.size()) return extinct ? 0.0 : alive_counts.back() / N;
  return alive_counts[k] / N;
}

double DwRunResult::occupation_mass() const {
  std::uint64_t s = 0;
  for (auto c : occupation) s += c;
  return static_cast<double>(s) * dt / N;
}

std::vector<std::uint64_t> DwRunResult::occupation_counts_between(double s, double t) const {
  if (!grid) throw std::invalid_argument("DwRunResult: run has no occupation grid");
  if (!(0 <= s && s <= t && t <= horizon)) throw std::invalid_argument("DwRunResult: need 0 <= s <= t <= horizon");
  auto at = [&](double tau) -> std::vector<std::uint64_t> {
    if (tau == 0.0) return std::vector<std::uint64_t>(occupation.size(), 0);
    if (tau >= end_time - 0.5 * dt) return occupation;
    for (std::size_t i = 0; i < snapshot_times.size(); ++i)
      if (std::abs(snapshot_times[i] - tau) <= 1e-9 * std::max(1.0, tau)) return snapshots[i];
    throw std::invalid_argument("DwRunResult: time is not a recorded snapshot");
  };
  auto a = at(s), b = at(t);
  for (std::size_t c = 0; c < b.size(); ++c) b[c] -= a[c];
  return b;
}

FiniteMeasure DwRunResult::occupation_between(double s, double t) const {
  auto counts = occupation_counts_between(s, t);
  FiniteMeasure m(*grid);
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c]) m.set(c, static_cast<double>(counts[c]) * dt / N);
  return m;
}

BoundaryMeasure DwRunResult::exit_measure(double pitch) const {
  BoundaryMeasure b(domain, pitch);
  for (const auto& x : exit_points) b.add(x, 1.0 / N);
  return b;
}

std::vector<Point> sample_particles(const FiniteMeasure& mu, double N, RngStream& rng) {
  std::vector<Point> pts;
  const Grid& g = mu.grid();
  for (std::size_t c = 0; c < mu.size(); ++c) {
    if (mu[c] == 0.0) continue;
    const double x = mu[c] * N;
    auto n = static_cast<std::uint64_t>(std::floor(x));
    if (rng.uniform() < x - std::floor(x)) ++n;
    const Point lo = g.cell_lower(c);
    for (std::uint64_t i = 0; i < n; ++i) {
      Point p{0, 0, 0};
      for (int k = 0; k < g.dim(); ++k) p[k] = lo[k] + rng.uniform() * g.pitch();
      pts.push_back(p);
    }
  }
  return pts;
}

std::vector<Point> point_mass_particles(const Point& x, double mass, double N) {
  return std::vector<Point>(static_cast<std::size_t>(std::llround(mass * N)), x);
}

double resolve_dt(const EngineConfig& cfg, double eta_bound, double horizon) {
  const double cap = stability_cap(cfg, eta_bound);
  double dt = cfg.dt > 0 ? cfg.dt : cap;
  if (dt > cap * (1 + 1e-12)) throw std::invalid_argument("simulate: dt violates the stability cap");
  if (std::isfinite(horizon)) {
    const double n = std::ceil(horizon / dt - 1e-9);
    dt = horizon / n;
  }
  return dt;
}

DwRunResult simulate_dw(std::span<const Point> initial, const RateField& eta, const BoxDomain& domain,
                        double horizon, const EngineConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                        const std::vector<double>& snapshot_times) {
  if (!(horizon > 0)) throw std::invalid_argument("simulate_dw: horizon must be > 0");
  const double dt = resolve_dt(cfg, eta.bound(), horizon);
  ParticleSystem sys(domain, cfg, seed, stream);
  for (std::size_t i = 0; i < initial.size(); ++i) sys.add(initial[i], 0, i);

  DwRunResult r;
  r.N = cfg.N;
  r.dt = dt;
  r.horizon = horizon;
  r.domain = domain;
  r.grid = sys.grid();
  r.alive_counts.push_back(sys.alive());
  std::vector<std::uint64_t> snap_steps;
  for (double s : snapshot_times) {
    if (!(s > 0 && s <= horizon)) throw std::invalid_argument("simulate_dw: snapshot time outside (0, horizon]");
    snap_steps.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s / dt))));
    r.snapshot_times.push_back(static_cast<double>(snap_steps.back()) * dt);
  }
  r.snapshots.resize(snap_steps.size());
  const std::uint64_t max_steps = std::isfinite(horizon)
                                      ? static_cast<std::uint64_t>(std::llround(horizon / dt))
                                      : cfg.max_steps;
  std::uint64_t done = 0;
  auto take_snapshots = [&] {
    for (std::size_t i = 0; i < snap_steps.size(); ++i)
      if (snap_steps[i] == done && r.grid) r.snapshots[i] = sys.occupation_counts();
  };
  while (done < max_steps && !sys.extinct()) {
    if (sys.alive() > cfg.max_particles || done >= cfg.max_steps) {
      r.budget_exceeded = true;
      break;
    }
    sys.step(dt, eta);
    ++done;
    r.alive_counts.push_back(sys.alive());
    take_snapshots();
  }
  r.extinct = sys.extinct();
  r.end_time = static_cast<double>(done) * dt;
  if (r.grid)
    for (std::size_t i = 0; i < snap_steps.size(); ++i)
      if (snap_steps[i] > done) r.snapshots[i] = sys.occupation_counts();
  r.occupation = sys.occupation_counts();
  r.exit_points = sys.frozen_points();
  r.tally = sys.tally();
  return r;
}

DwRunResult simulate_dw(const FiniteMeasure& mu, const RateField& eta, const BoxDomain& domain, double horizon,
                        const EngineConfig& cfg, RngStream& rng, const std::vector<double>& snapshot_times) {
  if (!domain.contains_box(mu.domain())) throw std::invalid_argument("simulate_dw: measure not supported in domain");
  auto pts = sample_particles(mu, cfg.N, rng);
  return simulate_dw(pts, eta, domain, horizon, cfg, rng.seed(), rng.stream_id(), snapshot_times);
}

double occupation_density(const DwRunResult& run, double s, double t, const Point& x, double eps) {
  if (!run.grid) throw std::invalid_argument("occupation_density: run has no occupation grid");
  if (!run.domain.contains_closed(x)) throw std::invalid_argument("occupation_density: x outside domain");
  if (eps < run.grid->pitch() * (1 - 1e-12)) throw std::invalid_argument("occupation_density: eps below grid pitch");
  if (s == t) return 0.0;
  FiniteMeasure m = run.occupation_between(s, t);
  Point hi = x;
  for (int i = 0; i < run.domain.dim(); ++i) hi[i] += eps;
  return m.box_mass(x, hi) / std::pow(eps, run.domain.dim());
}

}  // namespace rdphase::dw
