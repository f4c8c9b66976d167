#include "rdphase/dw/engine.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace rdphase::dw {

void EngineConfig::validate() const {
  if (!(N >= 1) || !std::isfinite(N)) throw std::invalid_argument("EngineConfig: N must be >= 1");
  if (!(dt >= 0) || !std::isfinite(dt)) throw std::invalid_argument("EngineConfig: dt must be >= 0");
  if (!(diffusion > 0)) throw std::invalid_argument("EngineConfig: diffusion must be > 0");
  if (!(noise > 0)) throw std::invalid_argument("EngineConfig: noise must be > 0");
  if (!(occupation_pitch >= 0)) throw std::invalid_argument("EngineConfig: occupation pitch must be >= 0");
}

double stability_cap(const EngineConfig& cfg, double eta_bound) {
  double cap = 1.0 / (2.0 * cfg.N * cfg.noise);
  if (eta_bound > 0) cap = std::min(cap, 1.0 / (2.0 * eta_bound));
  return cap;
}

RateField::RateField(const Grid& grid, std::vector<double> values) : values_(std::move(values)), grid_(grid) {
  if (values_.size() != grid.size()) throw std::invalid_argument("RateField: size mismatch");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("RateField: non-finite rate");
    bound_ = std::max(bound_, std::abs(v));
  }
}

std::uint64_t child_lineage(std::uint64_t lineage, std::uint32_t age, std::uint64_t which) {
  return splitmix64(lineage ^ splitmix64((static_cast<std::uint64_t>(age) << 2) | which));
}

ParticleSystem::ParticleSystem(const BoxDomain& domain, const EngineConfig& cfg, std::uint64_t seed,
                               std::uint64_t stream)
    : domain_(domain), cfg_(cfg), key_(seed, stream) {
  cfg_.validate();
  if (cfg_.occupation_pitch > 0) {
    if (!domain.bounded()) throw std::invalid_argument("ParticleSystem: occupation grid needs a bounded domain");
    grid_.emplace(domain, cfg_.occupation_pitch);
    occ_.assign(grid_->size(), 0);
    stamp_.assign(grid_->size(), 0);
  }
}

void ParticleSystem::add(const Point& x, std::uint64_t component, std::uint64_t index) {
  add_lineage(x, hash_words({0x636F6D70ULL, component, index}));
}

void ParticleSystem::add_lineage(const Point& x, std::uint64_t lineage) {
  if (!domain_.contains(x)) throw std::invalid_argument("ParticleSystem: particle outside the open domain");
  alive_.push_back({x, lineage, 0, Status::alive});
  if (steps_ == 0) ++tally_.initial;
  else ++tally_.injected;
}

bool ParticleSystem::try_exit(Particle& p, const Point& y, const Philox4x32* extra) {
  const int d = domain_.dim();
  double best = 2.0;
  int axis = -1;
  double bound = 0.0;
  for (int i = 0; i < d; ++i) {
    const double lo = domain_.lower(i), hi = domain_.upper(i);
    if (y[i] <= lo) {
      const double frac = (p.x[i] - lo) / (p.x[i] - y[i]);
      if (frac < best) best = frac, axis = i, bound = lo;
    } else if (y[i] >= hi) {
      const double frac = (hi - p.x[i]) / (y[i] - p.x[i]);
      if (frac < best) best = frac, axis = i, bound = hi;
    }
  }
  Point z{0, 0, 0};
  if (axis >= 0) {
    for (int i = 0; i < d; ++i)
      z[i] = std::clamp(p.x[i] + best * (y[i] - p.x[i]), domain_.lower(i), domain_.upper(i));
    z[axis] = bound;
  } else {
    if (!cfg_.bridge_correction) return false;
    // Brownian-bridge crossing probability for each face, from the step endpoints.
    const double scale = cfg_.diffusion * dt_used_;
    double survive = 1.0, pmax = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int side = 0; side < 2; ++side) {
        const double a = side ? domain_.upper(i) : domain_.lower(i);
        const double prod = (p.x[i] - a) * (y[i] - a) / scale;
        if (prod > 40.0) continue;
        const double pc = std::exp(-prod);
        survive *= 1.0 - pc;
        if (pc > pmax) pmax = pc, axis = i, bound = a;
      }
    }
    if (axis < 0) return false;
    const Philox4x32 e = extra ? *extra : key_.block(p.lineage, (static_cast<std::uint64_t>(p.age) << 1) | 1);
    if (u32_to_unit(e[2]) >= 1.0 - survive) return false;
    z = y;
    z[axis] = bound;
  }
  p.x = z;
  p.status = Status::frozen;
  frozen_.push_back(p);
  ++tally_.frozen;
  return true;
}

void ParticleSystem::step(double dt, const RateField& eta) {
  if (eta.is_constant()) {
    const double v = eta.value();
    step(dt, [v](std::size_t) { return v; });
    return;
  }
  if (!grid_ || !(*eta.grid() == *grid_)) throw std::invalid_argument("ParticleSystem: rate field grid mismatch");
  step(dt, [&eta](std::size_t c) { return eta.at(c); });
}

FiniteMeasure ParticleSystem::occupation_measure() const {
  if (!grid_) throw std::invalid_argument("ParticleSystem: no occupation grid");
  FiniteMeasure m(*grid_);
  const double w = dt_used_ / cfg_.N;
  for (std::size_t c = 0; c < occ_.size(); ++c)
    if (occ_[c]) m.set(c, static_cast<double>(occ_[c]) * w);
  return m;
}

BoundaryMeasure ParticleSystem::exit_measure(double pitch) const {
  BoundaryMeasure b(domain_, pitch);
  for (const auto& p : frozen_) b.add(p.x, 1.0 / cfg_.N);
  return b;
}

std::vector<Point> ParticleSystem::frozen_points() const {
  std::vector<Point> pts;
  pts.reserve(frozen_.size());
  for (const auto& p : frozen_) pts.push_back(p.x);
  return pts;
}

void dw_step(ParticleSystem& sys, double dt, const RateField& eta, const BoxDomain& domain) {
  if (!(domain == sys.domain())) throw std::invalid_argument("dw_step: domain mismatch");
  if (!(dt > 0) || dt > stability_cap(sys.config(), eta.bound()) * (1 + 1e-12))
    throw std::invalid_argument("dw_step: dt violates the stability cap");
  if (sys.extinct()) {
    sys.advance_time(dt);
    return;
  }
  sys.step(dt, eta);
}

}  // namespace rdphase::dw
