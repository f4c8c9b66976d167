#include "rdphase/dw/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdphase::dw {

HeatSemigroup::HeatSemigroup(const Grid& grid, double gamma, const SemigroupConfig& cfg)
    : grid_(grid), gamma_(gamma), cfg_(cfg) {
  if (!(gamma >= 0)) throw std::invalid_argument("HeatSemigroup: gamma must be >= 0");
  const double h = grid.pitch();
  const double bound = h * h / (2.0 * grid.dim() * cfg.diffusion);
  dt_ = cfg.dt > 0 ? cfg.dt : 0.9 * bound;
  if (dt_ > bound * (1 + 1e-12)) throw std::invalid_argument("HeatSemigroup: unstable step size");
  scratch_.resize(grid.size());
}

std::size_t HeatSemigroup::steps_for(double t) const {
  return static_cast<std::size_t>(std::ceil(t / dt_ - 1e-9));
}

void HeatSemigroup::step(std::vector<double>& w) const {
  const int d = grid_.dim();
  const double h = grid_.pitch();
  const double lam = cfg_.diffusion * dt_ / (h * h);
  const double kill = std::exp(-gamma_ * dt_);
  const bool dirichlet = cfg_.mode == BoundaryMode::dirichlet;
  for (std::size_t c = 0; c < w.size(); ++c) {
    const auto idx = grid_.unflatten(c);
    double lap = 0.0;
    for (int i = 0; i < d; ++i) {
      auto nb = idx;
      for (int s : {-1, 1}) {
        nb[i] = idx[i] + s;
        if (nb[i] < 0 || nb[i] >= grid_.cells(i)) lap += dirichlet ? -2.0 * w[c] : 0.0;
        else lap += w[grid_.flatten(nb)] - w[c];
      }
    }
    scratch_[c] = kill * (w[c] + lam * lap);
  }
  w.swap(scratch_);
}

std::vector<double> HeatSemigroup::apply(std::vector<double> w, double t) const {
  const std::size_t n = steps_for(t);
  for (std::size_t k = 0; k < n; ++k) step(w);
  return w;
}

namespace {

void check_inputs(const FiniteMeasure& mu, const std::vector<double>& g) {
  if (g.size() != mu.size()) throw std::invalid_argument("moment oracle: function size mismatch");
  for (double x : g)
    if (!(x >= 0) || !std::isfinite(x)) throw std::invalid_argument("moment oracle: g must be bounded and >= 0");
}

SemigroupConfig with_step(const SemigroupConfig& cfg, const Grid& g, double t) {
  // Choose a step that divides t exactly.
  SemigroupConfig c = cfg;
  const double h = g.pitch();
  const double bound = h * h / (2.0 * g.dim() * cfg.diffusion);
  const double target = cfg.dt > 0 ? cfg.dt : 0.9 * bound;
  if (target > bound * (1 + 1e-12)) throw std::invalid_argument("moment oracle: unstable step size");
  c.dt = t / std::ceil(t / target - 1e-9);
  return c;
}

}  // namespace

double moment_oracle_first(const FiniteMeasure& mu, const std::vector<double>& g, double t, double gamma,
                           const SemigroupConfig& cfg) {
  check_inputs(mu, g);
  if (!(t >= 0)) throw std::invalid_argument("moment oracle: t must be >= 0");
  if (t == 0) return mu.integrate(g);
  HeatSemigroup G(mu.grid(), gamma, with_step(cfg, mu.grid(), t));
  return mu.integrate(G.apply(g, t));
}

double moment_oracle_second(const FiniteMeasure& mu, const std::vector<double>& g, const std::vector<double>& h,
                            double s, double t, double gamma, const SemigroupConfig& cfg) {
  check_inputs(mu, g);
  check_inputs(mu, h);
  if (!(s >= 0 && t >= 0)) throw std::invalid_argument("moment oracle: times must be >= 0");
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  if (hi == 0) return mu.integrate(g) * mu.integrate(h);
  HeatSemigroup G(mu.grid(), gamma, with_step(cfg, mu.grid(), lo > 0 ? lo : hi));
  const double dt = G.dt();
  const double n_hi = hi / dt;
  if (std::abs(n_hi - std::round(n_hi)) > 1e-6) throw std::invalid_argument("moment oracle: s and t must share the step");
  const auto nh = static_cast<std::size_t>(std::llround(n_hi));
  const auto nl = static_cast<std::size_t>(std::llround(lo / dt));
  const bool t_is_hi = t >= s;
  const std::vector<double>& f_hi = t_is_hi ? g : h;
  const std::vector<double>& f_lo = t_is_hi ? h : g;

  // Snapshots G_k f for k = 0..n.
  auto snaps = [&](const std::vector<double>& f, std::size_t n) {
    std::vector<std::vector<double>> v{f};
    for (std::size_t k = 0; k < n; ++k) {
      v.push_back(v.back());
      G.step(v.back());
    }
    return v;
  };
  const auto S_hi = snaps(f_hi, nh);
  const auto S_lo = snaps(f_lo, nl);
  const double first = mu.integrate(S_hi[nh]) * mu.integrate(S_lo[nl]);

  // p_j = G_{r_j} mu, with r_j = j dt; integrand mu(G_r q) = <G_r mu, q> by symmetry.
  std::vector<double> p = mu.masses();
  double integral = 0.0;
  for (std::size_t j = 0; nl > 0 && j <= nl; ++j) {
    const auto& a = S_hi[nh - j];
    const auto& b = S_lo[nl - j];
    double val = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) val += p[c] * a[c] * b[c];
    integral += (j == 0 || j == nl ? 0.5 : 1.0) * val * dt;
    if (j < nl) G.step(p);
  }
  return first + integral;
}

}  // namespace rdphase::dw
