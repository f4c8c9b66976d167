#include "rdphase/wave/wave.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdphase::wave {

WaveState rhs(const WaveState& s, double c, double gamma) {
  return {s.W, s.U * s.V / c, gamma * s.U - c * s.W - s.U * s.V};
}

EigenPair eigenvalues(Equilibrium at, double c, double gamma) {
  if (!(c > 0)) throw std::invalid_argument("eigenvalues: c must be > 0");
  const double q = at == Equilibrium::origin ? -gamma : 1.0 - gamma;
  EigenPair e;
  e.discriminant = c * c - 4.0 * q;
  if (e.discriminant < 0) {
    const double im = 0.5 * std::sqrt(-e.discriminant);
    e.first = {-0.5 * c, -im};
    e.second = {-0.5 * c, im};
    e.complex = true;
    e.classification = "complex";
    return e;
  }
  // Stable form: t = -(c + sqrt(disc)) / 2, roots t and q / t.
  const double t = -0.5 * (c + std::sqrt(e.discriminant));
  const double other = q / t;
  e.first = std::min(t, other);
  e.second = std::max(t, other);
  e.classification = e.discriminant == 0.0 ? "real-double" : "real-split";
  return e;
}

Admissibility wave_admissible(double c, double gamma) {
  if (!(c > 0)) throw std::invalid_argument("wave_admissible: c must be > 0");
  if (!(gamma >= 0)) throw std::invalid_argument("wave_admissible: gamma must be >= 0");
  Admissibility a;
  a.gamma_above_one = gamma > 1.0;
  a.admissible = c * c >= 4.0 * (1.0 - gamma);
  return a;
}

double residual_nutrient(double gamma) {
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("residual_nutrient: gamma must lie in (0, 1)");
  auto f = [&](double a) { return gamma * std::log(1.0 / a) - (1.0 - a); };
  double lo = 1e-300, hi = gamma;
  for (int i = 0; i < 2000 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = lo < 1e-12 * hi ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

WaveState axpy(const WaveState& x, double h, std::initializer_list<std::pair<double, const WaveState*>> terms) {
  WaveState y = x;
  for (const auto& [a, k] : terms) {
    y.U += h * a * k->U;
    y.V += h * a * k->V;
    y.W += h * a * k->W;
  }
  return y;
}

double distance_to_one(const WaveState& s) { return std::sqrt(s.U * s.U + (s.V - 1) * (s.V - 1) + s.W * s.W); }

}  // namespace

ShootResult shoot(double c, double gamma, const ShootConfig& cfg) {
  if (!(c > 0)) throw std::invalid_argument("shoot: c must be > 0");
  if (!(cfg.delta > 0)) throw std::invalid_argument("shoot: delta must be > 0");
  ShootResult r;
  r.c = c;
  r.gamma = gamma;
  const double a = residual_nutrient(gamma);
  r.rest_nutrient = a;
  // Linearisation at (0, a, 0): lambda^2 + c lambda - (gamma - a) = 0, eigenvector (1, a / (c lambda), lambda).
  const double lam = 0.5 * (-c + std::sqrt(c * c + 4.0 * (gamma - a)));
  r.start = {cfg.delta, a + cfg.delta * a / (c * lam), cfg.delta * lam};

  // Dormand-Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;

  WaveState y = r.start;
  double s = 0.0, h = 1e-3;
  r.min_U = y.U;
  r.terminal_distance = distance_to_one(y);
  r.s.push_back(s);
  r.trajectory.push_back(y);
  auto f = [&](const WaveState& x) { return rhs(x, c, gamma); };
  WaveState k1 = f(y);
  std::size_t accepted = 0;
  for (std::size_t step = 0; step < cfg.max_steps && s < cfg.s_max; ++step) {
    h = std::min(h, cfg.s_max - s);
    const WaveState k2 = f(axpy(y, h, {{a21, &k1}}));
    const WaveState k3 = f(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const WaveState k4 = f(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const WaveState k5 = f(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const WaveState k6 = f(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const WaveState yn = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const WaveState k7 = f(yn);
    const WaveState err = axpy({}, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});
    auto sc = [&](double p, double q) { return cfg.atol + cfg.rtol * std::max(std::abs(p), std::abs(q)); };
    const double en = std::sqrt((std::pow(err.U / sc(y.U, yn.U), 2) + std::pow(err.V / sc(y.V, yn.V), 2) +
                                 std::pow(err.W / sc(y.W, yn.W), 2)) / 3.0);
    if (!std::isfinite(en)) {
      r.diverged = true;
      break;
    }
    if (en <= 1.0) {
      if (yn.U > 0 && y.U > 0 && yn.V < y.V - 1e-14 * std::abs(y.V)) r.v_monotone = false;
      s += h;
      y = yn;
      k1 = k7;
      r.min_U = std::min(r.min_U, y.U);
      if (y.U < -cfg.positivity_tol || y.V < -cfg.positivity_tol) r.stays_positive = false;
      r.terminal_distance = std::min(r.terminal_distance, distance_to_one(y));
      if (++accepted % cfg.record_every == 0) {
        r.s.push_back(s);
        r.trajectory.push_back(y);
      }
      if (std::max({std::abs(y.U), std::abs(y.V), std::abs(y.W)}) > cfg.blowup) {
        r.diverged = true;
        break;
      }
      if (r.terminal_distance < cfg.distance_floor) {
        r.converged = true;
        break;
      }
    }
    h *= std::clamp(0.9 * std::pow(std::max(en, 1e-300), -0.2), 0.2, 5.0);
  }
  r.terminal_distance = std::max(r.terminal_distance, cfg.distance_floor);
  if (r.s.back() != s) {
    r.s.push_back(s);
    r.trajectory.push_back(y);
  }
  return r;
}

}  // namespace rdphase::wave
