#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/errors.hpp"
#include "rdphase/loglaplace/solvers.hpp"

namespace rdphase::loglaplace {

namespace {

double neighbour(const NodeGrid& g, const std::vector<double>& v, std::size_t k, int axis, int side,
                 const std::array<std::int64_t, kMaxDim>& idx) {
  // Mirror ghost nodes give the zero-flux condition.
  const std::int64_t j = idx[axis] + side;
  if (j < 0) return v[k + g.stride(axis)];
  if (j >= g.nodes(axis)) return v[k - g.stride(axis)];
  return side > 0 ? v[k + g.stride(axis)] : v[k - g.stride(axis)];
}

}  // namespace

GridField solve_parabolic_loglaplace(const ParabolicProblem& prob, double t, const ParabolicConfig& cfg) {
  const NodeGrid& g = prob.h1.grid;
  if (!(t >= 0)) throw std::invalid_argument("parabolic: t must be >= 0");
  if (!prob.eta.empty() && prob.eta.size() != g.size()) throw std::invalid_argument("parabolic: eta size mismatch");
  const double h = g.pitch();
  const double bound = h * h / (2.0 * g.dim());
  double dt = cfg.dt > 0 ? cfg.dt : 0.9 * bound;
  if (dt > bound * (1 + 1e-12)) throw std::invalid_argument("parabolic: step exceeds pitch^2/(2d)");
  const auto n = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
  if (n > 0) dt = t / static_cast<double>(n);

  // Comparison with the spatially free ODE bounds |phi|.
  double y0 = 0.0, h2max = 0.0, eta_neg = 0.0;
  for (double v : prob.h1.values) y0 = std::max(y0, std::abs(v));
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (prob.h3 && g.is_boundary(k))
      for (double s : {0.0, 0.5 * t, t}) y0 = std::max(y0, std::abs(prob.h3(s, g.point(k))));
    if (prob.h2)
      for (double s : {0.0, 0.5 * t, t}) h2max = std::max(h2max, std::abs(prob.h2(s, g.point(k))));
    if (!prob.eta.empty()) eta_neg = std::max(eta_neg, -prob.eta[k]);
  }
  const double limit = 2.0 * (y0 + h2max * t) * std::exp(eta_neg * t) + 1.0;

  std::vector<double> phi = prob.h1.values, next(g.size());
  const bool dirichlet = cfg.boundary == Boundary::dirichlet;
  auto set_boundary = [&](double tau) {
    if (!dirichlet) return;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.is_boundary(k)) phi[k] = prob.h3 ? prob.h3(tau, g.point(k)) : 0.0;
  };
  set_boundary(t);
  const double h2inv = 1.0 / (h * h);
  for (std::size_t step = 0; step < n; ++step) {
    const double tau = t - static_cast<double>(step) * dt;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (dirichlet && g.is_boundary(k)) {
        next[k] = phi[k];
        continue;
      }
      const auto idx = g.unflatten(k);
      double lap = 0.0;
      for (int i = 0; i < g.dim(); ++i)
        lap += neighbour(g, phi, k, i, 1, idx) + neighbour(g, phi, k, i, -1, idx) - 2.0 * phi[k];
      lap *= h2inv;
      const double eta = prob.eta.empty() ? 0.0 : prob.eta[k];
      const double force = prob.h2 ? prob.h2(tau, g.point(k)) : 0.0;
      next[k] = phi[k] + dt * (lap - eta * phi[k] - 0.5 * phi[k] * phi[k] + force);
    }
    phi.swap(next);
    set_boundary(tau - dt);
    for (double v : phi)
      if (!std::isfinite(v) || std::abs(v) > limit) throw StepSizeError("parabolic: solution left the comparison bound");
  }
  GridField out(g);
  out.values = std::move(phi);
  return out;
}

double riccati_lambda(double gamma, double t) {
  if (!(t > 0)) throw std::invalid_argument("riccati_lambda: t must be > 0");
  if (!(gamma >= 0)) throw std::invalid_argument("riccati_lambda: gamma must be >= 0");
  if (gamma == 0) return 2.0 / t;
  return 2.0 * gamma / std::expm1(gamma * t);
}

double riccati_lambda_numeric(double gamma, double t, int steps) {
  if (!(t > 0)) throw std::invalid_argument("riccati_lambda: t must be > 0");
  const double h = t / steps;
  double u = 0.0;
  auto f = [gamma](double x) { return gamma * x + 0.5; };
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return 1.0 / u;
}

}  // namespace rdphase::loglaplace
