#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/errors.hpp"
#include "rdphase/loglaplace/solvers.hpp"

namespace rdphase::loglaplace {

namespace {

void check_inputs(const GridField& h1, const GridField& h2, const std::vector<double>& eta) {
  const NodeGrid& g = h1.grid;
  if (h1.values.size() != g.size() || h2.values.size() != g.size())
    throw std::invalid_argument("elliptic: field size mismatch");
  if (!eta.empty() && eta.size() != g.size()) throw std::invalid_argument("elliptic: eta size mismatch");
  for (double e : eta)
    if (!(e >= 0)) throw std::invalid_argument("elliptic: eta must be >= 0");
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!std::isfinite(h1.values[k]) || !std::isfinite(h2.values[k]))
      throw std::invalid_argument("elliptic: inputs must be finite");
}

// F(phi) = Lap phi - phi^2/2 - eta phi + h1 at interior nodes, 0 on the boundary.
std::vector<double> residual_vector(const std::vector<double>& phi, const GridField& h1, const std::vector<double>& eta) {
  const NodeGrid& g = h1.grid;
  std::vector<double> F(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.is_boundary(k)) continue;
    const double e = eta.empty() ? 0.0 : eta[k];
    F[k] = discrete_laplacian(g, phi, k) - 0.5 * phi[k] * phi[k] - e * phi[k] + h1.values[k];
  }
  return F;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> initial_guess(const GridField& h2) {
  const NodeGrid& g = h2.grid;
  std::vector<double> phi(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.is_boundary(k)) phi[k] = h2.values[k];
  return phi;
}

}  // namespace

double elliptic_residual(const GridField& phi, const GridField& h1, const std::vector<double>& eta) {
  return max_abs(residual_vector(phi.values, h1, eta));
}

EllipticResult solve_elliptic_newton(const GridField& h1, const GridField& h2, const std::vector<double>& eta,
                                     const EllipticConfig& cfg) {
  check_inputs(h1, h2, eta);
  const NodeGrid& g = h1.grid;
  std::vector<std::int64_t> index(g.size(), -1);
  std::int64_t m = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!g.is_boundary(k)) index[k] = m++;

  std::vector<double> phi = initial_guess(h2);
  std::vector<double> F = residual_vector(phi, h1, eta);
  double r = max_abs(F);
  const double h2inv = 1.0 / (g.pitch() * g.pitch());
  EllipticResult res;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool stalled = false;
  for (int it = 0; it < cfg.max_newton && r > cfg.tol; ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * (2 * g.dim() + 1));
    Eigen::VectorXd rhs(m);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::int64_t row = index[k];
      if (row < 0) continue;
      const double e = eta.empty() ? 0.0 : eta[k];
      trip.emplace_back(row, row, 2.0 * g.dim() * h2inv + phi[k] + e);
      for (int i = 0; i < g.dim(); ++i)
        for (std::size_t nb : {k + g.stride(i), k - g.stride(i)})
          if (index[nb] >= 0) trip.emplace_back(row, index[nb], -h2inv);
      rhs[row] = F[k];
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    if (it == 0) solver.analyzePattern(A);
    solver.factorize(A);
    if (solver.info() != Eigen::Success) throw NumericFailure("elliptic Newton: factorization failed");
    const Eigen::VectorXd delta = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !delta.allFinite()) throw NumericFailure("elliptic Newton: solve failed");

    double alpha = 1.0;
    std::vector<double> trial(phi);
    for (;;) {
      for (std::size_t k = 0; k < g.size(); ++k)
        if (index[k] >= 0) trial[k] = phi[k] + alpha * delta[index[k]];
      std::vector<double> Ft = residual_vector(trial, h1, eta);
      const double rt = max_abs(Ft);
      // The operator is convex, so a full step that keeps phi + eta >= 0 lands above the solution and the
      // iterates then decrease monotonically; the residual may grow on that first step.
      bool m_matrix = alpha == 1.0;
      for (std::size_t k = 0; m_matrix && k < g.size(); ++k)
        if (index[k] >= 0 && trial[k] + (eta.empty() ? 0.0 : eta[k]) < 0) m_matrix = false;
      if (std::isfinite(rt) && (m_matrix || rt < (1.0 - 1e-4 * alpha) * r || rt <= cfg.tol)) {
        phi.swap(trial);
        F.swap(Ft);
        r = rt;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-10) throw NumericFailure("elliptic Newton: line search failed");
    }
    res.newton_iterations = it + 1;
    // Stagnation at rounding level: the residual of large boundary data cannot reach an absolute tol.
    double step = 0.0, size = 1.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (index[k] >= 0) {
        step = std::max(step, std::abs(alpha * delta[index[k]]));
        size = std::max(size, std::abs(phi[k]));
      }
    if (step <= 1e-13 * size) {
      stalled = true;
      break;
    }
  }
  if (!(r <= cfg.tol) && !stalled) throw NumericFailure("elliptic Newton: no convergence");
  res.phi = GridField(g);
  res.phi.values = std::move(phi);
  res.residual = r;
  return res;
}

EllipticResult solve_elliptic_relaxation(const GridField& h1, const GridField& h2, const std::vector<double>& eta,
                                         const EllipticConfig& cfg) {
  check_inputs(h1, h2, eta);
  const NodeGrid& g = h1.grid;
  std::vector<double> phi = initial_guess(h2);
  // The solution is bounded by the larger of the boundary data and sqrt(2 max h1).
  double hmax = 0.0, bmax = 0.0, emax = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    hmax = std::max(hmax, h1.values[k]);
    if (g.is_boundary(k)) bmax = std::max(bmax, std::abs(h2.values[k]));
    if (!eta.empty()) emax = std::max(emax, eta[k]);
  }
  const double phimax = std::max(bmax, std::sqrt(2.0 * hmax));
  const double h2inv = 1.0 / (g.pitch() * g.pitch());
  const double tau = 0.9 / (2.0 * g.dim() * h2inv + 0.5 * (phimax + emax));
  EllipticResult res;
  double r = 0.0;
  for (std::size_t step = 0; step < cfg.max_relax_steps; ++step) {
    const std::vector<double> F = residual_vector(phi, h1, eta);
    r = max_abs(F);
    if (!std::isfinite(r)) throw NumericFailure("elliptic relaxation: diverged");
    if (r <= cfg.tol) break;
    for (std::size_t k = 0; k < g.size(); ++k) phi[k] += tau * F[k];
  }
  if (!(r <= cfg.tol)) throw NumericFailure("elliptic relaxation: no convergence");
  res.phi = GridField(g);
  res.phi.values = std::move(phi);
  res.residual = r;
  res.used_relaxation = true;
  return res;
}

EllipticResult solve_elliptic_loglaplace(const GridField& h1, const GridField& h2, const std::vector<double>& eta,
                                         const EllipticConfig& cfg) {
  try {
    return solve_elliptic_newton(h1, h2, eta, cfg);
  } catch (const NumericFailure&) {
    return solve_elliptic_relaxation(h1, h2, eta, cfg);
  }
}

}  // namespace rdphase::loglaplace
