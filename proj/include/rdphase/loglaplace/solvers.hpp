#pragma once
#include <functional>

#include "rdphase/loglaplace/grid_field.hpp"

namespace rdphase::loglaplace {

enum class Boundary { dirichlet, neumann };

struct ParabolicConfig {
  double dt = 0.0;  // 0 selects 0.9 of the explicit stability bound
  Boundary boundary = Boundary::dirichlet;
};

// h2(s) and h3(s) are evaluated at time-to-go s; eta holds one value per node.
struct ParabolicProblem {
  GridField h1;
  std::function<double(double s, const Point& x)> h2;  // empty means 0
  std::function<double(double s, const Point& x)> h3;  // boundary data; empty means 0
  std::vector<double> eta;                             // empty means 0
};

// phi_t for d_s phi = Lap phi - eta phi - phi^2/2 + h2_{t-s}, phi_0 = h1, phi = h3_{t-s} on the boundary.
GridField solve_parabolic_loglaplace(const ParabolicProblem& prob, double t, const ParabolicConfig& cfg = {});

struct EllipticConfig {
  double tol = 1e-11;  // max-norm residual
  int max_newton = 100;
  std::size_t max_relax_steps = 50'000'000;
};

struct EllipticResult {
  GridField phi;
  double residual = 0.0;
  int newton_iterations = 0;
  bool used_relaxation = false;
};

// Lap phi = phi^2/2 + eta phi - h1 inside, phi = h2 on the boundary (boundary nodes of h2).
EllipticResult solve_elliptic_loglaplace(const GridField& h1, const GridField& h2, const std::vector<double>& eta,
                                         const EllipticConfig& cfg = {});
EllipticResult solve_elliptic_newton(const GridField& h1, const GridField& h2, const std::vector<double>& eta,
                                     const EllipticConfig& cfg = {});
EllipticResult solve_elliptic_relaxation(const GridField& h1, const GridField& h2, const std::vector<double>& eta,
                                         const EllipticConfig& cfg = {});
double elliptic_residual(const GridField& phi, const GridField& h1, const std::vector<double>& eta);

double riccati_lambda(double gamma, double t);
// RK4 integration of u' = gamma u + 1/2, u(0) = 0, with lambda = 1/u.
double riccati_lambda_numeric(double gamma, double t, int steps = 2000);

struct WitnessReport {
  double worst_margin = 0.0;
  Point worst_node{0, 0, 0};
  std::size_t nodes_checked = 0;
  std::size_t nodes_failed = 0;
  std::size_t nodes_skipped = 0;
  bool holds = true;
};

// Checks coeff * Lap w <= w^2/2 - eta w at interior nodes.
WitnessReport death_witness_check(const GridField& w, const std::vector<double>& eta, double diffusion_coeff);

// 12 sum_i (x_i+3)^{-2} + (3-x_i)^{-2} on (-3,3)^d with its analytic Laplacian.
GridField death_test_function(int d, double pitch);

struct SingularSolution {
  std::vector<double> r, psi;
  double c0 = 0.0;
  double eps = 0.0;
  int refinements = 0;
};

struct SingularConfig {
  double r_max = 30.0;
  double eps0 = 0.05;
  int nodes = 4000;
  double tol = 1e-3;  // relative change of c0 between refinements
  int max_refinements = 8;
};

// Radial maximal solution of Lap psi = psi^2/2 + psi in R^3 minus the origin.
SingularSolution maximal_singular_solution(const SingularConfig& cfg = {});

// Maximal solution of phi'' = phi^2/2 + eta phi on (-a, a) (infinite at both ends), from its first
// integral; 1 - exp(-m phi(x)) is the probability that mass m at x has a nonzero exit measure.
double maximal_solution_1d(double eta, double half_width, double x);
SingularSolution singular_solution_at(double eps, const SingularConfig& cfg);

}  // namespace rdphase::loglaplace
