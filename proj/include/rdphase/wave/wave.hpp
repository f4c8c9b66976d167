#pragma once
#include <complex>
#include <string>
#include <vector>

namespace rdphase::wave {

struct WaveState {
  double U = 0.0, V = 0.0, W = 0.0;
};

// U' = W, V' = UV / c, W' = gamma U - c W - UV.
WaveState rhs(const WaveState& s, double c, double gamma);

enum class Equilibrium { origin, nutrient_one };

struct EigenPair {
  std::complex<double> first, second;
  double discriminant = 0.0;
  bool complex = false;
  std::string classification;  // "real-split", "real-double" or "complex"
};

// Roots of lambda^2 + c lambda + q with q = -gamma at the origin and 1 - gamma at (0, 1, 0).
EigenPair eigenvalues(Equilibrium at, double c, double gamma);

struct Admissibility {
  bool admissible = false;
  bool gamma_above_one = false;
};
// c^2 >= 4 (1 - gamma); gamma > 1 is allowed and flagged.
Admissibility wave_admissible(double c, double gamma);

// Nutrient level a in (0, gamma) left behind the front: 1 - a = gamma log(1 / a).
double residual_nutrient(double gamma);

struct ShootConfig {
  double delta = 1e-6;
  double s_max = 400.0;
  double rtol = 1e-10;
  double atol = 1e-13;
  double blowup = 1e6;
  std::size_t max_steps = 2'000'000;
  std::size_t record_every = 10;
  double positivity_tol = 1e-10;  // U or V below -tol counts as a sign change
  double distance_floor = 1e-9;   // integration stops once this close to (0, 1, 0)
};

struct ShootResult {
  double c = 0.0, gamma = 0.0;
  WaveState start;
  double rest_nutrient = 0.0;  // V at the launch equilibrium
  std::vector<double> s;
  std::vector<WaveState> trajectory;
  bool stays_positive = true;
  bool diverged = false;
  double min_U = 0.0;
  double terminal_distance = 0.0;  // closest approach to (0, 1, 0), clamped below at the floor
  bool converged = false;           // reached the distance floor
  bool v_monotone = true;          // V non-decreasing while U > 0
};

// Dormand-Prince integration from (0, a, 0), a = residual_nutrient(gamma), offset delta along the unstable
// eigenvector with U > 0.
ShootResult shoot(double c, double gamma, const ShootConfig& cfg = {});

}  // namespace rdphase::wave
