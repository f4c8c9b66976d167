#pragma once
#include <vector>

#include "rdphase/core/finite_measure.hpp"

namespace rdphase::dw {

// Dirichlet: killed on the boundary. Free: zero-flux walls, used as the full-space analogue.
enum class BoundaryMode { dirichlet, free };

struct SemigroupConfig {
  double diffusion = 1.0;
  double dt = 0.0;  // 0 selects 0.9 of the explicit stability bound
  BoundaryMode mode = BoundaryMode::dirichlet;
};

// Explicit cell-centred heat semigroup on a measure's grid, with killing exp(-gamma t).
class HeatSemigroup {
 public:
  HeatSemigroup(const Grid& grid, double gamma, const SemigroupConfig& cfg);

  double dt() const { return dt_; }
  // One step of G_dt applied in place. The operator is symmetric, so it also
  // propagates measures (cell masses).
  void step(std::vector<double>& w) const;
  std::vector<double> apply(std::vector<double> w, double t) const;
  std::size_t steps_for(double t) const;

 private:
  Grid grid_;
  double gamma_;
  SemigroupConfig cfg_;
  double dt_;
  mutable std::vector<double> scratch_;
};

double moment_oracle_first(const FiniteMeasure& mu, const std::vector<double>& g, double t, double gamma,
                           const SemigroupConfig& cfg = {});
// E[U_t(g) U_s(h)] = mu(G_t g) mu(G_s h) + int_0^{s^t} mu(G_r(G_{t-r} g * G_{s-r} h)) dr.
double moment_oracle_second(const FiniteMeasure& mu, const std::vector<double>& g, const std::vector<double>& h,
                            double s, double t, double gamma, const SemigroupConfig& cfg = {});

}  // namespace rdphase::dw
