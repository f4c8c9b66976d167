#pragma once
#include <optional>

#include "rdphase/core/box_domain.hpp"

namespace rdphase {

struct Params {
  double beta = 0.0;
  double gamma = 0.0;
  int d = 1;

  void validate() const;
};

// du = D lap u + rho u v - delta u + sqrt(sigma u) dW,  dv = -kappa u v.
struct Coefficients {
  double diffusion = 1.0;
  double reaction = 0.0;
  double death = 0.0;
  double noise = 1.0;
  double depletion = 1.0;

  static Coefficients from_params(const Params& p);
  void validate() const;
};

struct ScalingMap {
  double a = 1.0, b = 1.0, c = 1.0, e = 1.0;

  void validate() const;
  ScalingMap inverse() const { return {1.0 / a, 1.0 / b, 1.0 / c, 1.0 / e}; }
};

struct TransformedCoefficients {
  Coefficients coeffs;
  std::optional<BoxDomain> domain;
  double exit_factor = 1.0;  // a / c^d
};

TransformedCoefficients scale_equation(const Params& p, const ScalingMap& m);
TransformedCoefficients scale_equation(const Coefficients& k, int d, const ScalingMap& m,
                                       const std::optional<BoxDomain>& domain = std::nullopt);

}  // namespace rdphase
