#include "rdphase/core/params.hpp"

#include <cmath>
#include <stdexcept>

namespace rdphase {

void Params::validate() const {
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("Params: beta must be >= 0");
  if (!(gamma >= 0) || !std::isfinite(gamma)) throw std::invalid_argument("Params: gamma must be >= 0");
  if (d < 1 || d > 3) throw std::invalid_argument("Params: d must be 1, 2 or 3");
}

Coefficients Coefficients::from_params(const Params& p) {
  p.validate();
  return {1.0, p.beta, p.gamma, 1.0, 1.0};
}

void Coefficients::validate() const {
  auto ok = [](double x) { return x >= 0 && std::isfinite(x); };
  if (!(diffusion > 0) || !std::isfinite(diffusion)) throw std::invalid_argument("Coefficients: diffusion must be > 0");
  if (!ok(reaction) || !ok(death) || !ok(depletion)) throw std::invalid_argument("Coefficients: rates must be >= 0");
  if (!(noise > 0) || !std::isfinite(noise)) throw std::invalid_argument("Coefficients: noise must be > 0");
}

void ScalingMap::validate() const {
  for (double x : {a, b, c, e})
    if (!(x > 0) || !std::isfinite(x)) throw std::invalid_argument("ScalingMap: entries must be > 0");
}

TransformedCoefficients scale_equation(const Coefficients& k, int d, const ScalingMap& m,
                                       const std::optional<BoxDomain>& domain) {
  m.validate();
  k.validate();
  if (d < 1 || d > 3) throw std::invalid_argument("scale_equation: d must be 1, 2 or 3");
  const double cd = std::pow(m.c, d);
  TransformedCoefficients t;
  t.coeffs.diffusion = k.diffusion * m.b / (m.c * m.c);
  t.coeffs.reaction = k.reaction * m.b / m.e;
  t.coeffs.death = k.death * m.b;
  t.coeffs.noise = k.noise * m.a * m.b / cd;
  t.coeffs.depletion = k.depletion * m.b / m.a;
  t.exit_factor = m.a / cd;
  if (domain) t.domain = domain->contracted(m.c);
  return t;
}

TransformedCoefficients scale_equation(const Params& p, const ScalingMap& m) {
  return scale_equation(Coefficients::from_params(p), p.d, m);
}

}  // namespace rdphase
