#pragma once
#include <random>

#include "rdphase/trigger/trigger.hpp"

// Random instances with dyadic entries k/64 so that every sum is exact in double precision.
inline rdphase::trigger::TriggerInstance random_instance(std::mt19937_64& gen, std::size_t max_n) {
  using rdphase::trigger::TriggerInstance;
  std::uniform_int_distribution<std::size_t> size(0, max_n);
  std::uniform_int_distribution<int> k(0, 127);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TriggerInstance t;
  t.n = size(gen);
  const double f_density = u(gen), m_density = u(gen) * 0.6;
  for (std::size_t a = 0; a < t.n; ++a) {
    t.e.push_back(k(gen) / 64.0);
    t.f.push_back(u(gen) < f_density ? k(gen) / 64.0 : 0.0);
  }
  for (std::size_t i = 0; i < t.n * t.n; ++i) t.M.push_back(u(gen) < m_density ? k(gen) / 64.0 : 0.0);
  return t;
}

inline rdphase::trigger::TwoStageSplit random_split(std::mt19937_64& gen, const rdphase::trigger::TriggerInstance& t) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  rdphase::trigger::TwoStageSplit sp;
  auto cut = [&](double x, double& lo, double& hi) {
    // Split on the 1/64 lattice so both halves stay dyadic.
    const int whole = static_cast<int>(x * 64.0);
    const int part = static_cast<int>(u(gen) * (whole + 1));
    lo = std::min(part, whole) / 64.0;
    hi = x - lo;
  };
  sp.f_minus.resize(t.n);
  sp.f_plus.resize(t.n);
  for (std::size_t a = 0; a < t.n; ++a) cut(t.f[a], sp.f_minus[a], sp.f_plus[a]);
  sp.M_minus.resize(t.M.size());
  sp.M_plus.resize(t.M.size());
  for (std::size_t i = 0; i < t.M.size(); ++i) cut(t.M[i], sp.M_minus[i], sp.M_plus[i]);
  return sp;
}
