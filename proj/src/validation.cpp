#include "rdphase/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rdphase/core/errors.hpp"
#include "rdphase/core/rng.hpp"
#include "rdphase/dw/simulate.hpp"
#include "rdphase/loglaplace/solvers.hpp"
#include "rdphase/nutrient/nutrient.hpp"
#include "rdphase/phase/phase.hpp"

namespace rdphase::validation {

namespace {

void check_level(const McLevel& mc) {
  if (!(mc.N > 0)) throw std::invalid_argument("validation: N must be > 0");
  if (mc.reps < 2) throw std::invalid_argument("validation: need at least 2 replicas");
}

OracleCheck finish(std::string name, const RunningStats& s, double oracle, double z_limit) {
  OracleCheck c;
  c.check = std::move(name);
  c.estimate = s.mean();
  c.se = s.standard_error();
  c.oracle = oracle;
  c.replicas = s.count();
  c.z_limit = z_limit;
  const double diff = c.estimate - oracle;
  c.z = c.se > 0 ? diff / c.se : (diff == 0 ? 0.0 : std::copysign(INFINITY, diff));
  c.pass = std::abs(c.z) < z_limit;
  return c;
}

dw::EngineConfig engine_at(const McLevel& mc) {
  dw::EngineConfig cfg;
  cfg.N = mc.N;
  cfg.dt = mc.dt;
  return cfg;
}

template <class Fn>
RunningStats collect(const McLevel& mc, Fn&& fn) {
  auto xs = phase::run_replicas<double>(mc.reps, mc.threads, fn);
  RunningStats s;
  for (double x : xs) s.push(x);
  return s;
}

std::string fmt_label(const char* what, std::initializer_list<std::pair<const char*, double>> kv) {
  std::string s = what;
  for (const auto& [k, v] : kv) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s=%g", k, v);
    s += buf;
  }
  return s;
}

}  // namespace

OracleCheck extinction_check(double gamma, double t, double mass, const McLevel& mc) {
  check_level(mc);
  const auto init = dw::point_mass_particles({0, 0, 0}, mass, mc.N);
  const auto cfg = engine_at(mc);
  auto s = collect(mc, [&](std::size_t r) {
    auto run = dw::simulate_dw(init, dw::RateField::constant(gamma), BoxDomain::unbounded(1), t, cfg, mc.seed,
                               hash_words({mc.stream, r}));
    return run.alive_counts.back() == 0 ? 1.0 : 0.0;
  });
  const double oracle = std::exp(-loglaplace::riccati_lambda(gamma, t) * mass);
  return finish(fmt_label("extinction", {{"gamma", gamma}, {"t", t}, {"mass", mass}}), s, oracle, 3.0);
}

OracleCheck first_moment_check(double gamma, double t, double mass, const McLevel& mc) {
  check_level(mc);
  const auto init = dw::point_mass_particles({0, 0, 0}, mass, mc.N);
  const auto cfg = engine_at(mc);
  auto s = collect(mc, [&](std::size_t r) {
    return dw::simulate_dw(init, dw::RateField::constant(gamma), BoxDomain::unbounded(1), t, cfg, mc.seed,
                           hash_words({mc.stream, r}))
        .final_mass();
  });
  return finish(fmt_label("first-moment", {{"gamma", gamma}, {"t", t}, {"mass", mass}}), s,
                std::exp(-gamma * t) * mass, 4.0);
}

OracleCheck second_moment_check(double t, double mass, const McLevel& mc) {
  check_level(mc);
  const auto init = dw::point_mass_particles({0, 0, 0}, mass, mc.N);
  const auto cfg = engine_at(mc);
  auto s = collect(mc, [&](std::size_t r) {
    const double m = dw::simulate_dw(init, dw::RateField::constant(0.0), BoxDomain::unbounded(1), t, cfg, mc.seed,
                                     hash_words({mc.stream, r}))
                         .final_mass();
    return m * m;
  });
  return finish(fmt_label("second-moment", {{"gamma", 0.0}, {"t", t}, {"mass", mass}}), s, mass * mass + mass * t,
                4.0);
}

OracleCheck laplace_exit_check(double half_width, double pitch, const McLevel& mc) {
  check_level(mc);
  const auto dom = BoxDomain::centered(half_width, 1);
  loglaplace::NodeGrid g(dom, pitch);
  loglaplace::GridField h2(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.is_boundary(k)) h2.values[k] = 1.0;
  const auto sol = loglaplace::solve_elliptic_loglaplace(loglaplace::GridField(g), h2, {});
  const double oracle = std::exp(-sol.phi.at({0, 0, 0}));
  const auto init = dw::point_mass_particles({0, 0, 0}, 1.0, mc.N);
  const auto cfg = engine_at(mc);
  auto s = collect(mc, [&](std::size_t r) {
    auto run = dw::simulate_dw(init, dw::RateField::constant(0.0), dom, INFINITY, cfg, mc.seed,
                               hash_words({mc.stream, r}));
    if (run.budget_exceeded) throw BudgetExceeded("laplace_exit_check: run did not finish");
    return std::exp(-run.exit_mass());
  });
  return finish(fmt_label("laplace-exit", {{"half_width", half_width}, {"pitch", pitch}}), s, oracle, 3.0);
}

OracleCheck riccati_check(double gamma, double t) {
  OracleCheck c;
  c.check = fmt_label("riccati", {{"gamma", gamma}, {"t", t}});
  c.oracle = loglaplace::riccati_lambda(gamma, t);
  c.estimate = loglaplace::riccati_lambda_numeric(gamma, t);
  c.se = 1e-8 * std::max(1.0, std::abs(c.oracle));
  c.z = (c.estimate - c.oracle) / c.se;
  c.z_limit = 1.0;
  c.pass = std::abs(c.z) < 1.0;
  return c;
}

NutrientComparison nutrient_compare(const Params& p, double half_width, double mass, const McLevel& mc,
                                    std::size_t static_reps) {
  check_level(mc);
  p.validate();
  const auto dom = BoxDomain::centered(half_width, p.d);
  const auto pkgs = nutrient::build_packages(dom, mc.N, [](const Point&) { return 1.0; });
  const auto field = nutrient::NutrientField::constant(pkgs.grid, 1.0);
  const auto k = Coefficients::from_params(p);
  const auto cfg = engine_at(mc);
  const auto init = dw::point_mass_particles({0, 0, 0}, mass, mc.N);

  struct Row {
    double ae = 0, ao = 0, de = 0, dor = 0;
    bool exceeded = false;
    int st = -1;  // -1 unchecked, 0 disagree, 1 agree
  };
  auto rows = phase::run_replicas<Row>(mc.reps, mc.threads, [&](std::size_t r) {
    Row row;
    const auto sa = hash_words({mc.stream, r, 1});
    const auto sd = hash_words({mc.stream, r, 2});
    auto a = nutrient::simulate_nutrient_approx(init, pkgs, k, cfg, mc.seed, sa);
    auto d = nutrient::simulate_direct(init, field, k, cfg, mc.seed, sd);
    row.exceeded = a.budget_exceeded || d.budget_exceeded;
    row.ae = a.exit_mass();
    row.ao = a.occupation_mass();
    row.de = d.exit_mass();
    row.dor = d.occupation_mass();
    if (r < static_reps && !a.budget_exceeded) {
      auto sc = nutrient::build_static(init, pkgs, k, cfg, mc.seed, sa);
      auto st = nutrient::solve_static(sc, pkgs);
      std::vector<std::uint64_t> dyn;
      for (const auto& t : a.triggers) dyn.push_back(t.package);
      std::sort(dyn.begin(), dyn.end());
      row.st = std::equal(dyn.begin(), dyn.end(), st.set.begin(), st.set.end()) && a.occupation == st.occupation;
    }
    return row;
  });

  NutrientComparison out;
  std::vector<double> ae, de, ao, dor;
  for (const auto& row : rows) {
    if (row.st >= 0) {
      ++out.static_checked;
      out.static_agree += static_cast<std::size_t>(row.st);
    }
    if (row.exceeded) {
      ++out.budget_exceeded;
      continue;
    }
    ++out.replicas;
    out.approx_exit.push(row.ae);
    out.direct_exit.push(row.de);
    out.approx_occupation.push(row.ao);
    out.direct_occupation.push(row.dor);
    ae.push_back(row.ae);
    de.push_back(row.de);
    ao.push_back(row.ao);
    dor.push_back(row.dor);
  }
  if (out.replicas >= 2) {
    out.exit_ks = ks_two_sample(ae, de);
    out.occupation_ks = ks_two_sample(ao, dor);
  }
  return out;
}

}  // namespace rdphase::validation
