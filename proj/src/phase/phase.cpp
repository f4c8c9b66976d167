#include "rdphase/phase/phase.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/errors.hpp"
#include "rdphase/core/rng.hpp"
#include "rdphase/dw/simulate.hpp"

namespace rdphase::phase {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::death_consistent: return "death-consistent";
    case Verdict::life_consistent: return "life-consistent";
    default: return "undecided";
  }
}

Verdict classify(const Interval& ci, double threshold) {
  if (ci.low > threshold) return Verdict::life_consistent;
  if (ci.high < threshold) return Verdict::death_consistent;
  return Verdict::undecided;
}

namespace {

void check_inside(std::span<const Point> pts, const BoxDomain& box, const char* who) {
  for (const auto& x : pts)
    if (!box.contains(x)) throw std::invalid_argument(std::string(who) + ": initial particles must lie in the box");
}

}  // namespace

PhasePoint survival_probability(const Params& p, std::span<const Point> initial, const SurvivalSpec& spec,
                                const dw::EngineConfig& engine, std::uint64_t seed, std::uint64_t stream) {
  p.validate();
  if (!(spec.L_box > 0)) throw std::invalid_argument("survival_probability: L_box must be > 0");
  if (!(spec.horizon > 0)) throw std::invalid_argument("survival_probability: horizon must be > 0");
  const auto box = BoxDomain::centered(spec.L_box, p.d);
  check_inside(initial, box, "survival_probability");
  const auto k = Coefficients::from_params(p);
  const auto f = nutrient::NutrientField::constant(Grid(box, nutrient::side_pitch(box, engine.N)), 1.0);
  nutrient::ReactionOptions opt;
  opt.horizon = spec.horizon;
  enum : std::uint8_t { dead, alive, exceeded };
  const auto outcome = run_replicas<std::uint8_t>(spec.reps, spec.threads, [&](std::size_t r) -> std::uint8_t {
    const auto res = nutrient::simulate_direct(initial, f, k, engine, seed, hash_words({stream, r}), opt);
    if (res.budget_exceeded) return exceeded;
    return res.died() ? dead : alive;
  });
  PhasePoint pt;
  pt.beta = p.beta;
  pt.gamma = p.gamma;
  pt.censor_box = spec.L_box;
  pt.censor_horizon = spec.horizon;
  for (auto o : outcome) {
    if (o == exceeded) ++pt.budget_exceeded;
    else if (o == alive) ++pt.survived;
  }
  pt.replicas = spec.reps - pt.budget_exceeded;
  pt.survival_estimate = pt.replicas ? static_cast<double>(pt.survived) / pt.replicas : 0.0;
  const auto ci = wilson_interval(pt.survived, pt.replicas);
  pt.ci_low = std::min(ci.low, pt.survival_estimate);
  pt.ci_high = std::max(ci.high, pt.survival_estimate);
  pt.verdict = pt.replicas ? classify({pt.ci_low, pt.ci_high}, spec.threshold) : Verdict::undecided;
  if (pt.budget_exceeded && pt.verdict == Verdict::death_consistent) pt.verdict = Verdict::undecided;
  return pt;
}

PsiBracket estimate_psi(double beta, double tol, std::size_t budget, const GammaClassifier& classifier,
                        double gamma_max, std::size_t reps0) {
  if (!(beta > 0)) throw std::invalid_argument("estimate_psi: beta must be > 0");
  if (!(tol > 0)) throw std::invalid_argument("estimate_psi: tol must be > 0");
  if (!(gamma_max > 0) || reps0 == 0) throw std::invalid_argument("estimate_psi: need gamma_max > 0 and reps0 > 0");
  PsiBracket b;
  b.gamma_low = 0.0;
  b.gamma_high = gamma_max;
  auto evaluate = [&](double g) -> Verdict {
    for (std::size_t reps = reps0;; reps *= 2) {
      if (b.replicas_used + reps > budget) return Verdict::undecided;
      auto pt = classifier(g, reps);
      b.replicas_used += reps;
      const Verdict v = pt.verdict;
      if (v == Verdict::life_consistent) b.gamma_low = std::max(b.gamma_low, g);
      if (v == Verdict::death_consistent) b.gamma_high = std::min(b.gamma_high, g);
      b.trace.push_back({g, std::move(pt), b.gamma_low, b.gamma_high});
      if (v != Verdict::undecided) return v;
    }
  };
  const Verdict at_zero = evaluate(0.0);
  if (at_zero == Verdict::death_consistent) {
    b.gamma_high = 0.0;
    return b;
  }
  if (at_zero == Verdict::undecided || evaluate(gamma_max) != Verdict::death_consistent) {
    b.undecided = true;
    return b;
  }
  while (b.gamma_high - b.gamma_low > tol) {
    if (evaluate(0.5 * (b.gamma_low + b.gamma_high)) == Verdict::undecided) {
      b.undecided = true;
      break;
    }
  }
  return b;
}

double death_block_epsilon(int d) { return 1.0 / (4.0 * std::pow(3.0, d)); }

Coefficients death_block_coefficients(const Params& p, double L, double M) {
  if (!(L > 0) || !(M > 0)) throw std::invalid_argument("death_block: L and M must be > 0");
  const ScalingMap m{std::pow(L, p.d) / M, M, L, 1.0};
  return scale_equation(p, m).coeffs;
}

DeathBlockReport death_block_check(const Params& p, double L, double M, std::size_t reps,
                                   const dw::EngineConfig& engine, std::uint64_t seed, unsigned threads) {
  p.validate();
  if (reps == 0) throw std::invalid_argument("death_block: reps must be > 0");
  const auto k = death_block_coefficients(p, L, M);
  const auto box = BoxDomain::centered(3.0, p.d);
  const auto f = nutrient::NutrientField::constant(Grid(box, nutrient::side_pitch(box, engine.N)), 1.0);
  DeathBlockReport rep;
  rep.L = L;
  rep.M = M;
  rep.d = p.d;
  rep.epsilon0 = death_block_epsilon(p.d);
  const Point center{0.0, 0.0, 0.0};
  const Point corner{1.0, p.d > 1 ? 1.0 : 0.0, p.d > 2 ? 1.0 : 0.0};
  bool exceeded = false;
  for (int which = 0; which < 2; ++which) {
    const auto init = dw::point_mass_particles(which == 0 ? center : corner, 1.0, engine.N);
    struct Out {
      double exit = 0.0;
      bool exceeded = false;
    };
    const auto outs = run_replicas<Out>(reps, threads, [&](std::size_t r) {
      const auto res = nutrient::simulate_direct(init, f, k, engine, seed, hash_words({0x626C6F636BULL, static_cast<std::uint64_t>(which), r}));
      return Out{res.exit_mass(), res.budget_exceeded};
    });
    BlockEstimate e;
    e.placement = which == 0 ? "center" : "corner";
    e.replicas = reps;
    RunningStats s;
    for (const auto& o : outs) {
      if (o.exceeded) ++e.budget_exceeded;
      if (o.exceeded || o.exit > 0) ++e.nonzero;
      s.push(o.exit);
    }
    e.p_exit_nonzero = static_cast<double>(e.nonzero) / reps;
    e.p_ci = wilson_interval(e.nonzero, reps);
    e.mean_exit_over_M = s.mean();
    const double half = 1.959963984540054 * s.standard_error();
    e.mean_ci = {std::max(0.0, s.mean() - half), s.mean() + half};
    rep.p_upper = std::max(rep.p_upper, e.p_ci.high);
    rep.mean_upper = std::max(rep.mean_upper, e.mean_ci.high);
    exceeded = exceeded || e.budget_exceeded > 0;
    rep.placements.push_back(std::move(e));
  }
  rep.passes = !exceeded && rep.p_upper < rep.epsilon0 && rep.mean_upper < rep.epsilon0;
  return rep;
}

namespace {

struct DecompositionContext {
  BoxDomain box;
  Coefficients k;
  nutrient::NutrientPackages pkgs;
  dw::EngineConfig engine;
  std::vector<Point> mu;
};

DecompositionContext context(const DecompositionSetup& s) {
  s.p.validate();
  if (!(s.mu_minus_fraction >= 0 && s.mu_minus_fraction <= 1)) throw std::invalid_argument("decomposition: bad mu split");
  if (!(s.beta_minus >= 0 && s.beta_minus <= s.p.beta)) throw std::invalid_argument("decomposition: need 0 <= beta- <= beta");
  if (!(s.gamma_plus >= 0)) throw std::invalid_argument("decomposition: gamma+ must be >= 0");
  if (!(s.inner_half_width > 0 && s.inner_half_width <= s.half_width))
    throw std::invalid_argument("decomposition: inner box must lie in the outer box");
  if (!(s.g_level >= 0 && s.g_level <= 1)) throw std::invalid_argument("decomposition: g level must lie in [0, 1]");
  DecompositionContext c;
  c.box = BoxDomain::centered(s.half_width, s.p.d);
  c.k = Coefficients::from_params(s.p);
  c.pkgs = nutrient::build_packages(c.box, s.N, [](const Point&) { return 1.0; });
  c.engine.N = s.N;
  c.mu = dw::point_mass_particles({0.0, 0.0, 0.0}, s.mu_mass, s.N);
  return c;
}

MassPair masses(const nutrient::ReactionResult& r) {
  if (r.budget_exceeded) throw BudgetExceeded("decomposition: run exceeded the engine budget");
  return {r.exit_mass(), r.occupation_mass()};
}

MassPair second_stage(MassPair a, const nutrient::ReactionResult& r, std::size_t initial) {
  const MassPair b = masses(r);
  return {a.exit + b.exit, a.occupation + b.occupation, initial};
}

std::uint64_t stage_stream(std::uint64_t name, std::uint64_t replica, std::uint64_t stage) {
  return hash_words({0x74776F5354ULL, name, replica, stage});
}

// Particles of n packages' worth of mass, random-rounded per cell and uniform in the cell.
std::vector<Point> cell_mass_particles(const Grid& g, const std::vector<double>& particles_per_cell,
                                       std::uint64_t seed, std::uint64_t stream) {
  const KeyedRng key(hash_words({seed, stream, 0x63656C6CULL}));
  std::vector<Point> out;
  const int d = g.domain().dim();
  for (std::size_t c = 0; c < particles_per_cell.size(); ++c) {
    const double x = particles_per_cell[c];
    if (x <= 0) continue;
    auto n = static_cast<std::size_t>(std::floor(x));
    if (key.uniform(c, 0) < x - std::floor(x)) ++n;
    const Point lo = g.cell_lower(c);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = key.block(c, i + 1);
      Point p = lo;
      for (int a = 0; a < d; ++a) p[a] += g.pitch() * u32_to_unit(r[a]);
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

const std::array<const char*, 6>& decomposition_names() {
  static const std::array<const char*, 6> names{"0", "i", "ii", "iii", "iv", "v"};
  return names;
}

MassPair decomposition_one_shot(const DecompositionSetup& s, std::uint64_t seed, std::uint64_t replica) {
  const auto c = context(s);
  return masses(nutrient::simulate_nutrient_approx(c.mu, c.pkgs, c.k, c.engine, seed,
                                                   hash_words({0x6F6E6553ULL, replica})));
}

MassPair decomposition_two_stage(const DecompositionSetup& s, const std::string& name, std::uint64_t seed,
                                 std::uint64_t replica) {
  const auto c = context(s);
  const auto& names = decomposition_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("decomposition: unknown construction " + name);
  const auto id = static_cast<std::uint64_t>(it - names.begin());
  const auto s1 = stage_stream(id, replica, 1), s2 = stage_stream(id, replica, 2);
  const auto s3 = stage_stream(id, replica, 3);
  const Grid& g = c.pkgs.grid;
  using nutrient::simulate_nutrient_approx;

  if (name == "0") {
    // Part of the nutrient converted to mass at time zero: a uniformly chosen subset of each cell's packages.
    const auto m = static_cast<std::uint32_t>(std::floor(s.N * s.g_level + 1e-9));
    const KeyedRng key(hash_words({seed, s1, 0x7072650ULL}));
    nutrient::ReactionOptions opt;
    for (std::uint32_t cell = 0; cell < g.size(); ++cell) {
      if (!(std::abs(g.cell_center(cell)[0]) < s.g_half_width)) continue;
      const std::uint32_t n = c.pkgs.count[cell];
      std::vector<std::uint32_t> ranks(n);
      for (std::uint32_t i = 0; i < n; ++i) ranks[i] = i;
      for (std::uint32_t i = 0; i < std::min(m, n); ++i) {
        const auto j = i + static_cast<std::uint32_t>(key.uniform(cell, i) * (n - i));
        std::swap(ranks[i], ranks[std::min(j, n - 1)]);
        opt.pretriggered.push_back(c.pkgs.offset[cell] + ranks[i]);
      }
    }
    return masses(simulate_nutrient_approx(c.mu, c.pkgs, c.k, c.engine, seed, s1, opt));
  }
  if (name == "i") {
    const auto n1 = static_cast<std::size_t>(std::llround(s.mu_minus_fraction * c.mu.size()));
    const std::vector<Point> lo(c.mu.begin(), c.mu.begin() + n1), hi(c.mu.begin() + n1, c.mu.end());
    const auto r1 = simulate_nutrient_approx(lo, c.pkgs, c.k, c.engine, seed, s1);
    const auto a = masses(r1);
    return second_stage(a, simulate_nutrient_approx(hi, r1.remaining_packages(), c.k, c.engine, seed, s2), hi.size());
  }
  if (name == "ii") {
    std::vector<std::uint32_t> minus(g.size(), 0), plus(g.size(), 0);
    for (std::size_t cell = 0; cell < g.size(); ++cell)
      (g.cell_center(cell)[0] < s.f_split_at ? minus : plus)[cell] = c.pkgs.count[cell];
    const auto pm = nutrient::packages_from_counts(g, s.N, minus);
    const auto pp = nutrient::packages_from_counts(g, s.N, plus);
    const auto r1 = simulate_nutrient_approx(c.mu, pm, c.k, c.engine, seed, s1);
    const auto a = masses(r1);
    const double scale = c.k.depletion * r1.dt / (s.N * g.cell_volume());
    std::vector<Point> init;
    std::vector<std::uint32_t> left = r1.remaining;
    for (std::uint32_t cell = 0; cell < g.size(); ++cell) {
      if (!pp.count[cell]) continue;
      const double level = scale * static_cast<double>(r1.occupation[cell]);
      const auto th = nutrient::cell_thresholds(pp, cell, seed, s1);
      std::uint32_t t = 0;
      while (t < th.size() && level > th[t]) ++t;
      for (std::uint32_t i = 0; i < t; ++i) {
        const auto q = nutrient::package_particles(pp, pp.offset[cell] + i, c.k.reaction, seed, s3);
        init.insert(init.end(), q.begin(), q.end());
      }
      left[cell] += pp.count[cell] - t;
    }
    const auto p2 = nutrient::packages_from_counts(g, s.N, left);
    return second_stage(a, simulate_nutrient_approx(init, p2, c.k, c.engine, seed, s2), init.size());
  }
  if (name == "iii") {
    const auto inner = BoxDomain::centered(s.inner_half_width, s.p.d);
    const auto pin = nutrient::build_packages(nutrient::NutrientField::constant(Grid(inner, g.pitch()), 1.0), s.N);
    std::vector<Point> mu_in, init;
    for (const auto& x : c.mu) (inner.contains(x) ? mu_in : init).push_back(x);
    const auto r1 = simulate_nutrient_approx(mu_in, pin, c.k, c.engine, seed, s1);
    MassPair a = masses(r1);
    a.exit = 0.0;
    const double tol = 1e-12 * s.half_width;
    for (const auto& x : r1.exit_points) {
      bool outer = false;
      for (int i = 0; i < s.p.d; ++i) outer = outer || std::abs(x[i]) >= s.half_width - tol;
      if (outer) a.exit += 1.0 / s.N;
      else init.push_back(x);
    }
    const auto p2 = nutrient::embed_packages(r1.remaining_packages(), c.box, 1.0);
    return second_stage(a, simulate_nutrient_approx(init, p2, c.k, c.engine, seed, s2), init.size());
  }
  if (name == "iv") {
    auto k1 = c.k;
    k1.reaction = s.p.beta > 0 ? c.k.reaction * s.beta_minus / s.p.beta : 0.0;
    const double extra = c.k.reaction - k1.reaction;
    const auto r1 = simulate_nutrient_approx(c.mu, c.pkgs, k1, c.engine, seed, s1);
    const auto a = masses(r1);
    std::vector<Point> init;
    for (const auto& ev : r1.triggers) {
      const auto q = nutrient::package_particles(c.pkgs, ev.package, extra, seed, s3);
      init.insert(init.end(), q.begin(), q.end());
    }
    return second_stage(a, simulate_nutrient_approx(init, r1.remaining_packages(), c.k, c.engine, seed, s2), init.size());
  }
  // "v": the extra death rate is returned as mass gamma+ times the occupation measure.
  auto k1 = c.k;
  k1.death = c.k.death + s.gamma_plus;
  const auto r1 = simulate_nutrient_approx(c.mu, c.pkgs, k1, c.engine, seed, s1);
  const auto a = masses(r1);
  std::vector<double> per_cell(g.size());
  for (std::size_t cell = 0; cell < g.size(); ++cell)
    per_cell[cell] = s.gamma_plus * r1.dt * static_cast<double>(r1.occupation[cell]);
  const auto init = cell_mass_particles(g, per_cell, seed, s3);
  return second_stage(a, simulate_nutrient_approx(init, r1.remaining_packages(), c.k, c.engine, seed, s2), init.size());
}

DecompositionReport decomposition_suite(const DecompositionSetup& s, std::size_t reps, std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("decomposition_suite: need at least 2 replicas");
  const auto& names = decomposition_names();
  DecompositionReport rep;
  rep.reps = reps;
  rep.alpha = s.alpha;
  rep.alpha_per_test = s.alpha / (2.0 * names.size());
  const auto one = run_replicas<MassPair>(reps, s.threads, [&](std::size_t r) { return decomposition_one_shot(s, seed, r); });
  std::vector<double> one_exit, one_occ;
  for (const auto& m : one) one_exit.push_back(m.exit), one_occ.push_back(m.occupation);
  for (const char* name : names) {
    const auto two = run_replicas<MassPair>(
        reps, s.threads, [&](std::size_t r) { return decomposition_two_stage(s, name, seed, r); });
    std::vector<double> two_exit, two_occ;
    for (const auto& m : two) two_exit.push_back(m.exit), two_occ.push_back(m.occupation);
    const bool one_sided = std::string(name) == "0";
    for (int stat = 0; stat < 2; ++stat) {
      DecompositionTest t;
      t.name = name;
      t.statistic = stat == 0 ? "exit" : "occupation";
      t.one_sided = one_sided;
      const auto& a = stat == 0 ? one_exit : one_occ;
      const auto& b = stat == 0 ? two_exit : two_occ;
      t.ks = one_sided ? ks_one_sided_greater(a, b) : ks_two_sample(a, b);
      t.pass = t.ks.p_value >= rep.alpha_per_test;
      rep.all_pass = rep.all_pass && t.pass;
      rep.tests.push_back(std::move(t));
    }
  }
  return rep;
}

CrnReport crn_monotonicity(const std::vector<double>& betas, const std::vector<double>& gammas, int d,
                           double half_width, std::span<const Point> initial, std::size_t reps,
                           const dw::EngineConfig& engine, std::uint64_t seed) {
  if (betas.empty() || gammas.empty()) throw std::invalid_argument("crn_monotonicity: grids must be non-empty");
  if (!std::is_sorted(betas.begin(), betas.end()) || !std::is_sorted(gammas.begin(), gammas.end()))
    throw std::invalid_argument("crn_monotonicity: grids must be increasing");
  const auto box = BoxDomain::centered(half_width, d);
  check_inside(initial, box, "crn_monotonicity");
  const auto pkgs = nutrient::build_packages(box, engine.N, [](const Point&) { return 1.0; });
  auto cfg = engine;
  double cap = std::numeric_limits<double>::infinity();
  for (double b : betas)
    for (double g : gammas) {
      const auto k = Coefficients::from_params({b, g, d});
      cap = std::min(cap, dw::stability_cap(nutrient::engine_for(k, engine), k.death));
    }
  if (!(cfg.dt > 0) || cfg.dt > cap) cfg.dt = cap;

  CrnReport rep;
  rep.betas = betas;
  rep.gammas = gammas;
  rep.reps = reps;
  const std::size_t nb = betas.size(), ng = gammas.size();
  rep.deaths.assign(nb, std::vector<std::size_t>(ng, 0));
  struct Cell {
    bool died = false, exceeded = false;
    std::vector<std::uint64_t> set;
  };
  auto subset = [](const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<Cell> cells(nb * ng);
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < ng; ++j) {
        const auto k = Coefficients::from_params({betas[i], gammas[j], d});
        const auto res = nutrient::simulate_nutrient_approx(initial, pkgs, k, cfg, seed, r);
        auto& c = cells[i * ng + j];
        c.exceeded = res.budget_exceeded;
        c.died = res.died();
        for (const auto& ev : res.triggers) c.set.push_back(ev.package);
        std::sort(c.set.begin(), c.set.end());
        if (c.exceeded) ++rep.budget_exceeded;
        else if (c.died) ++rep.deaths[i][j];
      }
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < ng; ++j) {
        const auto& c = cells[i * ng + j];
        if (c.exceeded) continue;
        if (j + 1 < ng && !cells[i * ng + j + 1].exceeded) {
          const auto& up = cells[i * ng + j + 1];
          ++rep.comparisons;
          if (c.died && !up.died) ++rep.gamma_flips;
          if (!subset(up.set, c.set)) ++rep.set_violations;
        }
        if (i + 1 < nb && !cells[(i + 1) * ng + j].exceeded) {
          const auto& up = cells[(i + 1) * ng + j];
          ++rep.comparisons;
          if (!c.died && up.died) ++rep.beta_flips;
          if (!subset(c.set, up.set)) ++rep.set_violations;
        }
      }
  }
  return rep;
}

}  // namespace rdphase::phase
