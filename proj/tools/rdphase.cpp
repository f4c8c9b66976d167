#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_io.hpp"
#include "rdphase/blocks/blocks.hpp"
#include "rdphase/core/errors.hpp"
#include "rdphase/core/rng.hpp"
#include "rdphase/dw/simulate.hpp"
#include "rdphase/loglaplace/solvers.hpp"
#include "rdphase/phase/phase.hpp"
#include "rdphase/trigger/trigger.hpp"
#include "rdphase/validation.hpp"
#include "rdphase/wave/wave.hpp"

#ifndef RDPHASE_BUILD_ID
#define RDPHASE_BUILD_ID "unknown"
#endif

namespace rdphase::cli {
namespace {

constexpr int kSchemaVersion = 1;

enum Exit { ok = 0, check_failed = 1, usage = 2, budget = 3 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------------------------
// Configuration

Json base_config(const std::string& sub) {
  Json j = {{"schema_version", kSchemaVersion}, {"subcommand", sub}, {"seed", 42}};
  return j;
}

Json engine_block(double N, bool with_budget) {
  Json e = {{"N", N}, {"dt", 0.0}};
  if (with_budget) {
    e["max_particles"] = 2'000'000;
    e["max_steps"] = 1'000'000;
  }
  return e;
}

// The default config of a subcommand also defines the keys it accepts.
Json defaults_for(const std::string& sub) {
  Json j = base_config(sub);
  j["output_dir"] = "rdphase-out/" + sub;
  j["format"] = "csv";
  if (sub == "validate-engine") {
    j["replicas"] = 10'000;
    j["threads"] = 1;
    j["engine"] = engine_block(200, false);
    j["options"] = {{"killed_N", 400.0},  {"moments_N", 100.0},        {"laplace_N", 50.0},
                    {"laplace_half_width", 4.0}, {"laplace_pitch", 0.01}};
  } else if (sub == "nutrient-compare") {
    j["replicas"] = 400;
    j["threads"] = 1;
    j["params"] = {{"beta", 2.0}, {"gamma", 0.5}, {"d", 1}};
    j["domain"] = {{"half_width", 2.0}};
    j["engine"] = engine_block(25, false);
    j["options"] = {{"mass", 1.0}, {"static_replicas", 20}};
  } else if (sub == "decomposition-suite") {
    j["replicas"] = 4000;
    j["threads"] = 1;
    j["params"] = {{"beta", 2.0}, {"gamma", 0.5}, {"d", 1}};
    j["domain"] = {{"half_width", 4.0}};
    j["engine"] = {{"N", 25.0}};
    j["options"] = {{"mu_mass", 1.0},        {"mu_minus_fraction", 0.5}, {"f_split_at", 0.0},
                    {"inner_half_width", 2.0}, {"beta_minus", 1.0},       {"gamma_plus", 0.5},
                    {"g_level", 0.5},          {"g_half_width", 1.0},     {"alpha", 0.01}};
  } else if (sub == "phase-scan") {
    j["replicas"] = 300;
    j["threads"] = 1;
    j["params"] = {{"d", 1}};
    j["engine"] = engine_block(10, true);
    j["horizon"] = nullptr;
    j["options"] = {{"betas", {0.0}}, {"gammas", {1.0}}, {"horizons", Json::array()},
                    {"box", 8.0},     {"threshold", 0.05}, {"mass", 1.0}};
  } else if (sub == "psi-bisect") {
    j["replicas"] = 100;
    j["threads"] = 1;
    j["params"] = {{"beta", 1.0}, {"d", 1}};
    j["engine"] = engine_block(10, true);
    j["horizon"] = 10.0;
    j["options"] = {{"tol", 0.1}, {"budget", 4000}, {"gamma_max", 4.0},
                    {"box", 8.0}, {"threshold", 0.05}, {"mass", 1.0}};
  } else if (sub == "death-block") {
    j["replicas"] = 1000;
    j["threads"] = 1;
    j["params"] = {{"beta", 1.0}, {"gamma", 1.0}, {"d", 3}};
    j["engine"] = engine_block(10, true);
    j["options"] = {{"b", {8.0, 27.0, 64.0, 125.0}}, {"stop_at_pass", true}};
  } else if (sub == "life-block") {
    j["replicas"] = 200;
    j["params"] = {{"beta", 4.0}, {"gamma", 0.5}, {"d", 2}};
    j["engine"] = engine_block(10, true);
    j["options"] = {{"L", 1.0}, {"M", 0.5}, {"mass", 1.0}};
  } else if (sub == "op-sim") {
    j["replicas"] = 1000;
    Json dens = Json::array();
    for (int i = 65; i <= 76; ++i) dens.push_back(i / 100.0);
    j["options"] = {{"densities", dens},     {"k_dependence", 1},       {"generations", 500},
                    {"low_threshold", 0.05}, {"high_threshold", 0.5}};
  } else if (sub == "wave") {
    j.erase("seed");
    j["params"] = {{"gamma", 0.5}};
    j["options"] = {{"speeds", {0.5, 1.0, 1.5, 2.0, 2.5}}, {"delta", 1e-6}, {"s_max", 400.0},
                    {"trajectories", false}};
  } else if (sub == "fixed-point") {
    j.erase("seed");
    j["options"] = {{"brute_force", false}};
  } else if (sub == "loglaplace-solve") {
    j.erase("seed");
    j["params"] = {{"gamma", 0.0}, {"d", 1}};
    j["domain"] = {{"half_width", 4.0}};
    j["engine"] = {{"pitch", 0.05}};
    j["options"] = {{"kind", "elliptic"}, {"source", 0.0}, {"boundary", 1.0},
                    {"initial", 0.0},     {"t", 1.0},      {"diffusion_coeff", 1.0}};
  } else {
    throw ConfigError("unknown subcommand " + sub);
  }
  return j;
}

bool same_kind(const Json& base, const Json& v) {
  if (base.is_null()) return v.is_null() || v.is_number();
  if (base.is_number_unsigned() || base.is_number_integer()) return v.is_number_integer();
  if (base.is_number()) return v.is_number() || v.is_null();
  if (base.is_array()) return v.is_array();
  return base.type() == v.type();
}

void merge_strict(Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key " + key);
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value())) throw ConfigError("config key " + key + " has the wrong type");
      slot = it.value();
    }
  }
}

Json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct Flags {
  std::string config;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  unsigned threads = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* rep_opt = nullptr;
  CLI::Option* thr_opt = nullptr;
  CLI::Option* fmt_opt = nullptr;
  // fixed-point
  std::string instance;
  bool brute_force = false;
};

void set_flag(Json& cfg, const char* key, const Json& v, const char* flag) {
  if (!cfg.contains(key)) throw ConfigError(std::string(flag) + " is not used by " + cfg["subcommand"].get<std::string>());
  cfg[key] = v;
}

Json effective_config(const std::string& sub, const Flags& fl) {
  Json cfg = defaults_for(sub);
  if (!fl.config.empty()) {
    Json file = load_json(fl.config);
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    if (!file.contains("schema_version")) throw ConfigError("config lacks schema_version");
    if (!file["schema_version"].is_number_integer() || file["schema_version"].get<int>() != kSchemaVersion)
      throw ConfigError("unsupported schema_version; expected " + std::to_string(kSchemaVersion));
    if (file.contains("subcommand") && file["subcommand"] != sub)
      throw ConfigError("config is for subcommand " + file["subcommand"].dump());
    merge_strict(cfg, file, "");
  }
  if (fl.seed_opt->count()) set_flag(cfg, "seed", fl.seed, "--seed");
  if (fl.out_opt->count()) set_flag(cfg, "output_dir", fl.out, "--out");
  if (fl.rep_opt->count()) set_flag(cfg, "replicas", fl.replicas, "--replicas");
  if (fl.thr_opt->count()) set_flag(cfg, "threads", fl.threads, "--threads");
  if (fl.fmt_opt->count()) set_flag(cfg, "format", fl.format, "--format");
  if (fl.brute_force) cfg["options"]["brute_force"] = true;
  return cfg;
}

// Typed reads with range checks.
double num(const Json& j, const char* key) { return j.at(key).get<double>(); }
double positive(const Json& j, const char* key) {
  const double v = num(j, key);
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive and finite");
  return v;
}
double nonneg(const Json& j, const char* key) {
  const double v = num(j, key);
  if (!(v >= 0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be >= 0 and finite");
  return v;
}
std::size_t int_at(const Json& j, const char* key, std::size_t min = 1) {
  if (!j.at(key).is_number_integer() || j.at(key).get<std::int64_t>() < static_cast<std::int64_t>(min))
    throw ConfigError(std::string(key) + " must be an integer >= " + std::to_string(min));
  return j.at(key).get<std::size_t>();
}
double horizon_of(const Json& v) {
  if (v.is_null()) return INFINITY;
  const double h = v.get<double>();
  if (!(h > 0)) throw ConfigError("horizon must be > 0 or null");
  return h;
}
std::vector<double> num_list(const Json& j, const char* key, bool allow_empty = false) {
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(std::string(key) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  if (out.empty() && !allow_empty) throw ConfigError(std::string(key) + " must be non-empty");
  return out;
}

struct Ctx {
  std::string sub;
  Json cfg;
  std::optional<RunDir> dir;
  Json budgets = Json::object();
  Json warnings = Json::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  std::uint64_t seed() const { return cfg.at("seed").get<std::uint64_t>(); }
  unsigned threads() const {
    const auto t = int_at(cfg, "threads");
    return static_cast<unsigned>(t);
  }
  std::string format() const {
    const auto f = cfg.at("format").get<std::string>();
    if (f != "csv" && f != "json") throw ConfigError("format must be csv or json");
    return f;
  }
  // Stream id of grid point i; replica r inside it uses hash_words({stream, r}).
  std::uint64_t stream(std::uint64_t point) const { return hash_words({hash_string(sub), point}); }
  RunDir& out() {
    if (!dir) dir.emplace(cfg.at("output_dir").get<std::string>());
    return *dir;
  }
  void table(const std::string& stem, const Table& t) { out().write_table(stem, t, format()); }
  void warn(const std::string& w) {
    std::cerr << "warning: " << w << "\n";
    warnings.push_back(w);
  }
  void budget(const std::string& stage, std::size_t requested, std::size_t completed, std::size_t exceeded) {
    budgets[stage] = {{"replicas_requested", requested}, {"replicas_completed", completed}, {"budget_exceeded", exceeded}};
  }
};

dw::EngineConfig engine_from(const Json& e) {
  dw::EngineConfig c;
  c.N = positive(e, "N");
  if (e.contains("dt")) c.dt = nonneg(e, "dt");
  if (e.contains("max_particles")) c.max_particles = int_at(e, "max_particles");
  if (e.contains("max_steps")) c.max_steps = int_at(e, "max_steps");
  c.validate();
  return c;
}

// Rejects a configured dt above the explicit stability cap before any simulation starts.
void check_dt(const dw::EngineConfig& c, double eta_bound, const std::string& what) {
  if (c.dt <= 0) return;
  const double cap = dw::stability_cap(c, eta_bound);
  if (c.dt > cap)
    throw ConfigError("engine.dt = " + format_double(c.dt) + " exceeds the stability cap " + format_double(cap) +
                      " for " + what);
}

double direct_rate_bound(const Params& p) { return std::max(std::abs(p.gamma), std::abs(p.gamma - p.beta)); }

Params params_from(const Json& j, double beta, double gamma) {
  Params p;
  p.beta = beta;
  p.gamma = gamma;
  p.d = j.at("d").get<int>();
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------------------------
// Subcommands

int cmd_validate_engine(Ctx& c) {
  const auto& o = c.cfg["options"];
  validation::McLevel base;
  base.reps = int_at(c.cfg, "replicas", 2);
  base.seed = c.seed();
  base.threads = c.threads();
  const auto eng = engine_from(c.cfg["engine"]);
  base.dt = eng.dt;
  auto level = [&](double N, std::uint64_t point, double eta) {
    validation::McLevel m = base;
    m.N = N;
    m.stream = c.stream(point);
    dw::EngineConfig e;
    e.N = N;
    e.dt = base.dt;
    check_dt(e, eta, "N = " + format_double(N));
    return m;
  };
  const double killed_N = positive(o, "killed_N"), mom_N = positive(o, "moments_N"), lap_N = positive(o, "laplace_N");
  const double lap_a = positive(o, "laplace_half_width"), lap_h = positive(o, "laplace_pitch");
  const auto m0 = level(eng.N, 0, 0.0), m1 = level(killed_N, 1, 1.0), m2 = level(mom_N, 2, 1.0),
             m3 = level(mom_N, 3, 0.0), m4 = level(lap_N, 4, 0.0);

  std::vector<validation::OracleCheck> checks;
  checks.push_back(validation::extinction_check(0.0, 2.0, 1.0, m0));
  checks.push_back(validation::extinction_check(1.0, 1.0, 1.0, m1));
  checks.push_back(validation::first_moment_check(1.0, 1.0, 1.0, m2));
  checks.push_back(validation::second_moment_check(1.0, 1.0, m3));
  checks.push_back(validation::laplace_exit_check(lap_a, lap_h, m4));
  checks.push_back(validation::riccati_check(0.0, 2.0));
  checks.push_back(validation::riccati_check(1.0, 1.0));

  Table t({"check", "estimate", "se", "oracle", "z", "z_limit", "replicas", "pass"});
  bool all = true;
  for (const auto& k : checks) {
    t.add({k.check, k.estimate, k.se, k.oracle, k.z, k.z_limit, static_cast<std::uint64_t>(k.replicas), k.pass});
    all = all && k.pass;
  }
  c.table("validate_engine", t);
  c.budget("oracle_checks", base.reps * 5, base.reps * 5, 0);
  return all ? ok : check_failed;
}

int cmd_nutrient_compare(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto& pj = c.cfg["params"];
  const auto p = params_from(pj, nonneg(pj, "beta"), nonneg(pj, "gamma"));
  const auto eng = engine_from(c.cfg["engine"]);
  check_dt(eng, direct_rate_bound(p), "the direct simulator");
  validation::McLevel m;
  m.N = eng.N;
  m.dt = eng.dt;
  m.reps = int_at(c.cfg, "replicas", 2);
  m.seed = c.seed();
  m.stream = c.stream(0);
  m.threads = c.threads();
  const double a = positive(c.cfg["domain"], "half_width");
  auto r = validation::nutrient_compare(p, a, positive(o, "mass"), m, int_at(o, "static_replicas", 0));
  Table t({"statistic", "approx_mean", "approx_se", "direct_mean", "direct_se", "ks_statistic", "ks_p"});
  t.add({std::string("exit_mass"), r.approx_exit.mean(), r.approx_exit.standard_error(), r.direct_exit.mean(),
         r.direct_exit.standard_error(), r.exit_ks.statistic, r.exit_ks.p_value});
  t.add({std::string("occupation_mass"), r.approx_occupation.mean(), r.approx_occupation.standard_error(),
         r.direct_occupation.mean(), r.direct_occupation.standard_error(), r.occupation_ks.statistic,
         r.occupation_ks.p_value});
  c.table("nutrient_compare", t);
  Table s({"static_checked", "static_agree", "budget_exceeded"});
  s.add({static_cast<std::uint64_t>(r.static_checked), static_cast<std::uint64_t>(r.static_agree),
         static_cast<std::uint64_t>(r.budget_exceeded)});
  c.table("static_check", s);
  c.budget("compare", m.reps, r.replicas, r.budget_exceeded);
  if (r.replicas == 0) return budget;
  return r.static_agree == r.static_checked ? ok : check_failed;
}

int cmd_decomposition_suite(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto& pj = c.cfg["params"];
  phase::DecompositionSetup s;
  s.p = params_from(pj, nonneg(pj, "beta"), nonneg(pj, "gamma"));
  s.half_width = positive(c.cfg["domain"], "half_width");
  s.N = positive(c.cfg["engine"], "N");
  s.mu_mass = positive(o, "mu_mass");
  s.mu_minus_fraction = num(o, "mu_minus_fraction");
  s.f_split_at = num(o, "f_split_at");
  s.inner_half_width = positive(o, "inner_half_width");
  s.beta_minus = nonneg(o, "beta_minus");
  s.gamma_plus = nonneg(o, "gamma_plus");
  s.g_level = nonneg(o, "g_level");
  s.g_half_width = positive(o, "g_half_width");
  s.alpha = positive(o, "alpha");
  s.threads = c.threads();
  const auto reps = int_at(c.cfg, "replicas", 2);
  const auto r = phase::decomposition_suite(s, reps, hash_words({c.seed(), hash_string(c.sub)}));
  Table t({"test", "statistic", "one_sided", "ks_statistic", "p_value", "alpha_per_test", "pass"});
  for (const auto& k : r.tests)
    t.add({k.name, k.statistic, k.one_sided, k.ks.statistic, k.ks.p_value, r.alpha_per_test, k.pass});
  c.table("decomposition", t);
  c.budget("suite", reps, r.reps, 0);
  return r.all_pass ? ok : check_failed;
}

std::vector<Point> origin_mass(double mass, double N) { return dw::point_mass_particles({0, 0, 0}, mass, N); }

Table phase_table() {
  return Table({"beta", "gamma", "survival", "ci_low", "ci_high", "replicas", "censor_box", "censor_horizon", "verdict"});
}

void phase_row(Table& t, const phase::PhasePoint& p) {
  t.add({p.beta, p.gamma, p.survival_estimate, p.ci_low, p.ci_high, static_cast<std::uint64_t>(p.replicas),
         p.censor_box, p.censor_horizon, std::string(phase::verdict_name(p.verdict))});
}

int cmd_phase_scan(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto betas = num_list(o, "betas"), gammas = num_list(o, "gammas");
  std::vector<double> horizons;
  for (const auto& h : o["horizons"]) horizons.push_back(horizon_of(h));
  if (horizons.empty()) horizons.push_back(horizon_of(c.cfg["horizon"]));
  const auto eng = engine_from(c.cfg["engine"]);
  std::vector<Params> grid;
  for (double b : betas)
    for (double g : gammas) {
      grid.push_back(params_from(c.cfg["params"], b, g));
      check_dt(eng, direct_rate_bound(grid.back()), "beta = " + format_double(b) + ", gamma = " + format_double(g));
    }
  phase::SurvivalSpec spec;
  spec.L_box = positive(o, "box");
  spec.reps = int_at(c.cfg, "replicas");
  spec.threshold = positive(o, "threshold");
  spec.threads = c.threads();
  const auto init = origin_mass(positive(o, "mass"), eng.N);
  Table t = phase_table();
  std::size_t completed = 0, exceeded = 0, point = 0;
  for (const auto& p : grid)
    for (double h : horizons) {
      spec.horizon = h;
      const auto pt = phase::survival_probability(p, init, spec, eng, c.seed(), c.stream(point++));
      phase_row(t, pt);
      completed += pt.replicas;
      exceeded += pt.budget_exceeded;
      if (pt.budget_exceeded)
        c.warn("beta = " + format_double(p.beta) + ", gamma = " + format_double(p.gamma) + ": " +
               std::to_string(pt.budget_exceeded) + " replicas exceeded the engine budget");
    }
  if (completed == 0) {
    c.budget("scan", spec.reps * t.rows.size(), 0, exceeded);
    return budget;
  }
  c.table("phase", t);
  c.budget("scan", spec.reps * t.rows.size(), completed, exceeded);
  return ok;
}

int cmd_psi_bisect(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto& pj = c.cfg["params"];
  const double beta = positive(pj, "beta");
  const auto eng = engine_from(c.cfg["engine"]);
  const double gamma_max = positive(o, "gamma_max");
  const auto p_max = params_from(pj, beta, gamma_max);
  check_dt(eng, std::max(direct_rate_bound(p_max), direct_rate_bound(params_from(pj, beta, 0.0))), "the gamma range");
  phase::SurvivalSpec spec;
  spec.L_box = positive(o, "box");
  spec.horizon = horizon_of(c.cfg["horizon"]);
  spec.threshold = positive(o, "threshold");
  spec.threads = c.threads();
  const auto init = origin_mass(positive(o, "mass"), eng.N);
  std::size_t evaluations = 0, exceeded = 0;
  auto classifier = [&](double g, std::size_t reps) {
    auto s = spec;
    s.reps = reps;
    auto pt = phase::survival_probability(params_from(pj, beta, g), init, s, eng, c.seed(), c.stream(evaluations++));
    exceeded += pt.budget_exceeded;
    return pt;
  };
  const auto r = phase::estimate_psi(beta, positive(o, "tol"), int_at(o, "budget"), classifier, gamma_max,
                                     int_at(c.cfg, "replicas"));
  Table t({"step", "gamma", "survival", "ci_low", "ci_high", "replicas", "verdict", "bracket_low", "bracket_high"});
  std::uint64_t i = 0;
  for (const auto& s : r.trace)
    t.add({i++, s.gamma, s.point.survival_estimate, s.point.ci_low, s.point.ci_high,
           static_cast<std::uint64_t>(s.point.replicas), std::string(phase::verdict_name(s.point.verdict)), s.low,
           s.high});
  Table sum({"beta", "gamma_low", "gamma_high", "undecided", "replicas_used"});
  sum.add({beta, r.gamma_low, r.gamma_high, r.undecided, static_cast<std::uint64_t>(r.replicas_used)});
  if (r.undecided) c.warn("bisection stopped at an undecided point");
  c.table("psi_trace", t);
  c.table("psi", sum);
  c.budget("bisection", int_at(o, "budget"), r.replicas_used, exceeded);
  return ok;
}

int cmd_death_block(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto& pj = c.cfg["params"];
  const auto p = params_from(pj, nonneg(pj, "beta"), nonneg(pj, "gamma"));
  auto bs = num_list(o, "b");
  for (double b : bs)
    if (!(b > 0)) throw ConfigError("b values must be positive");
  std::sort(bs.begin(), bs.end());
  const auto eng = engine_from(c.cfg["engine"]);
  for (double b : bs) {
    const auto k = phase::death_block_coefficients(p, std::pow(b, 2.0 / 3), b);
    check_dt(nutrient::engine_for(k, eng), std::max(k.death, std::abs(k.death - k.reaction)), "b = " + format_double(b));
  }
  const auto reps = int_at(c.cfg, "replicas", 2);
  const bool stop = o["stop_at_pass"].get<bool>();
  Table t({"b", "L", "M", "placement", "replicas", "nonzero", "budget_exceeded", "p_exit_nonzero", "p_ci_low",
           "p_ci_high", "mean_exit_over_M", "mean_ci_low", "mean_ci_high", "epsilon0", "passes"});
  Table sum({"b", "L", "M", "p_upper", "mean_upper", "epsilon0", "passes"});
  std::optional<double> passing;
  std::size_t completed = 0, exceeded = 0, requested = 0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const double b = bs[i], L = std::pow(b, 2.0 / 3), M = b;
    const auto rep = phase::death_block_check(p, L, M, reps, eng, hash_words({c.seed(), hash_string(c.sub), i}),
                                              c.threads());
    for (const auto& pl : rep.placements) {
      t.add({b, L, M, pl.placement, static_cast<std::uint64_t>(pl.replicas), static_cast<std::uint64_t>(pl.nonzero),
             static_cast<std::uint64_t>(pl.budget_exceeded), pl.p_exit_nonzero, pl.p_ci.low, pl.p_ci.high,
             pl.mean_exit_over_M, pl.mean_ci.low, pl.mean_ci.high, rep.epsilon0, rep.passes});
      requested += pl.replicas;
      exceeded += pl.budget_exceeded;
      completed += pl.replicas - pl.budget_exceeded;
    }
    sum.add({b, L, M, rep.p_upper, rep.mean_upper, rep.epsilon0, rep.passes});
    if (rep.passes && !passing) {
      passing = b;
      if (stop) break;
    }
  }
  if (completed == 0) return budget;
  c.table("death_block", t);
  c.table("death_block_summary", sum);
  Table pb({"passing_b"});
  pb.add({passing ? Cell(*passing) : Cell(std::string("none"))});
  c.table("death_block_result", pb);
  if (!passing) c.warn("no block size passed");
  c.budget("blocks", requested, completed, exceeded);
  return ok;
}

int cmd_life_block(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto& pj = c.cfg["params"];
  const auto p = params_from(pj, nonneg(pj, "beta"), nonneg(pj, "gamma"));
  blocks::BlockConfig bc;
  bc.L = positive(o, "L");
  bc.M = positive(o, "M");
  bc.d = p.d;
  bc.validate();
  const auto eng = engine_from(c.cfg["engine"]);
  check_dt(eng, direct_rate_bound(p), "the block run");
  const auto reps = int_at(c.cfg, "replicas");
  const auto r = blocks::life_block_probe(Coefficients::from_params(p), bc, positive(o, "mass"), reps, eng,
                                          hash_words({c.seed(), hash_string(c.sub)}));
  const std::size_t done = r.replicas - r.budget_exceeded;
  if (done == 0) return budget;
  Table t({"target_k", "replicas", "failures", "failure_estimate", "ci_low", "ci_high", "budget_exceeded"});
  for (int s = 0; s < 2; ++s)
    t.add({static_cast<std::int64_t>(s == 0 ? 1 : -1), static_cast<std::uint64_t>(done),
           static_cast<std::uint64_t>(r.failures[s]), r.estimate[s], r.ci[s].low, r.ci[s].high,
           static_cast<std::uint64_t>(r.budget_exceeded)});
  c.table("life_block", t);
  c.budget("probe", reps, done, r.budget_exceeded);
  return ok;
}

int cmd_op_sim(Ctx& c) {
  const auto& o = c.cfg["options"];
  auto dens = num_list(o, "densities");
  for (double d : dens)
    if (!(d >= 0 && d <= 1)) throw ConfigError("densities must lie in [0, 1]");
  std::sort(dens.begin(), dens.end());
  const int kd = o["k_dependence"].get<int>();
  const int gens = static_cast<int>(int_at(o, "generations"));
  const double lo = positive(o, "low_threshold"), hi = positive(o, "high_threshold");
  if (!(lo < hi && hi < 1)) throw ConfigError("need 0 < low_threshold < high_threshold < 1");
  const auto reps = int_at(c.cfg, "replicas");
  const auto sweep = blocks::op_density_sweep(dens, kd, gens, reps, hash_words({c.seed(), hash_string(c.sub)}));
  const auto br = blocks::bracket_critical_density(sweep, lo, hi);
  Table t({"density", "survived", "replicas", "ci_low", "ci_high"});
  for (const auto& s : sweep)
    t.add({s.density, static_cast<std::uint64_t>(s.survived), static_cast<std::uint64_t>(s.replicas), s.ci.low,
           s.ci.high});
  Table b({"k_dependence", "generations", "bracket_low", "bracket_high", "found"});
  b.add({static_cast<std::int64_t>(kd), static_cast<std::int64_t>(gens), br.low, br.high, br.found});
  c.table("op_sweep", t);
  c.table("op_bracket", b);
  c.budget("sweep", reps * dens.size(), reps * dens.size(), 0);
  return ok;
}

int cmd_wave(Ctx& c) {
  const auto& o = c.cfg["options"];
  const double gamma = nonneg(c.cfg["params"], "gamma");
  const auto speeds = num_list(o, "speeds");
  for (double s : speeds)
    if (!(s > 0)) throw ConfigError("speeds must be positive");
  wave::ShootConfig sc;
  sc.delta = positive(o, "delta");
  sc.s_max = positive(o, "s_max");
  const bool traj = o["trajectories"].get<bool>();
  Table t({"c", "gamma", "admissible", "gamma_above_one", "classification", "discriminant", "rest_nutrient",
           "stays_positive", "min_U", "terminal_distance", "converged", "v_monotone", "diverged"});
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const double cs = speeds[i];
    const auto adm = wave::wave_admissible(cs, gamma);
    const auto eig = wave::eigenvalues(wave::Equilibrium::nutrient_one, cs, gamma);
    if (gamma >= 1) {
      t.add({cs, gamma, adm.admissible, adm.gamma_above_one, eig.classification, eig.discriminant, 0.0, false, 0.0,
             INFINITY, false, false, false});
      continue;
    }
    const auto r = wave::shoot(cs, gamma, sc);
    t.add({cs, gamma, adm.admissible, adm.gamma_above_one, eig.classification, eig.discriminant, r.rest_nutrient,
           r.stays_positive, r.min_U, r.terminal_distance, r.converged, r.v_monotone, r.diverged});
    if (traj) {
      Table tr({"s", "U", "V", "W"});
      for (std::size_t k = 0; k < r.s.size(); ++k)
        tr.add({r.s[k], r.trajectory[k].U, r.trajectory[k].V, r.trajectory[k].W});
      c.table("trajectory_" + std::to_string(i), tr);
    }
  }
  c.table("wave", t);
  return ok;
}

trigger::TriggerInstance parse_instance(const Json& j, std::optional<trigger::TwoStageSplit>& split) {
  auto vec = [&](const Json& a, const char* what) {
    if (!a.is_array()) throw ConfigError(std::string("instance: ") + what + " must be an array");
    std::vector<double> v;
    for (const auto& x : a) {
      if (!x.is_number()) throw ConfigError(std::string("instance: ") + what + " must hold numbers");
      v.push_back(x.get<double>());
    }
    return v;
  };
  auto mat = [&](const Json& a, std::size_t n, const char* what) {
    if (!a.is_array() || a.size() != n) throw ConfigError(std::string("instance: ") + what + " must have n rows");
    std::vector<double> m;
    for (const auto& row : a) {
      auto r = vec(row, what);
      if (r.size() != n) throw ConfigError(std::string("instance: ") + what + " must be n x n");
      m.insert(m.end(), r.begin(), r.end());
    }
    return m;
  };
  if (!j.is_object()) throw ConfigError("instance must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "e" && it.key() != "f" && it.key() != "M" && it.key() != "split")
      throw ConfigError("instance: unknown key " + it.key());
  trigger::TriggerInstance t;
  t.e = vec(j.at("e"), "e");
  t.n = t.e.size();
  t.f = vec(j.at("f"), "f");
  t.M = mat(j.at("M"), t.n, "M");
  if (j.contains("split")) {
    const auto& s = j["split"];
    trigger::TwoStageSplit sp;
    sp.f_minus = vec(s.at("f_minus"), "f_minus");
    sp.f_plus = vec(s.at("f_plus"), "f_plus");
    sp.M_minus = mat(s.at("M_minus"), t.n, "M_minus");
    sp.M_plus = mat(s.at("M_plus"), t.n, "M_plus");
    split = sp;
  }
  t.validate();
  return t;
}

// Labels are printed 1-based.
std::string set_text(const trigger::LabelSet& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i] + 1);
  return out + "}";
}

int cmd_fixed_point(Ctx& c, const std::string& path) {
  std::optional<trigger::TwoStageSplit> split;
  trigger::TriggerInstance inst;
  try {
    inst = parse_instance(load_json(path), split);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
  const bool brute = c.cfg["options"]["brute_force"].get<bool>();
  if (brute && inst.n > 20)
    throw ConfigError("--brute-force refused: |A| = " + std::to_string(inst.n) + " exceeds 20 (2^|A| subsets)");
  std::ostringstream text;
  const auto r = trigger::smallest_fixed_point(inst);
  text << "S = " << set_text(r.set) << "\n";
  Table trace({"iteration", "set"});
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    text << "T^" << i << "(empty) = " << set_text(r.trace[i]) << "\n";
    trace.add({static_cast<std::uint64_t>(i), set_text(r.trace[i])});
  }
  Table sum({"quantity", "value"});
  sum.add({std::string("S"), set_text(r.set)});
  sum.add({std::string("iterations"), static_cast<std::uint64_t>(r.iterations)});
  bool good = true;
  if (brute) {
    const auto bf = trigger::brute_force_smallest_fixed_point(inst);
    const bool agree = bf == r.set;
    good = good && agree;
    text << "brute force S = " << set_text(bf) << (agree ? " (agrees)" : " (DISAGREES)") << "\n";
    sum.add({std::string("brute_force_S"), set_text(bf)});
  }
  if (split) {
    const auto ts = trigger::two_stage(inst, *split);
    trigger::LabelSet uni;
    std::set_union(ts.s_minus.begin(), ts.s_minus.end(), ts.s_plus.begin(), ts.s_plus.end(), std::back_inserter(uni));
    trigger::LabelSet inter;
    std::set_intersection(ts.s_minus.begin(), ts.s_minus.end(), ts.s_plus.begin(), ts.s_plus.end(),
                          std::back_inserter(inter));
    const bool holds = uni == r.set && inter.empty();
    good = good && holds;
    text << "S- = " << set_text(ts.s_minus) << "\nS+ = " << set_text(ts.s_plus) << "\nS- u S+ "
         << (holds ? "= S, disjoint" : "does NOT decompose S") << "\n";
    for (std::size_t a = 0; a < inst.n; ++a)
      if (!std::binary_search(ts.s_minus.begin(), ts.s_minus.end(), a))
        text << "  label " << a + 1 << ": e_hat = " << format_double(ts.e_hat[a])
             << ", f_hat = " << format_double(ts.f_hat[a]) << "\n";
    sum.add({std::string("S_minus"), set_text(ts.s_minus)});
    sum.add({std::string("S_plus"), set_text(ts.s_plus)});
    sum.add({std::string("decomposes"), holds});
  }
  std::cout << text.str();
  c.table("fixed_point", sum);
  c.table("fixed_point_trace", trace);
  return good ? ok : check_failed;
}

int cmd_loglaplace_solve(Ctx& c) {
  const auto& o = c.cfg["options"];
  const auto& pj = c.cfg["params"];
  const int d = pj.at("d").get<int>();
  if (d < 1 || d > 3) throw ConfigError("params.d must be 1, 2 or 3");
  const double eta = nonneg(pj, "gamma");
  const double h = positive(c.cfg["engine"], "pitch");
  const auto kind = o["kind"].get<std::string>();
  auto node_table = [&](const loglaplace::GridField& f) {
    std::vector<std::string> cols;
    for (int i = 0; i < d; ++i) cols.push_back("x" + std::to_string(i + 1));
    cols.push_back("value");
    Table t(cols);
    for (std::size_t k = 0; k < f.grid.size(); ++k) {
      const auto x = f.grid.point(k);
      std::vector<Cell> row;
      for (int i = 0; i < d; ++i) row.push_back(x[i]);
      row.push_back(f.values[k]);
      t.add(row);
    }
    return t;
  };
  if (kind == "witness") {
    const double coeff = positive(o, "diffusion_coeff");
    const auto w = loglaplace::death_test_function(d, h);
    const auto rep = loglaplace::death_witness_check(w, std::vector<double>(w.grid.size(), eta), coeff);
    Table t({"d", "pitch", "diffusion_coeff", "eta", "nodes_checked", "nodes_failed", "worst_margin", "holds"});
    t.add({static_cast<std::int64_t>(d), h, coeff, eta, static_cast<std::uint64_t>(rep.nodes_checked),
           static_cast<std::uint64_t>(rep.nodes_failed), rep.worst_margin, rep.holds});
    c.table("witness", t);
    return rep.holds ? ok : check_failed;
  }
  const double a = positive(c.cfg["domain"], "half_width");
  loglaplace::NodeGrid g(BoxDomain::centered(a, d), h);
  const double src = nonneg(o, "source"), bnd = nonneg(o, "boundary");
  if (kind == "elliptic") {
    loglaplace::GridField h1(g, src), h2(g);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.is_boundary(k)) h2.values[k] = bnd;
    const auto r = loglaplace::solve_elliptic_loglaplace(h1, h2, std::vector<double>(g.size(), eta));
    c.table("solution", node_table(r.phi));
    Table s({"residual", "newton_iterations", "used_relaxation"});
    s.add({r.residual, static_cast<std::int64_t>(r.newton_iterations), r.used_relaxation});
    c.table("solver", s);
    return ok;
  }
  if (kind == "parabolic") {
    loglaplace::ParabolicProblem prob;
    prob.h1 = loglaplace::GridField(g, nonneg(o, "initial"));
    prob.h2 = [src](double, const Point&) { return src; };
    prob.h3 = [bnd](double, const Point&) { return bnd; };
    prob.eta.assign(g.size(), eta);
    const auto f = loglaplace::solve_parabolic_loglaplace(prob, positive(o, "t"));
    c.table("solution", node_table(f));
    return ok;
  }
  throw ConfigError("options.kind must be elliptic, parabolic or witness");
}

int run(const std::string& sub, const Flags& fl, Ctx& c) {
  if (sub == "validate-engine") return cmd_validate_engine(c);
  if (sub == "nutrient-compare") return cmd_nutrient_compare(c);
  if (sub == "decomposition-suite") return cmd_decomposition_suite(c);
  if (sub == "phase-scan") return cmd_phase_scan(c);
  if (sub == "psi-bisect") return cmd_psi_bisect(c);
  if (sub == "death-block") return cmd_death_block(c);
  if (sub == "life-block") return cmd_life_block(c);
  if (sub == "op-sim") return cmd_op_sim(c);
  if (sub == "wave") return cmd_wave(c);
  if (sub == "fixed-point") return cmd_fixed_point(c, fl.instance);
  if (sub == "loglaplace-solve") return cmd_loglaplace_solve(c);
  throw ConfigError("unknown subcommand " + sub);
}

}  // namespace
}  // namespace rdphase::cli

int main(int argc, char** argv) {
  using namespace rdphase::cli;
  CLI::App app{"rdphase: stochastic reaction-diffusion phase experiments"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"validate-engine", "moment, extinction and Laplace-functional oracle checks of the particle engine"},
      {"nutrient-compare", "package approximation against the direct simulator"},
      {"decomposition-suite", "distributional tests of the two-stage constructions"},
      {"phase-scan", "survival estimates over a (beta, gamma) grid"},
      {"psi-bisect", "bisection for the critical gamma at fixed beta"},
      {"death-block", "death block certification over block sizes"},
      {"life-block", "life block failure probabilities"},
      {"op-sim", "oriented site percolation density sweep"},
      {"wave", "travelling wave classification and shooting"},
      {"fixed-point", "smallest fixed point of a trigger instance file"},
      {"loglaplace-solve", "log-Laplace PDE solutions and the death witness check"}};
  Flags fl;
  std::string chosen;
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", fl.config, "JSON config file");
    auto* so = s->add_option("--seed", fl.seed, "seed, overrides the config");
    auto* oo = s->add_option("--out", fl.out, "output directory");
    auto* ro = s->add_option("--replicas", fl.replicas, "replica count");
    auto* to = s->add_option("--threads", fl.threads, "worker threads");
    auto* fo = s->add_option("--format", fl.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (name == "fixed-point") {
      s->add_option("instance", fl.instance, "instance JSON file")->required();
      s->add_flag("--brute-force", fl.brute_force, "verify by exhaustive search (|A| <= 20)");
    }
    s->callback([&fl, &chosen, name = name, so, oo, ro, to, fo] {
      chosen = name;
      fl.seed_opt = so;
      fl.out_opt = oo;
      fl.rep_opt = ro;
      fl.thr_opt = to;
      fl.fmt_opt = fo;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : Exit::usage;
  }

  Ctx ctx;
  ctx.sub = chosen;
  int code = Exit::ok;
  try {
    ctx.cfg = effective_config(chosen, fl);
    code = run(chosen, fl, ctx);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::usage;
  } catch (const rdphase::StepSizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::usage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return Exit::usage;
  } catch (const rdphase::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::budget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::check_failed;
  }
  if (code == Exit::budget && !ctx.dir) {
    std::cerr << "error: the engine budget was exhausted before any usable output\n";
    return code;
  }
  Json manifest = {{"schema_version", kSchemaVersion},
                   {"subcommand", chosen},
                   {"build_id", RDPHASE_BUILD_ID},
                   {"config", ctx.cfg},
                   {"wall_time_seconds",
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count()},
                   {"budgets", ctx.budgets},
                   {"warnings", ctx.warnings},
                   {"exit_code", code}};
  try {
    ctx.out().finish(std::move(manifest));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::check_failed;
  }
  if (code == Exit::check_failed) std::cerr << "one or more checks failed\n";
  return code;
}
