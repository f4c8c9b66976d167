#include "rdphase/blocks/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdphase/core/errors.hpp"
#include "rdphase/core/rng.hpp"

namespace rdphase::blocks {

void BlockConfig::validate() const {
  if (!(L > 0) || !std::isfinite(L)) throw std::invalid_argument("BlockConfig: L must be > 0");
  if (!(M > 0) || !std::isfinite(M)) throw std::invalid_argument("BlockConfig: M must be > 0");
  if (d < 2 || d > 3) throw std::invalid_argument("BlockConfig: d must be 2 or 3");
}

BoxDomain block_box(const BlockConfig& cfg, int n) {
  if (n < 1) throw std::invalid_argument("block_box: n must be >= 1");
  return BoxDomain::centered(3.0 * n * cfg.L, cfg.d);
}

namespace {

double block_pitch(const BlockConfig& cfg, double N) {
  const double half = 3.0 * cfg.L;
  return half / std::ceil(half * N - 1e-9);
}

}  // namespace

std::vector<ExitStage> iterate_exit_measures(std::span<const Point> initial, const Coefficients& k,
                                             const BlockConfig& cfg, int n_max, const dw::EngineConfig& engine,
                                             std::uint64_t seed, std::uint64_t stream) {
  cfg.validate();
  if (n_max < 1) throw std::invalid_argument("iterate_exit_measures: n_max must be >= 1");
  const double pitch = block_pitch(cfg, engine.N);
  std::vector<ExitStage> out;
  std::vector<Point> start(initial.begin(), initial.end());
  nutrient::NutrientField f = nutrient::NutrientField::constant(Grid(block_box(cfg, 1), pitch), 1.0);
  for (int n = 1; n <= n_max; ++n) {
    const BoxDomain box = block_box(cfg, n);
    if (n > 1) f = nutrient::embed_field(f, box, 1.0);
    ExitStage st;
    st.box = box;
    st.N = engine.N;
    if (start.empty()) {
      st.v_final = f;
    } else {
      const auto r = nutrient::simulate_direct(start, f, k, engine, seed, hash_words({stream, 0x626C6BULL, static_cast<std::uint64_t>(n)}));
      if (r.budget_exceeded) throw BudgetExceeded("iterate_exit_measures: stage exceeded the engine budget");
      st.exits = r.exit_points;
      st.v_final = nutrient::NutrientField{f.grid, r.v_final};
    }
    f = st.v_final;
    start = st.exits;
    out.push_back(std::move(st));
  }
  return out;
}

bool in_window(const Point& x, const BlockConfig& cfg, int j, int k) {
  const double face = 3.0 * j * cfg.L;
  if (std::abs(x[0] - face) > 1e-9 * std::max(1.0, face)) return false;
  const double tol = cfg.L * 1e-12;
  if (std::abs(x[1] - 2.0 * k * cfg.L) > cfg.L + tol) return false;
  if (cfg.d == 3 && std::abs(x[2]) > cfg.L + tol) return false;
  return true;
}

double window_mass(std::span<const Point> pts, double N, const BlockConfig& cfg, int j, int k) {
  std::size_t c = 0;
  for (const auto& x : pts)
    if (in_window(x, cfg, j, k)) ++c;
  return static_cast<double>(c) / N;
}

double initial_window_mass(std::span<const Point> pts, double N, const BlockConfig& cfg) {
  return window_mass(pts, N, cfg, 0, 0);
}

bool OpLattice::open(int j, int k) const {
  if (j < 1 || j > generations || std::abs(k) > j || (j + k) % 2 != 0)
    throw std::out_of_range("OpLattice: site outside the lattice");
  return omega[j][index(j, k)] != 0;
}

bool OpLattice::tilde_at(int j, int k) const {
  if (j < 0 || j >= static_cast<int>(tilde.size()) || std::abs(k) > j || (j + k) % 2 != 0) return false;
  return tilde[j][index(j, k)] != 0;
}

OpLattice sites_from_tilde(std::vector<std::vector<std::uint8_t>> tilde) {
  if (tilde.empty()) throw std::invalid_argument("sites_from_tilde: need at least row 0");
  for (std::size_t j = 0; j < tilde.size(); ++j)
    if (tilde[j].size() != j + 1) throw std::invalid_argument("sites_from_tilde: row j must have j + 1 sites");
  OpLattice lat;
  lat.provenance = Provenance::derived_from_blocks;
  lat.generations = static_cast<int>(tilde.size()) - 1;
  lat.tilde = std::move(tilde);
  lat.omega.resize(lat.generations + 1);
  for (int j = 1; j <= lat.generations; ++j) {
    lat.omega[j].resize(j + 1);
    for (int k = -j; k <= j; k += 2) {
      const bool left = lat.tilde_at(j - 1, k - 1), right = lat.tilde_at(j - 1, k + 1);
      lat.omega[j][OpLattice::index(j, k)] = (!left && !right) ? 1 : lat.tilde[j][OpLattice::index(j, k)];
    }
  }
  return lat;
}

OpLattice blocks_to_sites(const std::vector<ExitStage>& exits, const BlockConfig& cfg, double mu_window_mass) {
  cfg.validate();
  std::vector<std::vector<std::uint8_t>> tilde(exits.size() + 1);
  tilde[0] = {static_cast<std::uint8_t>(mu_window_mass >= cfg.M)};
  for (int j = 1; j <= static_cast<int>(exits.size()); ++j) {
    tilde[j].resize(j + 1);
    const auto& st = exits[j - 1];
    for (int k = -j; k <= j; k += 2)
      tilde[j][OpLattice::index(j, k)] = window_mass(st.exits, st.N, cfg, j, k) > cfg.M;
  }
  return sites_from_tilde(std::move(tilde));
}

namespace {

template <class Open>
ClusterResult cluster_of(int generations, Open&& open) {
  ClusterResult r;
  r.size = 1;
  r.generations_reached.assign(generations + 1, 0);
  r.generations_reached[0] = 1;
  std::vector<std::uint8_t> prev{1}, cur;
  for (int j = 1; j <= generations; ++j) {
    cur.assign(j + 1, 0);
    bool any = false;
    for (int k = -j; k <= j; k += 2) {
      const int jp = j - 1;
      const bool from_left = k - 1 >= -jp && prev[OpLattice::index(jp, k - 1)];
      const bool from_right = k + 1 <= jp && prev[OpLattice::index(jp, k + 1)];
      if ((from_left || from_right) && open(j, k)) {
        cur[OpLattice::index(j, k)] = 1;
        any = true;
        ++r.size;
      }
    }
    if (!any) break;
    r.generations_reached[j] = 1;
    r.reached = j;
    prev.swap(cur);
  }
  r.survived = r.reached == generations;
  return r;
}

// Site uniform for (j, k); a moving-average Gaussian copula when k_dependence > 1.
class SiteField {
 public:
  SiteField(int k_dependence, std::uint64_t seed, std::uint64_t stream)
      : h_(k_dependence > 1 ? (k_dependence - 1) / 2 : 0), key_(seed, stream) {}

  double uniform(int j, int k) const {
    if (h_ == 0) return key_.uniform(static_cast<std::uint64_t>(j), encode(k));
    double z = 0.0;
    for (int a = -h_; a <= h_; ++a)
      for (int b = -h_; b <= h_; ++b) z += gaussian(j + a, k + b);
    return normal_cdf(z / (2 * h_ + 1));
  }

 private:
  static std::uint64_t encode(int k) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + (1LL << 32)); }
  double gaussian(int j, int k) const {
    const auto r = key_.block(encode(j), encode(k));
    return gaussian_first(u32_to_unit(r[0]), u32_to_unit(r[1]));
  }
  int h_;
  KeyedRng key_;
};

}  // namespace

ClusterResult op_cluster(const OpLattice& lat) {
  return cluster_of(lat.generations, [&](int j, int k) { return lat.open(j, k); });
}

OpLattice op_simulate(double density, int k_dependence, int generations, std::uint64_t seed, std::uint64_t stream) {
  if (!(density >= 0 && density <= 1)) throw std::invalid_argument("op_simulate: density must lie in [0, 1]");
  if (k_dependence < 0 || generations < 1) throw std::invalid_argument("op_simulate: bad k_dependence or generations");
  const SiteField field(k_dependence, seed, stream);
  OpLattice lat;
  lat.generations = generations;
  lat.provenance = k_dependence > 1 ? Provenance::simulated_dependent : Provenance::simulated_iid;
  lat.omega.resize(generations + 1);
  for (int j = 1; j <= generations; ++j) {
    lat.omega[j].resize(j + 1);
    for (int k = -j; k <= j; k += 2) lat.omega[j][OpLattice::index(j, k)] = field.uniform(j, k) < density;
  }
  return lat;
}

std::vector<SweepPoint> op_density_sweep(const std::vector<double>& densities, int k_dependence, int generations,
                                         std::size_t reps, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  for (double p : densities) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("op_density_sweep: density must lie in [0, 1]");
    out.push_back({p, 0, reps, {}});
  }
  for (std::size_t r = 0; r < reps; ++r) {
    const SiteField field(k_dependence, seed, r);
    for (auto& pt : out) {
      const double p = pt.density;
      if (cluster_of(generations, [&](int j, int k) { return field.uniform(j, k) < p; }).survived) ++pt.survived;
    }
  }
  for (auto& pt : out) pt.ci = wilson_interval(pt.survived, pt.replicas);
  return out;
}

CriticalBracket bracket_critical_density(const std::vector<SweepPoint>& sweep, double low_threshold,
                                         double high_threshold) {
  CriticalBracket b;
  bool have_low = false, have_high = false;
  for (const auto& pt : sweep) {
    if (pt.ci.high < low_threshold && (!have_low || pt.density > b.low)) b.low = pt.density, have_low = true;
    if (pt.ci.low > high_threshold && (!have_high || pt.density < b.high)) b.high = pt.density, have_high = true;
  }
  b.found = have_low && have_high && b.low < b.high;
  return b;
}

std::vector<Point> window_particles(const BlockConfig& cfg, double mass, double N, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(mass * N));
  const KeyedRng key(hash_words({seed, 0x77696E646F77ULL}));
  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = key.block(i, 0);
    pts[i] = {0.0, cfg.L * (2 * u32_to_unit(r[0]) - 1), cfg.d == 3 ? cfg.L * (2 * u32_to_unit(r[1]) - 1) : 0.0};
  }
  return pts;
}

LifeProbe life_block_probe(const Coefficients& k, const BlockConfig& cfg, double mu_mass, std::size_t reps,
                           const dw::EngineConfig& engine, std::uint64_t seed) {
  cfg.validate();
  if (!(mu_mass >= cfg.M)) throw std::invalid_argument("life_block_probe: initial mass must be >= M");
  const BoxDomain box = block_box(cfg, 1);
  const Grid g(box, block_pitch(cfg, engine.N));
  const auto f = nutrient::NutrientField::from_function(g, [](const Point& x) { return x[0] >= 0 ? 1.0 : 0.0; });
  const auto init = window_particles(cfg, mu_mass, engine.N, seed);
  LifeProbe p;
  p.replicas = reps;
  std::size_t done = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto res = nutrient::simulate_direct(init, f, k, engine, seed, r);
    if (res.budget_exceeded) {
      ++p.budget_exceeded;
      continue;
    }
    ++done;
    for (int s = 0; s < 2; ++s)
      if (window_mass(res.exit_points, engine.N, cfg, 1, s == 0 ? 1 : -1) <= cfg.M) ++p.failures[s];
  }
  for (int s = 0; s < 2; ++s) {
    p.estimate[s] = done ? static_cast<double>(p.failures[s]) / done : 0.0;
    p.ci[s] = wilson_interval(p.failures[s], done);
  }
  return p;
}

bool chain_implication_holds(const OpLattice& lat, const std::vector<ExitStage>& exits) {
  if (!lat.tilde_at(0, 0)) return true;
  const auto c = op_cluster(lat);
  for (int n = 1; n <= lat.generations && n <= static_cast<int>(exits.size()); ++n)
    if (c.generations_reached[n] && exits[n - 1].mass() <= 0) return false;
  return true;
}

}  // namespace rdphase::blocks
