#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rdphase/core/errors.hpp"
#include "rdphase/loglaplace/solvers.hpp"

namespace rdphase::loglaplace {

WitnessReport death_witness_check(const GridField& w, const std::vector<double>& eta, double diffusion_coeff) {
  const NodeGrid& g = w.grid;
  if (!eta.empty() && eta.size() != g.size()) throw std::invalid_argument("witness: eta size mismatch");
  WitnessReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.is_boundary(k)) continue;
    const double v = w.values[k];
    double lap;
    if (w.laplacian) {
      lap = (*w.laplacian)[k];
    } else {
      bool finite = true;
      for (int i = 0; i < g.dim(); ++i)
        finite = finite && std::isfinite(w.values[k + g.stride(i)]) && std::isfinite(w.values[k - g.stride(i)]);
      lap = finite ? discrete_laplacian(g, w.values, k) : std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(v) || !std::isfinite(lap)) {
      ++rep.nodes_skipped;
      continue;
    }
    const double e = eta.empty() ? 0.0 : eta[k];
    const double margin = 0.5 * v * v - e * v - diffusion_coeff * lap;
    ++rep.nodes_checked;
    if (margin < 0) ++rep.nodes_failed;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_node = g.point(k);
    }
  }
  if (rep.nodes_checked == 0) rep.worst_margin = 0.0;
  rep.holds = rep.nodes_failed == 0;
  return rep;
}

GridField death_test_function(int d, double pitch) {
  const NodeGrid g(BoxDomain::centered(3.0, d), pitch);
  GridField w(g);
  std::vector<double> lap(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.point(k);
    double v = 0.0, l = 0.0;
    for (int i = 0; i < d; ++i) {
      const double a = x[i] + 3.0, b = 3.0 - x[i];
      v += 12.0 / (a * a) + 12.0 / (b * b);
      l += 72.0 / (a * a * a * a) + 72.0 / (b * b * b * b);
    }
    if (g.is_boundary(k)) v = l = std::numeric_limits<double>::infinity();
    w.values[k] = v;
    lap[k] = l;
  }
  w.laplacian = std::move(lap);
  return w;
}

namespace {

// chi = r psi solves chi'' = chi + chi^2/(2r) on [eps, r_max], chi(eps) = 4/eps, chi(r_max) = 0.
SingularSolution solve_radial(double eps, double r_max, int nodes) {
  if (!(eps > 0) || !(r_max > eps) || nodes < 10) throw std::invalid_argument("singular solution: bad grid");
  const int n = nodes;
  std::vector<double> r(n + 1), chi(n + 1);
  const double ratio = std::log(r_max / eps) / n;
  for (int i = 0; i <= n; ++i) r[i] = eps * std::exp(ratio * i);
  r[n] = r_max;
  for (int i = 0; i <= n; ++i) chi[i] = 4.0 / r[i] * std::exp(-(r[i] - eps));
  chi[0] = 4.0 / eps;
  chi[n] = 0.0;

  auto residual = [&](const std::vector<double>& c, std::vector<double>& F) {
    double m = 0.0;
    for (int i = 1; i < n; ++i) {
      const double hl = r[i] - r[i - 1], hr = r[i + 1] - r[i];
      const double d2 = 2.0 / (hl + hr) * ((c[i + 1] - c[i]) / hr - (c[i] - c[i - 1]) / hl);
      F[i] = d2 - c[i] - c[i] * c[i] / (2.0 * r[i]);
      m = std::max(m, std::abs(F[i]) * r[i] * r[i]);
    }
    return m;
  };
  std::vector<double> F(n + 1, 0.0), a(n + 1), b(n + 1), cc(n + 1), delta(n + 1), trial;
  double res = residual(chi, F);
  bool converged = false;
  for (int it = 0; it < 200 && res > 1e-10; ++it) {
    // Tridiagonal Jacobian, solved by the Thomas algorithm.
    for (int i = 1; i < n; ++i) {
      const double hl = r[i] - r[i - 1], hr = r[i + 1] - r[i], s = 2.0 / (hl + hr);
      a[i] = s / hl;
      cc[i] = s / hr;
      b[i] = -s / hl - s / hr - 1.0 - chi[i] / r[i];
    }
    std::vector<double> cp(n + 1), dp(n + 1);
    for (int i = 1; i < n; ++i) {
      const double den = b[i] - (i > 1 ? a[i] * cp[i - 1] : 0.0);
      cp[i] = cc[i] / den;
      dp[i] = (-F[i] - (i > 1 ? a[i] * dp[i - 1] : 0.0)) / den;
    }
    delta.assign(n + 1, 0.0);
    for (int i = n - 1; i >= 1; --i) delta[i] = dp[i] - (i < n - 1 ? cp[i] * delta[i + 1] : 0.0);
    double step = 0.0;
    for (int i = 1; i < n; ++i) step = std::max(step, std::abs(delta[i]));
    if (step <= 1e-11 * chi[0]) {
      converged = true;
      break;
    }
    double alpha = 1.0;
    std::vector<double> Ft(n + 1, 0.0);
    for (;;) {
      trial = chi;
      for (int i = 1; i < n; ++i) trial[i] += alpha * delta[i];
      const double rt = residual(trial, Ft);
      if (std::isfinite(rt) && rt < (1.0 - 1e-4 * alpha) * res) {
        chi.swap(trial);
        F.swap(Ft);
        res = rt;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-10) {
        if (res > 1e-6) throw NumericFailure("singular solution: Newton line search failed");
        converged = true;
        break;
      }
    }
    if (converged) break;
  }
  if (!converged && !(res <= 1e-10)) throw NumericFailure("singular solution: Newton did not converge");

  SingularSolution out;
  out.eps = eps;
  out.r = r;
  out.psi.resize(n + 1);
  for (int i = 0; i <= n; ++i) out.psi[i] = chi[i] / r[i];
  // Mass of the core ball under the bound psi <= 4/r^2 plus the trapezoid integral of 4 pi r chi.
  double c0 = 16.0 * M_PI * eps;
  for (int i = 0; i < n; ++i) c0 += 0.5 * (r[i + 1] - r[i]) * 4.0 * M_PI * (r[i] * chi[i] + r[i + 1] * chi[i + 1]);
  out.c0 = c0;
  return out;
}

}  // namespace

SingularSolution singular_solution_at(double eps, const SingularConfig& cfg) {
  return solve_radial(eps, cfg.r_max, cfg.nodes);
}

SingularSolution maximal_singular_solution(const SingularConfig& cfg) {
  double eps = cfg.eps0;
  int nodes = cfg.nodes;
  SingularSolution prev = solve_radial(eps, cfg.r_max, nodes);
  for (int k = 1; k <= cfg.max_refinements; ++k) {
    eps *= 0.5;
    nodes = static_cast<int>(nodes * 1.2);
    SingularSolution cur = solve_radial(eps, cfg.r_max, nodes);
    cur.refinements = k;
    if (std::abs(cur.c0 - prev.c0) <= cfg.tol * std::abs(cur.c0)) return cur;
    prev = std::move(cur);
  }
  throw NumericFailure("singular solution: c0 did not stabilize under refinement");
}

namespace {

// Distance from the symmetry point (value p0) to the point with value p0 + t^2, as a function of u with
// t = u / (1 - u); u = 1 is the wall.
double distance_to(double eta, double p0, double u_end) {
  auto integrand = [&](double u) {
    if (u >= 1.0) return 2.0 * std::sqrt(3.0);
    const double t = u / (1.0 - u), s = t * t;
    const double q = 0.5 * p0 * p0 + 0.5 * p0 * s + s * s / 6.0 + eta * (p0 + 0.5 * s);
    return 2.0 / std::sqrt(2.0 * q) / ((1.0 - u) * (1.0 - u));
  };
  static constexpr double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                   0.9061798459386640};
  static constexpr double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                   0.4786286704993665, 0.2369268850561891};
  const int panels = 4000;
  const double h = u_end / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double mid = (i + 0.5) * h;
    for (int j = 0; j < 5; ++j) sum += wg[j] * integrand(mid + 0.5 * h * xg[j]);
  }
  return 0.5 * h * sum;
}

}  // namespace

double maximal_solution_1d(double eta, double half_width, double x) {
  if (!(eta >= 0) || !(half_width > 0)) throw std::invalid_argument("maximal_solution_1d: need eta >= 0, a > 0");
  const double ax = std::abs(x);
  if (ax >= half_width) return std::numeric_limits<double>::infinity();
  double lo = 1e-12, hi = 1e12;
  for (int i = 0; i < 200 && hi / lo > 1 + 1e-14; ++i) {
    const double mid = std::sqrt(lo * hi);
    (distance_to(eta, mid, 1.0) > half_width ? lo : hi) = mid;
  }
  const double p0 = std::sqrt(lo * hi);
  if (ax == 0.0) return p0;
  double ulo = 0.0, uhi = 1.0;
  for (int i = 0; i < 200 && uhi - ulo > 1e-15; ++i) {
    const double mid = 0.5 * (ulo + uhi);
    (distance_to(eta, p0, mid) < ax ? ulo : uhi) = mid;
  }
  const double u = 0.5 * (ulo + uhi), t = u / (1.0 - u);
  return p0 + t * t;
}

}  // namespace rdphase::loglaplace
