#include "rdphase/trigger/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rdphase/core/errors.hpp"

namespace rdphase::trigger {

namespace {

void check_nonneg(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x >= 0) || !std::isfinite(x)) throw std::invalid_argument(std::string("TriggerInstance: ") + what + " must be finite and >= 0");
}

std::vector<char> to_mask(const LabelSet& B, std::size_t n) {
  std::vector<char> mask(n, 0);
  for (std::size_t b : B) {
    if (b >= n) throw std::invalid_argument("map_T: label outside A");
    mask[b] = 1;
  }
  return mask;
}

}  // namespace

void TriggerInstance::validate() const {
  if (e.size() != n || f.size() != n || M.size() != n * n) throw std::invalid_argument("TriggerInstance: size mismatch");
  check_nonneg(e, "e");
  check_nonneg(f, "f");
  check_nonneg(M, "M");
}

LabelSet map_T(const TriggerInstance& inst, const LabelSet& B) {
  auto mask = to_mask(B, inst.n);
  LabelSet out;
  for (std::size_t a = 0; a < inst.n; ++a) {
    double s = inst.f[a];
    for (std::size_t b = 0; b < inst.n; ++b)
      if (mask[b]) s += inst.m(b, a);
    if (s > inst.e[a]) out.push_back(a);
  }
  return out;
}

LabelSet iterate_from(const TriggerInstance& inst, const LabelSet& B, std::size_t max_steps) {
  LabelSet cur = B;
  for (std::size_t i = 0; i < max_steps; ++i) {
    LabelSet next = map_T(inst, cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

FixedPointResult smallest_fixed_point(const TriggerInstance& inst) {
  inst.validate();
  FixedPointResult r;
  LabelSet cur;
  r.trace.push_back(cur);
  for (;;) {
    LabelSet next = map_T(inst, cur);
    if (!std::includes(next.begin(), next.end(), cur.begin(), cur.end()))
      throw InternalInvariantViolation("smallest_fixed_point: chain not increasing");
    if (next == cur) break;
    cur = std::move(next);
    r.trace.push_back(cur);
    ++r.iterations;
    if (r.iterations > inst.n) throw InternalInvariantViolation("smallest_fixed_point: more than |A| steps");
  }
  r.set = cur;
  return r;
}

LabelSet brute_force_smallest_fixed_point(const TriggerInstance& inst) {
  inst.validate();
  if (inst.n > 20) throw std::invalid_argument("brute force refused for |A| > 20");
  const std::uint64_t count = 1ULL << inst.n;
  std::vector<LabelSet> fixed;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    LabelSet B;
    for (std::size_t i = 0; i < inst.n; ++i)
      if (mask >> i & 1) B.push_back(i);
    if (map_T(inst, B) == B) fixed.push_back(std::move(B));
  }
  // The smallest fixed point is contained in every fixed point.
  for (const auto& s : fixed) {
    bool minimal = true;
    for (const auto& t : fixed)
      if (!std::includes(t.begin(), t.end(), s.begin(), s.end())) {
        minimal = false;
        break;
      }
    if (minimal) return s;
  }
  throw InternalInvariantViolation("brute force: no smallest fixed point");
}

TriggerInstance restrict(const TriggerInstance& inst, const LabelSet& keep, const std::vector<double>& e,
                         const std::vector<double>& f) {
  TriggerInstance r;
  r.n = keep.size();
  r.e.resize(r.n);
  r.f.resize(r.n);
  r.M.resize(r.n * r.n);
  for (std::size_t i = 0; i < r.n; ++i) {
    r.e[i] = e[keep[i]];
    r.f[i] = f[keep[i]];
    for (std::size_t j = 0; j < r.n; ++j) r.M[i * r.n + j] = inst.m(keep[i], keep[j]);
  }
  return r;
}

TwoStageResult two_stage(const TriggerInstance& inst, const TwoStageSplit& sp) {
  inst.validate();
  const std::size_t n = inst.n;
  if (sp.f_minus.size() != n || sp.f_plus.size() != n || sp.M_minus.size() != n * n || sp.M_plus.size() != n * n)
    throw std::invalid_argument("two_stage: split size mismatch");
  check_nonneg(sp.f_minus, "f-");
  check_nonneg(sp.f_plus, "f+");
  check_nonneg(sp.M_minus, "M-");
  check_nonneg(sp.M_plus, "M+");
  for (std::size_t a = 0; a < n; ++a)
    if (sp.f_minus[a] + sp.f_plus[a] != inst.f[a]) throw std::invalid_argument("two_stage: f split not additive");
  for (std::size_t i = 0; i < n * n; ++i)
    if (sp.M_minus[i] + sp.M_plus[i] != inst.M[i]) throw std::invalid_argument("two_stage: M split not additive");

  TriggerInstance minus{n, inst.e, sp.f_minus, sp.M_minus};
  TwoStageResult r;
  r.s_minus = smallest_fixed_point(minus).set;
  auto in_minus = to_mask(r.s_minus, n);

  r.e_hat.assign(n, 0.0);
  r.f_hat.assign(n, 0.0);
  LabelSet rest;
  for (std::size_t a = 0; a < n; ++a) {
    if (in_minus[a]) continue;
    double eh = inst.e[a] - sp.f_minus[a];
    double fh = sp.f_plus[a];
    for (std::size_t b : r.s_minus) {
      eh -= sp.M_minus[b * n + a];
      fh += sp.M_plus[b * n + a];
    }
    if (eh < 0) throw InternalInvariantViolation("two_stage: negative residual threshold");
    r.e_hat[a] = eh;
    r.f_hat[a] = fh;
    rest.push_back(a);
  }
  auto stage2 = smallest_fixed_point(restrict(inst, rest, r.e_hat, r.f_hat)).set;
  for (std::size_t i : stage2) r.s_plus.push_back(rest[i]);
  return r;
}

TriggerInstance CellTriggerInstance::to_dense() const {
  TriggerInstance t;
  t.n = cell_of.size();
  t.e = threshold;
  t.f.resize(t.n);
  t.M.assign(t.n * t.n, 0.0);
  for (std::size_t a = 0; a < t.n; ++a) t.f[a] = scale * static_cast<double>(base[cell_of[a]]);
  for (std::size_t b = 0; b < t.n; ++b)
    for (const auto& en : rows[b])
      for (std::size_t a = 0; a < t.n; ++a)
        if (cell_of[a] == en.cell) t.M[b * t.n + a] += scale * static_cast<double>(en.count);
  return t;
}

CellFixedPoint smallest_fixed_point(const CellTriggerInstance& inst) {
  const std::size_t n = inst.cell_of.size();
  if (inst.threshold.size() != n || inst.rows.size() != n || inst.base.size() != inst.cells)
    throw std::invalid_argument("CellTriggerInstance: size mismatch");
  // Labels of each cell, in increasing threshold order.
  std::vector<std::vector<std::size_t>> by_cell(inst.cells);
  for (std::size_t a = 0; a < n; ++a) by_cell.at(inst.cell_of[a]).push_back(a);
  for (auto& v : by_cell)
    std::sort(v.begin(), v.end(), [&](std::size_t x, std::size_t y) {
      return inst.threshold[x] < inst.threshold[y] || (inst.threshold[x] == inst.threshold[y] && x < y);
    });
  std::vector<std::size_t> next(inst.cells, 0);
  CellFixedPoint r;
  r.occupation = inst.base;
  std::vector<char> hit(n, 0);
  std::vector<std::uint32_t> dirty;
  for (std::uint32_t c = 0; c < inst.cells; ++c)
    if (inst.base[c] > 0) dirty.push_back(c);
  while (!dirty.empty()) {
    const std::uint32_t c = dirty.back();
    dirty.pop_back();
    const double level = inst.scale * static_cast<double>(r.occupation[c]);
    auto& labels = by_cell[c];
    while (next[c] < labels.size() && level > inst.threshold[labels[next[c]]]) {
      const std::size_t a = labels[next[c]++];
      hit[a] = 1;
      for (const auto& en : inst.rows[a]) {
        r.occupation.at(en.cell) += en.count;
        dirty.push_back(en.cell);
      }
    }
  }
  for (std::size_t a = 0; a < n; ++a)
    if (hit[a]) r.set.push_back(a);
  return r;
}

}  // namespace rdphase::trigger
