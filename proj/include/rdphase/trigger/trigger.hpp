#pragma once
#include <cstddef>
#include <cstdint>
#include <vector>

namespace rdphase::trigger {

// Sorted, duplicate-free label list.
using LabelSet = std::vector<std::size_t>;

struct TriggerInstance {
  std::size_t n = 0;
  std::vector<double> e, f;
  std::vector<double> M;  // row-major: M[b * n + a] = M(b, a)

  double m(std::size_t b, std::size_t a) const { return M[b * n + a]; }
  void validate() const;
};

struct TwoStageSplit {
  std::vector<double> f_minus, f_plus;
  std::vector<double> M_minus, M_plus;
};

struct FixedPointResult {
  LabelSet set;
  std::vector<LabelSet> trace;  // T^0(empty), T^1(empty), ...
  std::size_t iterations = 0;
};

struct TwoStageResult {
  LabelSet s_minus, s_plus;
  std::vector<double> e_hat, f_hat;  // indexed by label; meaningful only off s_minus
};

LabelSet map_T(const TriggerInstance& inst, const LabelSet& B);
FixedPointResult smallest_fixed_point(const TriggerInstance& inst);
// Iterates T from B; converges to S whenever B is a subset of S.
LabelSet iterate_from(const TriggerInstance& inst, const LabelSet& B, std::size_t max_steps);
TwoStageResult two_stage(const TriggerInstance& inst, const TwoStageSplit& split);

// Exhaustive search over all subsets; refuses n > 20.
LabelSet brute_force_smallest_fixed_point(const TriggerInstance& inst);

TriggerInstance restrict(const TriggerInstance& inst, const LabelSet& keep,
                         const std::vector<double>& e, const std::vector<double>& f);

// Sparse cell-structured instance used by the nutrient simulator. Occupation is kept as
// integer counts so that accumulation is exact and order-independent. Label b's
// component contributes rows[b] (cell, count) pairs; label a at cell_of[a] is triggered
// when scale * (base[cell] + sum of triggered rows at that cell) > threshold[a].
struct CellTriggerInstance {
  struct Entry {
    std::uint32_t cell;
    std::uint64_t count;
  };
  std::size_t cells = 0;
  double scale = 1.0;
  std::vector<std::uint32_t> cell_of;
  std::vector<double> threshold;
  std::vector<std::uint64_t> base;
  std::vector<std::vector<Entry>> rows;

  TriggerInstance to_dense() const;
};

struct CellFixedPoint {
  LabelSet set;
  std::vector<std::uint64_t> occupation;  // final per-cell counts
};

CellFixedPoint smallest_fixed_point(const CellTriggerInstance& inst);

}  // namespace rdphase::trigger
