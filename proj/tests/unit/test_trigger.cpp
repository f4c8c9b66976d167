#include <algorithm>
#include <random>

#include "doctest.h"
#include "rdphase/core/errors.hpp"
#include "rdphase/trigger/trigger.hpp"
#include "trigger_gen.hpp"

using namespace rdphase::trigger;

namespace {

TriggerInstance worked() {
  TriggerInstance t;
  t.n = 2;
  t.e = {0.5, 1.5};
  t.f = {1.0, 0.0};
  t.M = {0.0, 2.0, 0.0, 0.0};
  return t;
}

bool subset(const LabelSet& a, const LabelSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

}  // namespace

TEST_CASE("map_T worked instance") {
  auto t = worked();
  CHECK(map_T(t, {}) == LabelSet{0});
  CHECK(map_T(t, {0}) == LabelSet{0, 1});
  CHECK_THROWS_AS(map_T(t, {2}), std::invalid_argument);
  TriggerInstance z{3, {1, 1, 1}, {0, 0, 0}, std::vector<double>(9, 0.0)};
  CHECK(map_T(z, {0, 1, 2}).empty());
}

TEST_CASE("strict inequality at ties") {
  TriggerInstance t{1, {1.0}, {1.0}, {0.0}};
  CHECK(map_T(t, {}).empty());
}

TEST_CASE("smallest fixed point worked and trivial") {
  auto r = smallest_fixed_point(worked());
  CHECK(r.set == LabelSet{0, 1});
  CHECK(r.iterations == 2);
  CHECK(r.trace.size() == 3);
  TriggerInstance z{2, {0.5, 1.5}, {0, 0}, {0, 2, 0, 0}};
  CHECK(smallest_fixed_point(z).set.empty());
  TriggerInstance empty{0, {}, {}, {}};
  CHECK(smallest_fixed_point(empty).set.empty());
}

TEST_CASE("two_stage worked split") {
  auto t = worked();
  TwoStageSplit sp{{1, 0}, {0, 0}, {0, 0, 0, 0}, t.M};
  auto r = two_stage(t, sp);
  CHECK(r.s_minus == LabelSet{0});
  CHECK(r.e_hat[1] == 1.5);
  CHECK(r.f_hat[1] == 2.0);
  CHECK(r.s_plus == LabelSet{1});
  TwoStageSplit trivial{t.f, {0, 0}, t.M, {0, 0, 0, 0}};
  auto q = two_stage(t, trivial);
  CHECK(q.s_minus == LabelSet{0, 1});
  CHECK(q.s_plus.empty());
  TwoStageSplit bad{{1, 0}, {0, 1}, t.M, {0, 0, 0, 0}};
  CHECK_THROWS_AS(two_stage(t, bad), std::invalid_argument);
}

TEST_CASE("random instances: fixed point equals exhaustive search") {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 2000; ++i) {
    auto t = random_instance(gen, 12);
    auto r = smallest_fixed_point(t);
    CHECK(r.set == brute_force_smallest_fixed_point(t));
    CHECK(map_T(t, r.set) == r.set);
    CHECK(r.iterations <= t.n);
    for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(subset(r.trace[k - 1], r.trace[k]));
  }
}

TEST_CASE("random splits: union and disjointness") {
  std::mt19937_64 gen(77);
  for (int i = 0; i < 2000; ++i) {
    auto t = random_instance(gen, 10);
    auto sp = random_split(gen, t);
    auto r = two_stage(t, sp);
    LabelSet u;
    std::set_union(r.s_minus.begin(), r.s_minus.end(), r.s_plus.begin(), r.s_plus.end(), std::back_inserter(u));
    LabelSet inter;
    std::set_intersection(r.s_minus.begin(), r.s_minus.end(), r.s_plus.begin(), r.s_plus.end(),
                          std::back_inserter(inter));
    CHECK(u == smallest_fixed_point(t).set);
    CHECK(inter.empty());
  }
}

TEST_CASE("T is monotone and iterates from below S converge to S") {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 500; ++i) {
    auto t = random_instance(gen, 10);
    std::bernoulli_distribution coin(0.5);
    LabelSet b, bp;
    for (std::size_t a = 0; a < t.n; ++a) {
      const bool in_b = coin(gen);
      if (in_b) b.push_back(a);
      if (in_b || coin(gen)) bp.push_back(a);
    }
    CHECK(subset(map_T(t, b), map_T(t, bp)));
    auto s = smallest_fixed_point(t).set;
    LabelSet below;
    for (std::size_t a : s)
      if (coin(gen)) below.push_back(a);
    CHECK(iterate_from(t, below, t.n + 1) == s);
  }
}

TEST_CASE("monotone in data") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> k(0, 31);
  for (int i = 0; i < 500; ++i) {
    auto t = random_instance(gen, 10);
    if (t.n == 0) continue;
    auto bigger = t;
    std::uniform_int_distribution<std::size_t> pick(0, t.n - 1);
    bigger.f[pick(gen)] += k(gen) / 64.0;
    bigger.M[pick(gen) * t.n + pick(gen)] += k(gen) / 64.0;
    auto& e = bigger.e[pick(gen)];
    e = std::max(0.0, e - k(gen) / 64.0);
    CHECK(subset(smallest_fixed_point(t).set, smallest_fixed_point(bigger).set));
  }
}

TEST_CASE("cell-structured instance matches dense form") {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> cnt(0, 6);
  std::uniform_real_distribution<double> ex(0.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    CellTriggerInstance c;
    c.cells = 4;
    c.scale = 0.25;
    const std::size_t n = 1 + i % 11;
    c.base.resize(c.cells);
    for (auto& b : c.base) b = cnt(gen) / 3;
    for (std::size_t a = 0; a < n; ++a) {
      c.cell_of.push_back(static_cast<std::uint32_t>(a % c.cells));
      c.threshold.push_back(ex(gen));
      std::vector<CellTriggerInstance::Entry> row;
      for (std::uint32_t cell = 0; cell < c.cells; ++cell)
        if (int v = cnt(gen); v > 2) row.push_back({cell, static_cast<std::uint64_t>(v)});
      c.rows.push_back(row);
    }
    auto fast = smallest_fixed_point(c);
    CHECK(fast.set == smallest_fixed_point(c.to_dense()).set);
    CHECK(fast.set == brute_force_smallest_fixed_point(c.to_dense()));
  }
}

TEST_CASE("brute force guard") {
  TriggerInstance t{21, std::vector<double>(21, 1.0), std::vector<double>(21, 0.0), std::vector<double>(441, 0.0)};
  CHECK_THROWS_AS(brute_force_smallest_fixed_point(t), std::invalid_argument);
}
