#pragma once
#include <cstddef>
#include <vector>

namespace rdphase {

// Welford accumulator; merge is the Chan et al. pairwise update.
class RunningStats {
 public:
  void push(double x);
  void merge(const RunningStats& o);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double stddev() const;
  double standard_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Interval {
  double low;
  double high;
};

Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

double normal_cdf(double x);
double normal_quantile(double p);

struct KsResult {
  double statistic;
  double p_value;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic distribution (Stephens correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
// One-sided: H1 is that a is stochastically larger than b (sup_x F_b(x) - F_a(x) large).
KsResult ks_one_sided_greater(std::vector<double> a, std::vector<double> b);

}  // namespace rdphase
