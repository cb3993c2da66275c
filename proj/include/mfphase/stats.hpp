#pragma once

#include <cstdint>
#include <vector>

namespace mfp {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = slope x + intercept. Needs >= 2 distinct x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& x);
// Unbiased sample variance (n - 1 denominator).
double sample_variance(const std::vector<double>& x);
double quantile(std::vector<double> x, double q);  // linear interpolation between order stats

// Jarque-Bera statistic and its chi^2_2 p-value.
struct NormalityTest {
  double statistic = 0.0;
  double p_value = 1.0;
};
NormalityTest jarque_bera(const std::vector<double>& x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  bool overlaps(const Interval& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
};

// Resampled replica index lists: resample r draws n indices uniformly with replacement.
// Deterministic in (seed, r); independent of thread count.
std::vector<int> bootstrap_indices(std::uint64_t seed, int resample, int n);

}  // namespace mfp
