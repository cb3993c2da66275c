#include "mfphase/stats.hpp"

#include "mfphase/errors.hpp"
#include "mfphase/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mfp {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw StatisticsError("linear fit needs >= 2 paired points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw StatisticsError("linear fit with constant abscissa");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

double mean(const std::vector<double>& x) {
  if (x.empty()) throw StatisticsError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) throw StatisticsError("variance needs >= 2 samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw StatisticsError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= x.size()) return x.back();
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * x[i] + w * x[i + 1];
}

NormalityTest jarque_bera(const std::vector<double>& x) {
  if (x.size() < 3) throw StatisticsError("normality test needs >= 3 samples");
  const double m = mean(x);
  const double n = static_cast<double>(x.size());
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double c = v - m;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  NormalityTest t;
  if (m2 == 0.0) return t;
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2) - 3.0;
  t.statistic = n / 6.0 * (skew * skew + 0.25 * kurt * kurt);
  t.p_value = std::exp(-0.5 * t.statistic);
  return t;
}

std::vector<int> bootstrap_indices(std::uint64_t seed, int resample, int n) {
  const NormalStream u(seed, rng_domain::bootstrap);
  std::vector<int> idx(n);
  for (int j = 0; j < n; ++j) {
    const double r = u.uniform(static_cast<std::uint32_t>(resample), 0, static_cast<std::uint32_t>(j));
    idx[j] = std::min(n - 1, static_cast<int>((1.0 - r) * n));  // r in (0,1] -> [0, n)
  }
  return idx;
}

}  // namespace mfp
