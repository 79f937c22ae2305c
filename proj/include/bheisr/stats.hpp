#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bheisr/error.hpp"

namespace bheisr {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Population standard deviation.
inline double stddev(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided asymptotic Kolmogorov tail, truncated at 100 terms.
inline double kolmogorov_p(double lambda) {
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double K = 0;
  double p = 0;
};

// One-sample KS test of samples against N(mu, sigma).
inline KsResult ks_normality(std::vector<double> samples, double mu, double sigma) {
  if (!(sigma > 0)) throw PreconditionError("ks_normality: sigma must be > 0");
  if (samples.empty()) throw PreconditionError("ks_normality: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double k = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf((samples[i] - mu) / sigma);
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    k = std::max({k, hi - f, f - lo});
  }
  const double rn = std::sqrt(n);
  const double lambda = (rn + 0.12 + 0.11 / rn) * k;
  return {k, kolmogorov_p(lambda)};
}

// Third standardized moment, population form.
inline double skewness(const std::vector<double>& x) {
  if (x.size() < 3) throw PreconditionError("skewness: need at least 3 samples");
  const double m = mean(x), s = stddev(x);
  if (!(s > 0)) throw PreconditionError("skewness: zero variance");
  double acc = 0;
  for (double v : x) {
    const double z = (v - m) / s;
    acc += z * z * z;
  }
  return acc / static_cast<double>(x.size());
}

// Kendall tau-a of a series against its index.
inline double kendall_tau(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  long long s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (y[j] > y[i]) - (y[j] < y[i]);
  return static_cast<double>(s) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace bheisr
