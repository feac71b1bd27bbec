#include "perc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "perc/error.hpp"

namespace perc {

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size()) throw ParameterError("weighted_linear_fit: size mismatch");
  if (x.size() < 2) throw ParameterError("weighted_linear_fit: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] > 0)) throw ParameterError("weighted_linear_fit: weights must be positive");
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw ParameterError("weighted_linear_fit: degenerate abscissae");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += w[i] * r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  }
  return fit;
}

double median(std::span<const double> values) {
  if (values.empty()) throw ParameterError("median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

namespace {
double log_pmf(double mean, std::size_t k) {
  if (mean == 0.0) return k == 0 ? 0.0 : -INFINITY;
  double kk = static_cast<double>(k);
  return -mean + kk * std::log(mean) - std::lgamma(kk + 1.0);
}
}  // namespace

double poisson_upper_tail(double mean, std::size_t k) {
  if (mean < 0) throw ParameterError("poisson_upper_tail: negative mean");
  if (mean == 0.0) return 0.0;
  if (static_cast<double>(k) < mean) {
    double cdf = 0;
    for (std::size_t j = 0; j <= k; ++j) cdf += std::exp(log_pmf(mean, j));
    return std::max(0.0, 1.0 - cdf);
  }
  double tail = 0;
  for (std::size_t j = k + 1;; ++j) {
    double term = std::exp(log_pmf(mean, j));
    tail += term;
    if (term < tail * 1e-17 || term == 0.0) break;
  }
  return tail;
}

std::size_t poisson_truncation(double mean, double tol) {
  if (!(tol > 0)) throw ParameterError("truncation tolerance must be positive");
  if (mean == 0.0) return 0;
  auto k = static_cast<std::size_t>(std::ceil(mean));
  for (;; ++k) {
    // P[N > k] <= pmf(k+1) / (1 - mean/(k+2)) once k + 2 > mean.
    double ratio = mean / static_cast<double>(k + 2);
    if (ratio >= 1.0) continue;
    double bound = std::exp(log_pmf(mean, k + 1)) / (1.0 - ratio);
    if (bound < tol) return k;
  }
}

}  // namespace perc
