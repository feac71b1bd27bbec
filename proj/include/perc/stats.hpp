#pragma once

#include <cstddef>
#include <span>

namespace perc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for `successes` out of `trials` at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

// Weighted least squares y = a + b x. Weights must be positive; the slope
// standard error is scaled by the weighted residual variance.
LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w);

double median(std::span<const double> values);

// Upper tail P[Poisson(mean) > k].
double poisson_upper_tail(double mean, std::size_t k);
// Smallest K with P[Poisson(mean) > K] < tol.
std::size_t poisson_truncation(double mean, double tol);

}  // namespace perc
