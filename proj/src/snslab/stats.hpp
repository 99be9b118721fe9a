#pragma once

#include <span>
#include <vector>

namespace snslab {

double median(std::vector<double> values);
/// Median absolute deviation about the median (unscaled).
double median_abs_deviation(const std::vector<double>& values);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Weighted least squares y = a + b x. Empty weights mean unit weights.
LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> weights = {});
/// Fit of log(y) against log(x).
LineFit fit_loglog(std::span<const double> x, std::span<const double> y, std::span<const double> weights = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson_interval(int successes, int trials, double z = 1.96);

}  // namespace snslab
