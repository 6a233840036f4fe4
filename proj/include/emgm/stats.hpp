#pragma once

#include <span>
#include <vector>

namespace emgm {

/// Ordinary least squares y ≈ intercept + slope·x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  ///< NaN with fewer than three points
  double r_squared = 0.0;
};

[[nodiscard]] LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// fit_line on (log x, log y), natural logs; every value must be positive.
[[nodiscard]] LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

[[nodiscard]] double mean(std::span<const double> v);
[[nodiscard]] double median(std::vector<double> v);

}  // namespace emgm
