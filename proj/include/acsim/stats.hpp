#pragma once

#include <span>

namespace acsim {

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);
// Standard error of the mean.
double std_error(std::span<const double> xs);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
};

// Welch's two-sample t-test. Identical constant samples give p = 1; distinct
// constant samples give p = 0.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace acsim
