#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace parasim {

/// A Monte Carlo estimate with its standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Sample mean and standard error (sample standard deviation / sqrt(n)).
Estimate estimate_mean(std::span<const double> values);

/// z-score of the difference between two independent estimates. When both
/// standard errors vanish the score is 0 for equal means and +-inf otherwise.
double z_score(const Estimate& lhs, const Estimate& rhs, double exact_tol = 1e-12);

/// z-score of an estimate against a known constant.
double z_score(const Estimate& est, double target, double exact_tol = 1e-12);

/// Total-variation distance between two probability vectors (padded with 0).
double total_variation(std::span<const double> p, std::span<const double> q);

/// Upper quantile of the standard normal: returns z with P(N > z) = alpha.
double normal_upper_quantile(double alpha);

/// One-sided test that the column means decrease: for consecutive columns the
/// paired difference col[j] - col[j+1] must exceed the Bonferroni-adjusted
/// critical value. `rows[i][j]` is replicate i, column j.
struct TrendTest {
  std::vector<double> z;      ///< per consecutive pair
  double critical = 0.0;
  bool decreasing = false;
};
TrendTest decreasing_trend(const std::vector<std::vector<double>>& rows, double alpha,
                           std::size_t bonferroni_m);

}  // namespace parasim
