#include "parasim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace parasim {

Estimate estimate_mean(std::span<const double> values) {
  Estimate est;
  est.n = values.size();
  if (values.empty()) return est;
  // Welford
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  est.mean = mean;
  if (k > 1) est.se = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
  // All-equal samples: report the exact common value.
  if (m2 == 0.0) est.mean = values.front();
  return est;
}

namespace {
double ratio_or_exact(double diff, double se, double scale, double exact_tol) {
  if (se > 0.0) return diff / se;
  if (std::abs(diff) <= exact_tol * std::max(1.0, scale)) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
}
}  // namespace

double z_score(const Estimate& lhs, const Estimate& rhs, double exact_tol) {
  const double se = std::hypot(lhs.se, rhs.se);
  return ratio_or_exact(lhs.mean - rhs.mean, se, std::abs(rhs.mean), exact_tol);
}

double z_score(const Estimate& est, double target, double exact_tol) {
  return ratio_or_exact(est.mean - target, est.se, std::abs(target), exact_tol);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  const std::size_t n = std::max(p.size(), q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    sum += std::abs(a - b);
  }
  return 0.5 * sum;
}

double normal_upper_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<>{}, alpha));
}

TrendTest decreasing_trend(const std::vector<std::vector<double>>& rows, double alpha,
                           std::size_t bonferroni_m) {
  TrendTest out;
  out.critical = normal_upper_quantile(alpha / static_cast<double>(std::max<std::size_t>(1, bonferroni_m)));
  if (rows.empty()) return out;
  const std::size_t cols = rows.front().size();
  out.decreasing = cols >= 2;
  std::vector<double> diffs(rows.size());
  for (std::size_t j = 0; j + 1 < cols; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) diffs[i] = rows[i][j] - rows[i][j + 1];
    const Estimate d = estimate_mean(diffs);
    const double z = ratio_or_exact(d.mean, d.se, 1.0, 0.0);
    out.z.push_back(z);
    if (!(z > out.critical)) out.decreasing = false;
  }
  return out;
}

}  // namespace parasim
