#include "parasim/rng.hpp"

#include <cmath>

namespace parasim {

double DriverStream::exponential() noexcept { return -std::log(uniform()); }

std::uint64_t DriverStream::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  if (mean < 30.0) {
    double u = uniform();
    double term = std::exp(-mean);
    double cdf = term;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      term *= mean / static_cast<double>(k);
      cdf += term;
      // Guard against round-off leaving cdf just below u in the far tail.
      if (term < 1e-300 && k > mean) break;
    }
    return k;
  }
  return std::poisson_distribution<std::uint64_t>(mean)(*this);
}

}  // namespace parasim
