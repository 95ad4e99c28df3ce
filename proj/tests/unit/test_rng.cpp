#include <doctest.h>

#include <cmath>
#include <vector>

#include "parasim/rng.hpp"
#include "parasim/stats.hpp"

using namespace parasim;

TEST_CASE("stream replays bit for bit from its id") {
  DriverStream a(42, "flow", 3), b(StreamId{42, "flow", 3});
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
  CHECK(a.position() == b.position());
}

TEST_CASE("distinct ids give uncorrelated streams") {
  const std::vector<StreamId> ids = {{42, "flow", 3}, {42, "flow", 4}, {42, "spine", 3}, {43, "flow", 3}};
  const std::size_t n = 100'000;
  std::vector<std::vector<double>> u(ids.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    DriverStream s(ids[k]);
    for (auto& x : u[k]) x = s.uniform();
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      double c = 0;
      for (std::size_t t = 0; t < n; ++t) c += (u[i][t] - 0.5) * (u[j][t] - 0.5);
      c /= n / 12.0;  // correlation estimate, sd ~ 1/sqrt(n)
      CHECK(std::abs(c) < 4.0 / std::sqrt(double(n)));
    }
  }
}

TEST_CASE("uniform, normal, exponential and poisson draws have the right first moments") {
  DriverStream s(1, "moments", 0);
  const std::size_t n = 200'000;
  std::vector<double> u(n), z(n), e(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = s.uniform();
    REQUIRE(u[i] > 0.0);
    REQUIRE(u[i] < 1.0);
    z[i] = s.normal();
    e[i] = s.exponential();
    p[i] = double(s.poisson(3.5));
  }
  auto near = [](const std::vector<double>& v, double want) {
    const auto est = estimate_mean(v);
    return std::abs(est.mean - want) < 4 * est.se;
  };
  CHECK(near(u, 0.5));
  CHECK(near(z, 0.0));
  CHECK(near(e, 1.0));
  CHECK(near(p, 3.5));
}

TEST_CASE("stats helpers") {
  const std::vector<double> v = {1, 2, 3, 4};
  const auto e = estimate_mean(v);
  CHECK(e.mean == 2.5);
  CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(z_score(Estimate{1.0, 0.0, 10}, 1.0) == 0.0);
  const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
  CHECK(total_variation(p, q) == doctest::Approx(0.25));
  CHECK(normal_upper_quantile(0.025) == doctest::Approx(1.959964).epsilon(1e-6));
}
