#include <doctest.h>

#include <cmath>
#include <vector>

#include "jnnts/error.hpp"
#include "jnnts/truncnorm.hpp"
#include "support.hpp"

using namespace jnnts;

namespace {

// Reference CDF of N(m, v) truncated to [lo, hi] via erfc.
struct TruncCdf {
  double m, v, lo, hi;
  double phi(double x) const { return 0.5 * std::erfc(-(x - m) / std::sqrt(2.0 * v)); }
  double upper(double x) const { return 0.5 * std::erfc((x - m) / std::sqrt(2.0 * v)); }
  double operator()(double x) const {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    // Right of the mean the survival function keeps its precision.
    if (lo > m) return (upper(lo) - upper(x)) / (upper(lo) - upper(hi));
    return (phi(x) - phi(lo)) / (phi(hi) - phi(lo));
  }
};

}  // namespace

TEST_SUITE("truncnorm") {
  TEST_CASE("log normal cdf") {
    for (double x : {-5.0, -1.0, 0.0, 0.5, 3.0}) CHECK(std::exp(log_normal_cdf(x)) == doctest::Approx(normal_cdf(x)));
    // Mills-ratio leading term deep in the tail.
    const double x = -60.0;
    const double asym = -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * M_PI);
    CHECK(log_normal_cdf(x) == doctest::Approx(asym).epsilon(1e-3));
    CHECK(std::isfinite(log_normal_cdf(-1e3)));
    CHECK(log_normal_interval(1.0, 1.0) == -kInf);
    CHECK(std::exp(log_normal_interval(-1.0, 1.0)) == doctest::Approx(normal_cdf(1.0) - normal_cdf(-1.0)));
    CHECK(std::exp(log_normal_interval(30.0, kInf)) >= 0.0);
    CHECK(std::isfinite(log_normal_interval(30.0, kInf)));
  }

  TEST_CASE("truncated normal draws match the analytic cdf") {
    Rng rng(17);
    struct Case {
      double m, v, lo, hi;
    };
    const Case cases[] = {{0, 1, -kInf, -1.5}, {0, 1, -0.3, 0.3}, {2, 0.5, -kInf, -4}, {-1, 2, 0.5, kInf},
                          {0, 1, 8, kInf},     {0, 4, -1, 6},    {5, 1, -1, 1}};
    for (const auto& c : cases) {
      std::vector<double> draws;
      for (int i = 0; i < 20000; ++i) {
        const double x = sample_truncated_normal(rng, c.m, c.v, c.lo, c.hi);
        REQUIRE(x >= c.lo);
        REQUIRE(x <= c.hi);
        draws.push_back(x);
      }
      // 1.63 / sqrt(n) is the 1% Kolmogorov critical value.
      CHECK(testing::ks_distance(draws, TruncCdf{c.m, c.v, c.lo, c.hi}) < 1.63 / std::sqrt(20000.0));
    }
  }

  TEST_CASE("mixture weights") {
    ThresholdMixture m{0.3, 1.2, 0.7, -3.0, -1.0};
    const auto w = m.weights();
    CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-12));

    // Equal likelihoods: weights are the prior tail masses.
    ThresholdMixture flat{0.3, 1.2, 0.7, 0.0, 0.0};
    const auto f = flat.weights();
    const double s = std::sqrt(1.2);
    CHECK(f[0] == doctest::Approx(normal_cdf((-0.7 - 0.3) / s)));
    CHECK(f[2] == doctest::Approx(1.0 - normal_cdf((0.7 - 0.3) / s)));

    // Huge likelihood gaps stay normalized instead of underflowing.
    ThresholdMixture far{0.0, 1.0, 0.5, -1e6, 0.0};
    const auto g = far.weights();
    CHECK(g[1] == doctest::Approx(1.0));
    CHECK(g[0] + g[1] + g[2] == doctest::Approx(1.0).epsilon(1e-12));

    // lambda = 0 leaves no middle piece.
    ThresholdMixture zero{0.2, 1.0, 0.0, -2.0, 5.0};
    CHECK(zero.weights()[1] == 0.0);
  }

  TEST_CASE("flat mixture samples the plain normal") {
    Rng rng(8);
    ThresholdMixture m{0.4, 0.8, 0.6, 1.5, 1.5};
    std::vector<double> draws;
    for (int i = 0; i < 20000; ++i) draws.push_back(m.sample(rng));
    CHECK(testing::ks_distance(draws, TruncCdf{0.4, 0.8, -kInf, kInf}) < 1.63 / std::sqrt(20000.0));
  }

  TEST_CASE("mixture samples match the mixture cdf") {
    Rng rng(81);
    for (const auto& m : {ThresholdMixture{0.4, 0.8, 0.6, -2.0, 0.0}, ThresholdMixture{-2.0, 0.3, 1.0, 0.0, 3.0},
                          ThresholdMixture{0.0, 5.0, 0.1, 0.5, -0.5}}) {
      std::vector<double> draws;
      for (int i = 0; i < 20000; ++i) draws.push_back(m.sample(rng));
      CHECK(testing::ks_distance(draws, [&](double x) { return m.cdf(x); }) < 1.63 / std::sqrt(20000.0));
    }
  }

  TEST_CASE("inverse gamma moments") {
    Rng rng(12);
    const double a = 5.0, b = 3.0;
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_inverse_gamma(rng, a, b);
      REQUIRE(x > 0.0);
      sum += x;
    }
    const double mean = b / (a - 1.0);
    const double sd = mean / std::sqrt(a - 2.0);
    CHECK(std::abs(sum / n - mean) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
  }
}
