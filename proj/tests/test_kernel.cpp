#include "osfde/error.hpp"
#include "osfde/kernel_wsgd.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace osfde;

namespace {

std::complex<double> truncated_series(const WsgdKernel& k, double theta) {
  std::complex<double> sum = 0.0;
  for (std::size_t j = 0; j < k.w.size(); ++j)
    sum += k.w[j] * std::exp(std::complex<double>(0.0, (static_cast<double>(j) - 1.0) * theta));
  return sum;
}

}  // namespace

TEST(FractionalOrder, RejectsOutsideOpenInterval) {
  EXPECT_THROW(FractionalOrder(1.0), InvalidArgument);
  EXPECT_THROW(FractionalOrder(2.0), InvalidArgument);
  EXPECT_THROW(FractionalOrder(0.5), InvalidArgument);
  EXPECT_NO_THROW(FractionalOrder(1.0001));
}

TEST(GlWeights, ZeroLengthIsOne) {
  const auto g = gl_weights(FractionalOrder(1.7), 0);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
}

TEST(GlWeights, FrozenValues) {
  const auto g = gl_weights(FractionalOrder(1.5), 3);
  const double expect[] = {1.0, -1.5, 0.375, 0.0625};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(g[k], expect[k], 1e-15);

  const auto h = gl_weights(FractionalOrder(1.2), 2);
  EXPECT_NEAR(h[0], 1.0, 1e-15);
  EXPECT_NEAR(h[1], -1.2, 1e-15);
  EXPECT_NEAR(h[2], 0.12, 1e-15);
}

TEST(GlWeights, MatchBinomialProducts) {
  for (double a : {1.1, 1.5, 1.9}) {
    const auto g = gl_weights(FractionalOrder(a), 20);
    for (int k = 0; k <= 20; ++k) {
      // (-1)^k binom(a, k) = prod_{j<k} (j - a) / (j + 1)
      double binom = 1.0;
      for (int j = 0; j < k; ++j) binom *= (j - a) / (j + 1.0);
      EXPECT_NEAR(g[k], binom, 1e-14) << "alpha=" << a << " k=" << k;
    }
  }
}

TEST(WsgdWeights, FrozenValues) {
  const auto k1 = wsgd_weights(FractionalOrder(1.5), 1);
  ASSERT_EQ(k1.size(), 2u);
  EXPECT_NEAR(k1.w[0], 0.75, 1e-15);
  EXPECT_NEAR(k1.w[1], -0.875, 1e-15);

  const auto k3 = wsgd_weights(FractionalOrder(1.5), 3);
  EXPECT_NEAR(k3.w[2], -0.09375, 1e-15);
  EXPECT_NEAR(k3.w[3], 0.140625, 1e-15);

  for (double a : {1.05, 1.33, 1.99}) EXPECT_DOUBLE_EQ(wsgd_weights(FractionalOrder(a), 1).w[0], a / 2.0);
  EXPECT_THROW(wsgd_weights(FractionalOrder(1.5), 0), InvalidArgument);
}

TEST(WsgdWeights, PartialSumsDecay) {
  for (int i = 1; i <= 9; ++i) {
    const double a = 1.0 + 0.1 * i;
    const auto k = wsgd_weights(FractionalOrder(a), 10000);
    double half = 0.0;
    double full = 0.0;
    for (std::size_t j = 0; j < k.w.size(); ++j) {
      full += k.w[j];
      if (j <= 5000) half += k.w[j];
    }
    EXPECT_LT(std::abs(full), std::abs(half)) << "alpha=" << a;
    EXPECT_LT(std::abs(full), 1e-3) << "alpha=" << a;
  }
}

TEST(Symbol, ClosedFormValues) {
  EXPECT_NEAR(std::abs(symbol(FractionalOrder(1.5), 0.0)), 0.0, 1e-15);
  const auto at_pi = symbol(FractionalOrder(1.5), std::numbers::pi);
  EXPECT_NEAR(at_pi.real(), -std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(at_pi.imag(), 0.0, 1e-12);
}

TEST(Symbol, MatchesTruncatedSeries) {
  const auto k = wsgd_weights(FractionalOrder(1.2), 100000);
  EXPECT_LT(std::abs(symbol(FractionalOrder(1.2), 0.7) - truncated_series(k, 0.7)), 1e-8);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(0.05, std::numbers::pi);
  std::bernoulli_distribution sign;
  for (double a : {1.2, 1.5, 1.8}) {
    const auto ka = wsgd_weights(FractionalOrder(a), 100000);
    for (int t = 0; t < 100; ++t) {
      const double theta = sign(rng) ? mag(rng) : -mag(rng);
      EXPECT_LT(std::abs(symbol(FractionalOrder(a), theta) - truncated_series(ka, theta)), 1e-8)
          << "alpha=" << a << " theta=" << theta;
    }
  }
}

TEST(SymbolRatio, MatchesCosine) {
  EXPECT_NEAR(symbol_ratio_min(FractionalOrder(1.5), 100000), 0.70710678, 1e-6);
  EXPECT_NEAR(symbol_ratio_min(FractionalOrder(1.2), 100000), 0.309017, 1e-6);
  EXPECT_NEAR(symbol_ratio_min(FractionalOrder(1.8), 100000), 0.951057, 1e-6);
  for (int i = 1; i <= 9; ++i) {
    const FractionalOrder a(1.0 + 0.1 * i);
    EXPECT_NEAR(symbol_ratio_min(a, 100000), symbol_ratio_exact(a), 1e-6);
    EXPECT_NEAR(symbol_ratio_exact(a), std::abs(std::cos(a.value() * std::numbers::pi / 2.0)), 1e-15);
  }
}
