#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "goodhart/constants.hpp"
#include "goodhart/error.hpp"
#include "goodhart/quadrature.hpp"
#include "oracle.hpp"

using namespace goodhart;

TEST(Quadrature, PolynomialIsExact) {
  const double v = integrate_scalar([](double x) { return x * x; }, 0.0, 1.0);
  EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Quadrature, MatchesBoostOnOscillatoryIntegrand) {
  auto f = [](double x) { return std::sin(10.0 * x) * std::exp(-x); };
  const double ours = integrate_scalar(f, 0.0, 5.0);
  const double ref = oracle::smooth(f, 0.0, 5.0);
  EXPECT_NEAR(ours, ref, 1e-12);
}

TEST(Quadrature, EndpointSingularityWithGrading) {
  // Integrable 1/sqrt singularity at 0.
  auto f = [](double x) { return 1.0 / std::sqrt(x); };
  std::vector<double> br{0.0};
  for (double h = 0x1p-40; h < 1.0; h *= 2.0) br.push_back(h);
  br.push_back(1.0);
  const auto r = integrate<1>([&](double x) { return Vec<1>{f(x)}; }, std::span<const double>(br));
  EXPECT_NEAR(r.value[0], 2.0, 1e-9);
}

TEST(Quadrature, VectorComponentsShareOneSubdivision) {
  auto f = [](double x) { return Vec<3>{std::exp(-x * x), x * std::exp(-x * x), x * x * std::exp(-x * x)}; };
  const auto r = integrate<3>(f, -10.0, 10.0);
  EXPECT_NEAR(r.value[0], std::sqrt(tau / 2.0), 1e-12);
  EXPECT_NEAR(r.value[1], 0.0, 1e-12);
  EXPECT_NEAR(r.value[2], std::sqrt(tau / 2.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.l1[1], 1.0, 1e-12);  // integral of |x| e^{-x^2}
}

TEST(Quadrature, DiscontinuityAtBreakpointIsResolved) {
  auto f = [](double x) { return Vec<1>{x < 0.3 ? 1.0 : 2.0}; };
  const std::vector<double> br{0.0, 0.3, 1.0};
  const auto r = integrate<1>(f, std::span<const double>(br));
  EXPECT_NEAR(r.value[0], 0.3 + 1.4, 1e-14);
}

TEST(Quadrature, BudgetExhaustionThrows) {
  QuadOptions opt;
  opt.max_intervals = 3;
  opt.rel_tol = 1e-15;
  EXPECT_THROW(integrate_scalar([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, opt), QuadratureFailure);
}

TEST(Quadrature, ReversedOrDegenerateInterval) {
  EXPECT_NEAR(integrate_scalar([](double) { return 1.0; }, 2.0, 2.0), 0.0, 0.0);
}
