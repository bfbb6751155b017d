#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "goodhart/scenario.hpp"
#include "goodhart/stats.hpp"

using namespace goodhart;
using nlohmann::json;

TEST(Calibrate, ExponentialUnitRate) {
  EXPECT_NEAR(calibrate(Family::Exponential, 1.0 / std::sqrt(12.0)).rate, 1.0, 1e-15);
}

TEST(Calibrate, PowerLawAgainstUniformGoal) {
  const Distribution d = calibrate(Family::PowerLaw, 0.1, {5.0, std::nullopt});
  EXPECT_NEAR(d.scale, 3.0 * std::sqrt(0.5) * 0.1 * std::sqrt(12.0), 1e-15);
  EXPECT_NEAR(d.scale, 0.7348, 1e-4);
  // The variance this scale produces, from the closed-form power-law variance.
  const double var = 4.0 * d.scale * d.scale / (9.0 * 2.0);
  EXPECT_NEAR(variance(d), var, 1e-15);
}

TEST(Calibrate, LogNormalVarianceIsEpsilonSquared) {
  const Distribution d = calibrate(Family::LogNormal, 0.25);
  const double e2 = d.scale * d.scale;
  EXPECT_NEAR(e2, std::log((1.0 + std::sqrt(1.25)) / 2.0), 1e-15);
  EXPECT_NEAR(std::exp(2.0 * e2) - std::exp(e2), 0.0625, 1e-14);
}

TEST(Calibrate, PowerLawAgainstPowerLawGoal) {
  const double b = 3.5, g = 7.0, eps = 0.01;
  const Distribution d = calibrate(Family::PowerLaw, eps, {b, g});
  const double expect = (g - 2.0) / (b - 2.0) * std::sqrt((b - 1.0) * (g - 3.0) / ((g - 1.0) * (b - 3.0))) * eps;
  EXPECT_NEAR(d.scale, expect, 1e-15);
}

TEST(Calibrate, RejectsInvalidParameters) {
  EXPECT_THROW(calibrate(Family::PowerLaw, 0.1, {2.5, std::nullopt}), DomainError);
  EXPECT_THROW(calibrate(Family::PowerLaw, 0.1, {5.0, 2.0}), DomainError);
  EXPECT_THROW(calibrate(Family::PowerLaw, 0.1), DomainError);
  EXPECT_THROW(calibrate(Family::Exponential, 0.0), DomainError);
  EXPECT_THROW(calibrate(Family::Uniform01, 0.1), DomainError);
}

// Only the normal pair calibrates Var(xi)/Var(G) to exactly eps^2; the other
// printed calibrations give fixed multiples, which noise_to_signal reports.
TEST(NoiseToSignal, EffectiveRatios) {
  const double eps = 0.05;
  EXPECT_NEAR(noise_to_signal(normal_normal(eps)), eps, 1e-15);
  EXPECT_NEAR(noise_to_signal(uniform_exponential(eps)), 12.0 * eps, 1e-14);
  EXPECT_NEAR(noise_to_signal(uniform_power(5.0, eps)), 12.0 * eps, 1e-13);
  EXPECT_NEAR(noise_to_signal(uniform_lognormal(eps)), std::sqrt(12.0) * eps, 1e-13);
  EXPECT_NEAR(normal_normal(eps).epsilon, eps, 0.0);
  EXPECT_NEAR(uniform_power(5.0, eps).epsilon, eps, 0.0);
}

TEST(Scenario, KindDetection) {
  EXPECT_EQ(kind_of(uniform_exponential(0.1)), ScenarioKind::UniformExponential);
  EXPECT_EQ(kind_of(normal_normal(0.1)), ScenarioKind::NormalNormal);
  EXPECT_EQ(kind_of(uniform_power(3.5, 0.1)), ScenarioKind::UniformPower);
  EXPECT_EQ(kind_of(power_power(7.0, 3.5, 0.1)), ScenarioKind::PowerPower);
  EXPECT_EQ(kind_of(uniform_lognormal(0.1)), ScenarioKind::UniformLogNormal);
  EXPECT_EQ(kind_of(make_scenario(neg_exp_goal(), normal(1.0))), ScenarioKind::Custom);
}

TEST(Scenario, NamedScenarios) {
  EXPECT_EQ(named_scenario("uniform-exp", 0.1), uniform_exponential(0.1));
  EXPECT_EQ(named_scenario("power-power", 0.1, 3.5, 7.0), power_power(7.0, 3.5, 0.1));
  EXPECT_THROW(named_scenario("uniform-power", 0.1), ConfigError);
  EXPECT_THROW(named_scenario("power-power", 0.1, 3.5), ConfigError);
  EXPECT_THROW(named_scenario("cauchy", 0.1), ConfigError);
}

TEST(Json, RoundTripIsIdentity) {
  for (const Scenario& s : {uniform_exponential(1.0 / 256), normal_normal(0.3), uniform_power(3.5, 0.01),
                            power_power(5.0, 6.0, 0.02), uniform_lognormal(0.25)}) {
    const json j = to_json(s);
    const Scenario back = scenario_from_json(json::parse(j.dump()));
    EXPECT_EQ(back, s) << j.dump();
  }
}

TEST(Json, EpsilonCalibratedForm) {
  const json j = json::parse(R"({"goal": {"family": "uniform01"},
                                 "discrepancy": {"family": "power_law", "beta": 5.0, "epsilon": 0.1}})");
  const Scenario s = scenario_from_json(j);
  EXPECT_EQ(s.discrepancy, calibrate(Family::PowerLaw, 0.1, {5.0, std::nullopt}));
  EXPECT_DOUBLE_EQ(s.epsilon, 0.1);
}

TEST(Json, ExplicitScaleForm) {
  const json j = json::parse(R"({"goal": {"family": "uniform01"},
                                 "discrepancy": {"family": "power_law", "beta": 5.0, "eta": 0.73}})");
  EXPECT_EQ(scenario_from_json(j).discrepancy, power_law(5.0, 0.73));
}

TEST(Json, MalformedConfigsAreConfigErrors) {
  const char* bad[] = {
      R"({"goal": {"family": "uniform01"}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "power_law", "beta": 5, "eta": 1, "epsilon": 0.1}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "power_law", "beta": 5}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "power_law", "eta": 1}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "power_law", "beta": 4, "eta": 1}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "exponential", "lambda": "x"}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "gamma", "epsilon": 0.1}})",
      R"({"goal": {"family": "uniform01"}, "discrepancy": {"family": "normal", "sigma": 1}, "extra": 1})",
      R"({"goal": {"family": "uniform01", "sigma": 2}, "discrepancy": {"family": "normal", "sigma": 1}})",
      R"({"goal": {"family": "normal", "epsilon": 0.1}, "discrepancy": {"family": "normal", "sigma": 1}})",
  };
  for (const char* text : bad) EXPECT_THROW(scenario_from_json(json::parse(text)), ConfigError) << text;
}

TEST(Json, ShippedConfigsMatchNamedScenarios) {
  auto load = [](const std::string& file) {
    std::ifstream f(std::string(GOODHART_CONFIG_DIR) + "/" + file);
    std::stringstream ss;
    ss << f.rdbuf();
    return scenario_from_json(json::parse(ss.str()));
  };
  EXPECT_EQ(load("uniform_exp.json"), uniform_exponential(0.00390625));
  EXPECT_EQ(load("normal_normal.json"), normal_normal(0.00390625));
  EXPECT_EQ(load("uniform_power.json"), uniform_power(3.5, 0.00390625));
  EXPECT_EQ(load("power_power.json"), power_power(7.0, 3.5, 0.00390625));
  EXPECT_EQ(load("uniform_lognormal.json"), uniform_lognormal(0.25));
}

TEST(Stats, AssembleDerivesSecondMoments) {
  const TruncatedStats t = assemble_stats(0.1, 2.0, 0.5, 0.2, 0.04, 0.09, -0.01, Method::Quadrature);
  EXPECT_DOUBLE_EQ(t.e_g2, 0.04 + 0.25);
  EXPECT_DOUBLE_EQ(t.e_xi2, 0.09 + 0.04);
  EXPECT_DOUBLE_EQ(t.e_gxi, -0.01 + 0.1);
  EXPECT_DOUBLE_EQ(t.cov_gm, 0.03);
  EXPECT_DOUBLE_EQ(t.var_m, 0.11);
  EXPECT_NEAR(t.rho_alpha, 0.03 / std::sqrt(0.04 * 0.11), 1e-15);
  EXPECT_EQ(method_name(Method::MonteCarlo), "monte_carlo");
}
