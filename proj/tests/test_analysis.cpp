#include <gtest/gtest.h>

#include <cmath>

#include "goodhart/analysis.hpp"

using namespace goodhart;

namespace {

SweepTable default_sweep(const Scenario& s, int points = 64) { return sweep(s, AlphaLogGrid{1.0, 1e-9, points}); }

SweepTable synthetic(const std::vector<std::pair<double, double>>& alpha_rho) {
  SweepTable t;
  t.scenario = normal_normal(0.1);
  for (auto [a, r] : alpha_rho) {
    TruncatedStats row;
    row.alpha = a;
    row.rho_alpha = r;
    row.e_g = 0.5;
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

TEST(Classify, ReferenceVerdicts) {
  const RegimeVerdict weak = classify(default_sweep(uniform_exponential(1.0 / 256)));
  EXPECT_EQ(weak.classification, Regime::WeakGoodhart);
  ASSERT_TRUE(weak.evidence.plateau_e_g.has_value());
  EXPECT_NEAR(*weak.evidence.plateau_e_g, 1.0 - std::sqrt(12.0) / 256, 1e-4);

  const RegimeVerdict strong = classify(default_sweep(uniform_power(3.5, 1.0 / 256)));
  EXPECT_EQ(strong.classification, Regime::StrongGoodhart);
  EXPECT_LT(strong.evidence.min_rho, -0.3);
  ASSERT_TRUE(strong.evidence.zero_crossing_alpha.has_value());
  EXPECT_GT(*strong.evidence.zero_crossing_alpha, strong.evidence.alpha_at_min_rho);

  const RegimeVerdict none = classify(default_sweep(power_power(5.0, 6.0, 1.0 / 256)));
  EXPECT_EQ(none.classification, Regime::NoGoodhart);
  EXPECT_FALSE(none.evidence.zero_crossing_alpha.has_value());
}

TEST(Classify, InvariantUnderGridRefinement) {
  const std::vector<Scenario> refs{uniform_exponential(1.0 / 256), normal_normal(1.0 / 256),
                                   uniform_power(3.5, 1.0 / 256), power_power(7.0, 3.5, 1.0 / 256),
                                   uniform_lognormal(0.25),       power_power(5.0, 6.0, 1.0 / 256)};
  for (const auto& s : refs) {
    const Regime coarse = classify(default_sweep(s, 19)).classification;
    EXPECT_EQ(classify(default_sweep(s, 64)).classification, coarse) << scenario_id(s);
    EXPECT_EQ(classify(default_sweep(s, 127)).classification, coarse) << scenario_id(s);
  }
}

TEST(Classify, ThresholdsAreConfigurable) {
  const SweepTable t = synthetic({{1.0, 0.9}, {1e-3, 0.1}, {1e-6, -0.03}});
  EXPECT_EQ(classify(t).classification, Regime::WeakGoodhart);
  ClassifyOptions o;
  o.strong_threshold = -0.02;
  EXPECT_EQ(classify(t, o).classification, Regime::StrongGoodhart);
}

TEST(Classify, ZeroCrossingInterpolatedInLogAlpha) {
  const SweepTable t = synthetic({{1.0, 0.5}, {1e-4, 0.1}, {1e-6, -0.1}});
  const RegimeVerdict v = classify(t);
  ASSERT_TRUE(v.evidence.zero_crossing_alpha.has_value());
  EXPECT_NEAR(std::log10(*v.evidence.zero_crossing_alpha), -5.0, 1e-12);
  EXPECT_EQ(v.classification, Regime::StrongGoodhart);
  EXPECT_DOUBLE_EQ(v.evidence.alpha_at_min_rho, 1e-6);
}

TEST(Classify, RowOrderDoesNotMatter) {
  const SweepTable a = synthetic({{1.0, 0.5}, {1e-3, 0.2}, {1e-7, 0.01}});
  const SweepTable b = synthetic({{1e-7, 0.01}, {1.0, 0.5}, {1e-3, 0.2}});
  EXPECT_EQ(classify(a).classification, classify(b).classification);
  EXPECT_EQ(classify(a).evidence.min_rho, classify(b).evidence.min_rho);
}

TEST(Classify, InsufficientSweep) {
  EXPECT_THROW(classify(SweepTable{}), InsufficientSweep);
  EXPECT_THROW(classify(sweep(normal_normal(0.1), AlphaLogGrid{1.0, 1e-4, 8})), InsufficientSweep);
}

TEST(Classify, RegimeNames) {
  EXPECT_EQ(regime_name(Regime::WeakGoodhart), "weak_goodhart");
  EXPECT_EQ(regime_name(Regime::StrongGoodhart), "strong_goodhart");
  EXPECT_EQ(regime_name(Regime::NoGoodhart), "no_goodhart");
}

TEST(Classify, JsonCarriesEvidence) {
  const auto j = to_json(classify(default_sweep(uniform_power(3.5, 1.0 / 256), 32)));
  EXPECT_EQ(j["classification"], "strong_goodhart");
  EXPECT_TRUE(j["zero_crossing_alpha"].is_number());
  EXPECT_LT(j["min_rho"].get<double>(), -0.05);
  EXPECT_NE(j["scenario"].get<std::string>().find("power_law"), std::string::npos);
}

TEST(ReferenceMatrix, FiveScenarios) {
  const auto sc = reference_scenarios();
  ASSERT_EQ(sc.size(), 5u);
  EXPECT_EQ(kind_of(sc[0].scenario), ScenarioKind::UniformExponential);
  EXPECT_EQ(kind_of(sc[1].scenario), ScenarioKind::NormalNormal);
  EXPECT_EQ(kind_of(sc[2].scenario), ScenarioKind::UniformPower);
  EXPECT_EQ(kind_of(sc[3].scenario), ScenarioKind::PowerPower);
  EXPECT_EQ(kind_of(sc[4].scenario), ScenarioKind::UniformLogNormal);
}

TEST(ValidationMatrix, SingleEntry) {
  const auto sc = reference_scenarios();
  const ValidationReport r = validation_matrix({sc[2]}, {1e-3});
  ASSERT_EQ(r.entries.size(), 1u);
  const auto& e = r.entries[0];
  EXPECT_EQ(e.closed_form_status, ClosedFormStatus::Compared);
  EXPECT_EQ(e.closed_form_checks.size(), 7u);
  for (const auto& c : e.closed_form_checks) EXPECT_LE(c.rel_error, 1e-6) << c.field;
  EXPECT_FALSE(e.monte_carlo.has_value());
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.mc_fields, 0u);
}

TEST(ValidationMatrix, ClosedFormRegimeGuards) {
  const auto sc = reference_scenarios();
  const ValidationReport r = validation_matrix({sc[1], sc[2], sc[3]}, {1.0, 0.01});
  ASSERT_EQ(r.entries.size(), 6u);
  EXPECT_EQ(r.entries[0].closed_form_status, ClosedFormStatus::Unavailable);
  EXPECT_EQ(r.entries[1].closed_form_status, ClosedFormStatus::Unavailable);
  EXPECT_EQ(r.entries[2].closed_form_status, ClosedFormStatus::NotApplicable);
  EXPECT_EQ(r.entries[3].closed_form_status, ClosedFormStatus::Compared);
  EXPECT_EQ(r.entries[4].closed_form_status, ClosedFormStatus::NotApplicable);
  EXPECT_EQ(r.entries[5].closed_form_status, ClosedFormStatus::Compared);
  EXPECT_TRUE(r.closed_forms_pass());
}

TEST(ValidationMatrix, ClosedFormsAgreeAcrossReferenceAlphas) {
  std::vector<double> alphas{0.5, 0.1, 0.01, 1e-3, 1e-6, 1e-9};
  const ValidationReport r = validation_matrix(reference_scenarios(), alphas);
  EXPECT_EQ(r.entries.size(), 30u);
  EXPECT_GT(r.closed_form_fields, 60u);
  EXPECT_EQ(r.closed_form_failures, 0u);
}

TEST(ValidationMatrix, MonteCarloLegAndJson) {
  const auto sc = reference_scenarios();
  McBudget b;
  b.n = 200000;
  b.bootstrap = 40;
  b.threads = 2;
  const ValidationReport r = validation_matrix({sc[0], sc[1]}, {0.5, 0.01}, b);
  EXPECT_EQ(r.mc_fields, 40u);
  EXPECT_GE(r.mc_pass_fraction(), 0.95);
  for (const auto& e : r.entries) {
    ASSERT_TRUE(e.monte_carlo.has_value());
    ASSERT_TRUE(e.mc_comparison.has_value());
    EXPECT_EQ(e.monte_carlo->method, Method::MonteCarlo);
  }
  const auto j = to_json(r);
  EXPECT_EQ(j["entries"].size(), 4u);
  EXPECT_TRUE(j["entries"][0].contains("mc_comparison"));
  EXPECT_EQ(j["entries"][0]["closed_form_status"], "compared");
  EXPECT_EQ(j["pass"].get<bool>(), r.pass());
}

TEST(ValidationReport, PassLogic) {
  ValidationReport r;
  EXPECT_TRUE(r.pass());
  r.mc_fields = 100;
  r.mc_fields_passed = 98;
  EXPECT_FALSE(r.mc_pass());
  r.mc_fields_passed = 99;
  EXPECT_TRUE(r.mc_pass());
  r.closed_form_failures = 1;
  EXPECT_FALSE(r.pass());
}
