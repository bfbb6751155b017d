#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "closed_forms.hpp"
#include "error.hpp"
#include "monte_carlo.hpp"
#include "scenario.hpp"
#include "stats.hpp"
#include "truncation.hpp"

#include "json.hpp"

namespace goodhart {

// ---------------------------------------------------------------------------
// Regime classification

enum class Regime { WeakGoodhart, StrongGoodhart, NoGoodhart };

inline std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::WeakGoodhart: return "weak_goodhart";
    case Regime::StrongGoodhart: return "strong_goodhart";
    case Regime::NoGoodhart: return "no_goodhart";
  }
  return "unknown";
}

struct ClassifyOptions {
  // A negative excursion of rho below this marks the strong regime.
  double strong_threshold = -0.05;
  // The sweep counts as non-degrading if its last rho is within this margin
  // of its largest rho.
  double no_goodhart_margin = 0.01;
  // The sweep has to reach at least this deep.
  double required_alpha = 1e-6;
  // E_alpha[G] over the last three rows varying by less than this is a plateau.
  double plateau_tolerance = 1e-6;
};

struct RegimeEvidence {
  double min_rho = 0.0;
  double alpha_at_min_rho = 0.0;
  std::optional<double> zero_crossing_alpha;
  std::optional<double> plateau_e_g;
};

struct RegimeVerdict {
  std::string scenario_id;
  Regime classification = Regime::WeakGoodhart;
  RegimeEvidence evidence;
};

// Short human-readable scenario label, e.g. "uniform01+power_law(beta=3.5,eta=0.0159)".
inline std::string scenario_id(const Scenario& s) {
  auto describe = [](const Distribution& d) {
    std::string out(family_name(d.family));
    char buf[96];
    switch (d.family) {
      case Family::Exponential: std::snprintf(buf, sizeof buf, "(rate=%.6g)", d.rate); out += buf; break;
      case Family::Normal: std::snprintf(buf, sizeof buf, "(sigma=%.6g)", d.scale); out += buf; break;
      case Family::PowerLaw: std::snprintf(buf, sizeof buf, "(beta=%.6g,eta=%.6g)", d.shape, d.scale); out += buf; break;
      case Family::LogNormal: std::snprintf(buf, sizeof buf, "(eta=%.6g)", d.scale); out += buf; break;
      default: break;
    }
    return out;
  };
  return describe(s.goal) + "+" + describe(s.discrepancy);
}

// Rows are taken in the table's order; the classification only needs the
// alpha and rho_alpha columns plus e_g for the plateau evidence.
inline RegimeVerdict classify(const SweepTable& t, const ClassifyOptions& opt = {}) {
  if (t.rows.empty()) throw InsufficientSweep("classify: empty sweep");
  double min_alpha = t.rows.front().alpha;
  for (const auto& r : t.rows) min_alpha = std::min(min_alpha, r.alpha);
  if (!(min_alpha <= opt.required_alpha * (1.0 + 1e-12)))
    throw InsufficientSweep("classify: sweep must reach alpha <= " + std::to_string(opt.required_alpha));

  std::vector<TruncatedStats> rows = t.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.alpha > b.alpha; });

  RegimeVerdict v;
  v.scenario_id = scenario_id(t.scenario);
  RegimeEvidence& e = v.evidence;
  e.min_rho = rows.front().rho_alpha;
  e.alpha_at_min_rho = rows.front().alpha;
  double max_rho = rows.front().rho_alpha;
  for (const auto& r : rows) {
    if (r.rho_alpha < e.min_rho) {
      e.min_rho = r.rho_alpha;
      e.alpha_at_min_rho = r.alpha;
    }
    max_rho = std::max(max_rho, r.rho_alpha);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = rows[i - 1].rho_alpha;
    const double b = rows[i].rho_alpha;
    if (a > 0.0 && b <= 0.0) {
      const double la = std::log(rows[i - 1].alpha);
      const double lb = std::log(rows[i].alpha);
      e.zero_crossing_alpha = std::exp(la + (lb - la) * a / (a - b));
      break;
    }
  }
  if (rows.size() >= 3) {
    const auto tail = rows.end() - 3;
    const auto [lo, hi] = std::minmax_element(tail, rows.end(), [](const auto& a, const auto& b) { return a.e_g < b.e_g; });
    if (hi->e_g - lo->e_g < opt.plateau_tolerance) e.plateau_e_g = rows.back().e_g;
  }

  if (e.min_rho < opt.strong_threshold) v.classification = Regime::StrongGoodhart;
  else if (rows.back().rho_alpha >= max_rho - opt.no_goodhart_margin) v.classification = Regime::NoGoodhart;
  else v.classification = Regime::WeakGoodhart;
  return v;
}

// ---------------------------------------------------------------------------
// Cross-method validation

struct MatrixScenario {
  std::string id;
  Scenario scenario;
};

// The five reference scenarios.
inline std::vector<MatrixScenario> reference_scenarios() {
  return {
      {"uniform-exp", uniform_exponential(1.0 / 256.0)},
      {"normal-normal", normal_normal(1.0 / 256.0)},
      {"uniform-power", uniform_power(3.5, 1.0 / 256.0)},
      {"power-power", power_power(7.0, 3.5, 1.0 / 256.0)},
      {"uniform-lognormal", uniform_lognormal(0.25)},
  };
}

inline std::vector<double> reference_alphas() { return {0.5, 0.1, 0.01, 1e-3}; }

struct McBudget {
  std::uint64_t n = 0;  // 0 skips the Monte Carlo leg
  std::uint64_t seed = 42;
  int bootstrap = 200;
  unsigned threads = 0;
};

struct ValidationOptions {
  double closed_form_rel = 1e-6;
  double mc_pass_fraction = 0.99;
};

enum class ClosedFormStatus { Compared, NotApplicable, Unavailable };

inline std::string_view closed_form_status_name(ClosedFormStatus s) {
  switch (s) {
    case ClosedFormStatus::Compared: return "compared";
    case ClosedFormStatus::NotApplicable: return "not_applicable";
    case ClosedFormStatus::Unavailable: return "unavailable";
  }
  return "unknown";
}

struct FieldCheck {
  std::string field;
  double reference = 0.0;  // quadrature
  double value = 0.0;      // closed form
  double rel_error = 0.0;
  bool pass = true;
};

struct ValidationEntry {
  std::string scenario;
  double alpha = 0.0;
  TruncatedStats quadrature;
  ClosedFormStatus closed_form_status = ClosedFormStatus::Unavailable;
  std::optional<TruncatedStats> closed_form;
  std::vector<FieldCheck> closed_form_checks;
  std::optional<TruncatedStats> monte_carlo;
  std::optional<ComparisonReport> mc_comparison;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  std::size_t mc_fields = 0;
  std::size_t mc_fields_passed = 0;
  std::size_t closed_form_fields = 0;
  std::size_t closed_form_failures = 0;
  double mc_pass_fraction_required = 0.99;

  double mc_pass_fraction() const {
    return mc_fields == 0 ? 1.0 : static_cast<double>(mc_fields_passed) / static_cast<double>(mc_fields);
  }
  bool closed_forms_pass() const { return closed_form_failures == 0; }
  bool mc_pass() const { return mc_pass_fraction() >= mc_pass_fraction_required; }
  bool pass() const { return closed_forms_pass() && mc_pass(); }
};

namespace detail {

// Closed-form record at the quadrature threshold, where the family pair has
// one. Returns Unavailable for pairs without an exact form and NotApplicable
// when m lies outside the form's regime.
inline std::pair<ClosedFormStatus, std::optional<TruncatedStats>> closed_form_at(const Scenario& s, double m) {
  switch (kind_of(s)) {
    case ScenarioKind::UniformExponential: {
      if (!std::isfinite(m)) return {ClosedFormStatus::NotApplicable, std::nullopt};
      const double eps = 1.0 / (s.discrepancy.rate * sqrt12);
      const UniformExpResult u = uniform_exp_stats(eps, m);
      TruncatedStats t;
      t.alpha = u.alpha;
      t.m_alpha = m;
      t.e_g = u.e_g;
      t.method = Method::ClosedForm;
      return {ClosedFormStatus::Compared, t};
    }
    case ScenarioKind::UniformPower: {
      if (!std::isfinite(m)) return {ClosedFormStatus::NotApplicable, std::nullopt};
      auto t = uniform_power_closed_stats(s.discrepancy.shape, s.discrepancy.scale, m);
      return {t ? ClosedFormStatus::Compared : ClosedFormStatus::NotApplicable, t};
    }
    case ScenarioKind::PowerPower: {
      if (!std::isfinite(m)) return {ClosedFormStatus::NotApplicable, std::nullopt};
      auto t = power_power_closed_stats(s.discrepancy.shape, s.discrepancy.scale, s.goal.shape, m);
      return {t ? ClosedFormStatus::Compared : ClosedFormStatus::NotApplicable, t};
    }
    default: return {ClosedFormStatus::Unavailable, std::nullopt};
  }
}

inline FieldCheck check_field(const char* name, double reference, double value, double rel) {
  FieldCheck c;
  c.field = name;
  c.reference = reference;
  c.value = value;
  const double scale = std::max(std::abs(reference), std::abs(value));
  c.rel_error = scale > 0.0 ? std::abs(reference - value) / scale : 0.0;
  c.pass = c.rel_error <= rel;
  return c;
}

}  // namespace detail

// Quadrature, closed forms and Monte Carlo on every (scenario, alpha) pair.
// The closed form is evaluated at the quadrature threshold, so its alpha
// column checks the root solve and its moments check the integration.
inline ValidationReport validation_matrix(const std::vector<MatrixScenario>& scenarios, const std::vector<double>& alphas,
                                          const McBudget& budget = {}, const ValidationOptions& opt = {}) {
  ValidationReport rep;
  rep.mc_pass_fraction_required = opt.mc_pass_fraction;
  for (const auto& sc : scenarios) {
    std::vector<ValidationEntry> block;
    for (double a : alphas) {
      ValidationEntry e;
      e.scenario = sc.id;
      e.alpha = a;
      e.quadrature = truncated_stats(sc.scenario, a);
      auto [status, cf] = detail::closed_form_at(sc.scenario, e.quadrature.m_alpha);
      e.closed_form_status = status;
      e.closed_form = cf;
      if (cf) {
        const TruncatedStats& q = e.quadrature;
        const double rel = opt.closed_form_rel;
        e.closed_form_checks.push_back(detail::check_field("alpha", q.alpha, cf->alpha, rel));
        e.closed_form_checks.push_back(detail::check_field("e_g", q.e_g, cf->e_g, rel));
        if (kind_of(sc.scenario) != ScenarioKind::UniformExponential) {
          e.closed_form_checks.push_back(detail::check_field("e_xi", q.e_xi, cf->e_xi, rel));
          e.closed_form_checks.push_back(detail::check_field("var_g", q.var_g, cf->var_g, rel));
          e.closed_form_checks.push_back(detail::check_field("var_xi", q.var_xi, cf->var_xi, rel));
          e.closed_form_checks.push_back(detail::check_field("cov_gxi", q.cov_gxi, cf->cov_gxi, rel));
          e.closed_form_checks.push_back(detail::check_field("rho_alpha", q.rho_alpha, cf->rho_alpha, rel));
        }
        for (const auto& c : e.closed_form_checks) {
          ++rep.closed_form_fields;
          if (!c.pass) ++rep.closed_form_failures;
        }
      }
      block.push_back(std::move(e));
    }
    if (budget.n > 0) {
      McConfig cfg;
      cfg.n = budget.n;
      cfg.seed = budget.seed;
      cfg.alphas = alphas;
      cfg.bootstrap = budget.bootstrap;
      cfg.threads = budget.threads;
      const McResult mc = run(sc.scenario, cfg);
      const CompareOptions copt = compare_options_for(sc.scenario);
      for (std::size_t i = 0; i < block.size(); ++i) {
        block[i].monte_carlo = mc.rows[i];
        block[i].mc_comparison = compare(block[i].quadrature, mc.rows[i], copt);
        for (const auto& f : block[i].mc_comparison->fields) {
          ++rep.mc_fields;
          if (!f.flagged) ++rep.mc_fields_passed;
        }
      }
    }
    for (auto& e : block) rep.entries.push_back(std::move(e));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON rendering

inline nlohmann::json to_json(const TruncatedStats& t) {
  nlohmann::json j;
  j["alpha"] = t.alpha;
  j["m_alpha"] = std::isfinite(t.m_alpha) ? nlohmann::json(t.m_alpha) : nlohmann::json("-inf");
  j["e_g"] = t.e_g;
  j["e_xi"] = t.e_xi;
  j["var_g"] = t.var_g;
  j["var_xi"] = t.var_xi;
  j["cov_gxi"] = t.cov_gxi;
  j["rho_alpha"] = t.rho_alpha;
  j["method"] = std::string(method_name(t.method));
  if (t.std_errors) {
    const StdErrors& s = *t.std_errors;
    j["std_errors"] = {{"m_alpha", s.m_alpha}, {"e_g", s.e_g},       {"e_xi", s.e_xi},     {"e_g2", s.e_g2},
                       {"e_xi2", s.e_xi2},     {"e_gxi", s.e_gxi},   {"var_g", s.var_g},   {"var_xi", s.var_xi},
                       {"cov_gxi", s.cov_gxi}, {"rho_alpha", s.rho_alpha}};
  }
  return j;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["alpha"] = r.alpha;
  j["heavy_tail"] = r.heavy_tail;
  if (!r.note.empty()) j["note"] = r.note;
  j["flagged"] = r.flagged_count();
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : r.fields)
    fields.push_back({{"field", f.field},
                      {"analytic", f.analytic},
                      {"empirical", f.empirical},
                      {"std_error", f.std_error},
                      {"z", std::isfinite(f.z) ? nlohmann::json(f.z) : nlohmann::json("inf")},
                      {"band", f.band},
                      {"pass", !f.flagged}});
  j["fields"] = fields;
  return j;
}

inline nlohmann::json to_json(const RegimeVerdict& v) {
  nlohmann::json j;
  j["scenario"] = v.scenario_id;
  j["classification"] = std::string(regime_name(v.classification));
  j["min_rho"] = v.evidence.min_rho;
  j["alpha_at_min_rho"] = v.evidence.alpha_at_min_rho;
  j["zero_crossing_alpha"] = v.evidence.zero_crossing_alpha ? nlohmann::json(*v.evidence.zero_crossing_alpha) : nlohmann::json();
  j["plateau_e_g"] = v.evidence.plateau_e_g ? nlohmann::json(*v.evidence.plateau_e_g) : nlohmann::json();
  return j;
}

inline nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json j;
  j["pass"] = r.pass();
  j["closed_form_fields"] = r.closed_form_fields;
  j["closed_form_failures"] = r.closed_form_failures;
  j["mc_fields"] = r.mc_fields;
  j["mc_fields_passed"] = r.mc_fields_passed;
  j["mc_pass_fraction"] = r.mc_pass_fraction();
  j["mc_pass_fraction_required"] = r.mc_pass_fraction_required;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json row;
    row["scenario"] = e.scenario;
    row["alpha"] = e.alpha;
    row["quadrature"] = to_json(e.quadrature);
    row["closed_form_status"] = std::string(closed_form_status_name(e.closed_form_status));
    if (!e.closed_form_checks.empty()) {
      nlohmann::json checks = nlohmann::json::array();
      for (const auto& c : e.closed_form_checks)
        checks.push_back({{"field", c.field}, {"quadrature", c.reference}, {"closed_form", c.value},
                          {"rel_error", c.rel_error}, {"pass", c.pass}});
      row["closed_form_checks"] = checks;
    }
    if (e.monte_carlo) row["monte_carlo"] = to_json(*e.monte_carlo);
    if (e.mc_comparison) row["mc_comparison"] = to_json(*e.mc_comparison);
    rows.push_back(row);
  }
  j["entries"] = rows;
  return j;
}

}  // namespace goodhart
