#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "json.hpp"

#include "constants.hpp"
#include "distributions.hpp"
#include "error.hpp"

namespace goodhart {

struct CalibrationExtras {
  std::optional<double> beta;   // discrepancy decay (PowerLaw)
  std::optional<double> gamma;  // goal decay when the goal is itself a PowerLaw
};

// Discrepancy law for a nominal noise-to-signal ratio epsilon, using the
// published parameterizations: lambda = 1/(eps sqrt12), sigma = eps,
// eta = (beta-2) sqrt((beta-3)/(beta-1)) eps sqrt12 against a uniform goal,
// eta = ((gamma-2)/(beta-2)) sqrt((beta-1)(gamma-3)/((gamma-1)(beta-3))) eps
// against a power-law goal, and eta^2 = ln((1 + sqrt(1 + 4 eps^2))/2) for the
// log-normal.
inline Distribution calibrate(Family family, double epsilon, const CalibrationExtras& extra = {}) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("calibrate: epsilon must be positive and finite");
  switch (family) {
    case Family::Exponential: return exponential(1.0 / (epsilon * sqrt12));
    case Family::Normal: return normal(epsilon);
    case Family::PowerLaw: {
      if (!extra.beta) throw DomainError("calibrate: power_law requires beta");
      const double b = *extra.beta;
      if (!(b > 3.0)) throw DomainError("calibrate: beta must exceed 3");
      if (extra.gamma) {
        const double g = *extra.gamma;
        if (!(g > 3.0)) throw DomainError("calibrate: gamma must exceed 3");
        const double eta =
            (g - 2.0) / (b - 2.0) * std::sqrt((b - 1.0) * (g - 3.0) / ((g - 1.0) * (b - 3.0))) * epsilon;
        return power_law(b, eta);
      }
      return power_law(b, (b - 2.0) * std::sqrt((b - 3.0) / (b - 1.0)) * epsilon * sqrt12);
    }
    case Family::LogNormal: {
      const double eta2 = std::log((1.0 + std::sqrt(1.0 + 4.0 * epsilon * epsilon)) / 2.0);
      return log_normal(std::sqrt(eta2));
    }
    case Family::Uniform01:
    case Family::NegExpGoal: break;
  }
  throw DomainError("calibrate: family '" + std::string(family_name(family)) +
                    "' has no epsilon calibration");
}

enum class ScenarioKind { UniformExponential, NormalNormal, UniformPower, PowerPower, UniformLogNormal, Custom };

struct Scenario {
  Distribution goal;
  Distribution discrepancy;
  double epsilon = 0.0;  // nominal noise-to-signal ratio, kept for reporting

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// sqrt(Var(xi)/Var(G)) from closed-form variances.
inline double noise_to_signal(const Scenario& s) {
  return std::sqrt(variance(s.discrepancy) / variance(s.goal));
}

inline ScenarioKind kind_of(const Scenario& s) {
  const Family g = s.goal.family;
  const Family x = s.discrepancy.family;
  if (g == Family::Uniform01 && x == Family::Exponential) return ScenarioKind::UniformExponential;
  if (g == Family::Normal && x == Family::Normal) return ScenarioKind::NormalNormal;
  if (g == Family::Uniform01 && x == Family::PowerLaw) return ScenarioKind::UniformPower;
  if (g == Family::PowerLaw && s.goal.scale == 1.0 && x == Family::PowerLaw) return ScenarioKind::PowerPower;
  if (g == Family::Uniform01 && x == Family::LogNormal) return ScenarioKind::UniformLogNormal;
  return ScenarioKind::Custom;
}

inline Scenario make_scenario(const Distribution& goal, const Distribution& discrepancy,
                              std::optional<double> epsilon = std::nullopt) {
  if (goal.family == Family::PowerLaw && goal.shape <= 3.0)
    throw DomainError("scenario: goal needs a finite variance");
  Scenario s{goal, discrepancy, 0.0};
  s.epsilon = epsilon ? *epsilon : noise_to_signal(s);
  if (!(s.epsilon > 0.0)) throw DomainError("scenario: epsilon must be positive");
  return s;
}

inline Scenario uniform_exponential(double eps) {
  return make_scenario(uniform01(), calibrate(Family::Exponential, eps), eps);
}

inline Scenario normal_normal(double eps) {
  return make_scenario(normal(1.0), calibrate(Family::Normal, eps), eps);
}

inline Scenario uniform_power(double beta, double eps) {
  return make_scenario(uniform01(), calibrate(Family::PowerLaw, eps, {beta, std::nullopt}), eps);
}

inline Scenario power_power(double gamma, double beta, double eps) {
  return make_scenario(power_law(gamma, 1.0), calibrate(Family::PowerLaw, eps, {beta, gamma}), eps);
}

inline Scenario uniform_lognormal(double eps) {
  return make_scenario(uniform01(), calibrate(Family::LogNormal, eps), eps);
}

// Scenario by short name: uniform-exp, normal-normal, uniform-power,
// power-power, uniform-lognormal.
inline Scenario named_scenario(const std::string& name, double eps, std::optional<double> beta = std::nullopt,
                               std::optional<double> gamma = std::nullopt) {
  if (name == "uniform-exp") return uniform_exponential(eps);
  if (name == "normal-normal") return normal_normal(eps);
  if (name == "uniform-lognormal") return uniform_lognormal(eps);
  if (name == "uniform-power") {
    if (!beta) throw ConfigError("scenario uniform-power requires --beta");
    return uniform_power(*beta, eps);
  }
  if (name == "power-power") {
    if (!beta || !gamma) throw ConfigError("scenario power-power requires --beta and --gamma");
    return power_power(*gamma, *beta, eps);
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Distribution& d) {
  nlohmann::json j;
  j["family"] = std::string(family_name(d.family));
  switch (d.family) {
    case Family::Exponential: j["lambda"] = d.rate; break;
    case Family::Normal: j["sigma"] = d.scale; break;
    case Family::PowerLaw:
      j["beta"] = d.shape;
      j["eta"] = d.scale;
      break;
    case Family::LogNormal: j["eta"] = d.scale; break;
    case Family::Uniform01:
    case Family::NegExpGoal: break;
  }
  return j;
}

namespace detail {

inline double json_number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unexpected field '" + it.key() + "'");
  }
}

}  // namespace detail

// Parses a distribution object. `goal` supplies the paired goal when the
// object is epsilon-calibrated (needed for the power-law/power-law form).
inline Distribution distribution_from_json(const nlohmann::json& j, const Distribution* goal = nullptr,
                                           double* epsilon_out = nullptr) {
  if (!j.is_object()) throw ConfigError("distribution must be a JSON object");
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError("distribution needs a 'family' string");
  const Family f = parse_family(j["family"].get<std::string>());
  const char* scale_key = nullptr;
  switch (f) {
    case Family::Exponential: scale_key = j.contains("rate") ? "rate" : "lambda"; break;
    case Family::Normal: scale_key = "sigma"; break;
    case Family::PowerLaw:
    case Family::LogNormal: scale_key = "eta"; break;
    case Family::Uniform01:
    case Family::NegExpGoal: break;
  }
  if (!scale_key) {
    detail::reject_unknown_keys(j, {"family"});
    return f == Family::Uniform01 ? uniform01() : neg_exp_goal();
  }
  detail::reject_unknown_keys(j, {"family", "lambda", "rate", "sigma", "beta", "eta", "epsilon"});
  const bool has_scale = j.contains(scale_key);
  const bool has_eps = j.contains("epsilon");
  if (has_scale && has_eps)
    throw ConfigError("distribution: give exactly one of '" + std::string(scale_key) + "' or 'epsilon'");
  std::optional<double> beta;
  if (j.contains("beta")) beta = detail::json_number(j, "beta");
  if (f == Family::PowerLaw && !beta) throw ConfigError("power_law needs 'beta'");
  try {
    if (has_eps) {
      if (!goal) throw ConfigError("epsilon calibration is only valid for the discrepancy");
      const double eps = detail::json_number(j, "epsilon");
      if (epsilon_out) *epsilon_out = eps;
      CalibrationExtras extra{beta, std::nullopt};
      if (f == Family::PowerLaw && goal->family == Family::PowerLaw) extra.gamma = goal->shape;
      return calibrate(f, eps, extra);
    }
    if (!has_scale) {
      // Goals default to unit scale; a discrepancy must be explicit.
      if (goal) throw ConfigError("distribution: give exactly one of '" + std::string(scale_key) + "' or 'epsilon'");
      if (f == Family::Normal) return normal(1.0);
      if (f == Family::PowerLaw) return power_law(*beta, 1.0);
      throw ConfigError("goal distribution needs '" + std::string(scale_key) + "'");
    }
    const double v = detail::json_number(j, scale_key);
    switch (f) {
      case Family::Exponential: return exponential(v);
      case Family::Normal: return normal(v);
      case Family::PowerLaw: return power_law(*beta, v);
      case Family::LogNormal: return log_normal(v);
      default: break;
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unsupported distribution");
}

inline nlohmann::json to_json(const Scenario& s) {
  return nlohmann::json{{"goal", to_json(s.goal)}, {"discrepancy", to_json(s.discrepancy)}, {"epsilon", s.epsilon}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("goal") || !j.contains("discrepancy"))
    throw ConfigError("scenario needs 'goal' and 'discrepancy' objects");
  detail::reject_unknown_keys(j, {"goal", "discrepancy", "epsilon", "name"});
  const Distribution goal = distribution_from_json(j["goal"]);
  double eps_cal = 0.0;
  const Distribution disc = distribution_from_json(j["discrepancy"], &goal, &eps_cal);
  std::optional<double> eps;
  if (j.contains("epsilon")) eps = detail::json_number(j, "epsilon");
  else if (eps_cal > 0.0) eps = eps_cal;
  try {
    return make_scenario(goal, disc, eps);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace goodhart
