#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "constants.hpp"
#include "distributions.hpp"
#include "error.hpp"
#include "quadrature.hpp"
#include "scenario.hpp"
#include "stats.hpp"

namespace goodhart {

enum class PredictionKind { Exact, LeadingOrder, Limit };

struct AsymptoticPrediction {
  double value = 0.0;
  std::string validity;
  PredictionKind kind = PredictionKind::LeadingOrder;
  std::optional<double> m_alpha_expansion;
  bool outside_validity = false;
};

// eps = sqrt(rho^-2 - 1): the noise-to-signal ratio giving correlation rho.
inline double epsilon_from_correlation(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("epsilon_from_correlation: rho must lie in (0, 1)");
  return std::sqrt(1.0 / (rho * rho) - 1.0);
}

// ---------------------------------------------------------------------------
// Uniform goal, exponential discrepancy (lambda = 1/(eps sqrt12)).

struct UniformExpResult {
  double alpha = 1.0;
  double e_g = 0.5;
};

inline UniformExpResult uniform_exp_stats(double epsilon, double m) {
  if (!(epsilon > 0.0)) throw DomainError("uniform_exp_stats: epsilon must be positive");
  const double l = 1.0 / (epsilon * sqrt12);
  if (m <= 0.0) return {1.0, 0.5};
  if (m < 1.0) {
    const double em = std::expm1(-l * m);
    const double alpha = 1.0 - m - em / l;
    const double num = 0.5 * (1.0 - m * m) + m / l + em / (l * l);
    return {alpha, num / alpha};
  }
  const double one_minus = -std::expm1(-l);
  const double alpha = std::exp(-l * (m - 1.0)) * one_minus / l;
  const double e_g = (1.0 - 1.0 / l + std::exp(-l) / l) / one_minus;
  return {alpha, e_g};
}

// alpha = P[M >= 1], below which rho_alpha vanishes exactly.
inline double uniform_exp_plateau_threshold(double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("uniform_exp_plateau_threshold: epsilon must be positive");
  const double k = epsilon * sqrt12;
  return -k * std::expm1(-1.0 / k);
}

// ---------------------------------------------------------------------------
// Normal goal N(0,1), normal discrepancy N(0, eps^2).

inline AsymptoticPrediction normal_rho_asymptotic(double epsilon, double alpha) {
  if (!(epsilon > 0.0)) throw DomainError("normal_rho_asymptotic: epsilon must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("normal_rho_asymptotic: alpha must lie in (0, 1)");
  const double l = std::log(1.0 / alpha);
  const double radicand = 2.0 * l - std::log(2.0 * l) - std::log(tau);
  if (!(radicand > 0.0)) throw DomainError("normal_rho_asymptotic: radicand is not positive at this alpha");
  AsymptoticPrediction p;
  p.value = 1.0 / (epsilon * std::sqrt(radicand));
  p.kind = PredictionKind::LeadingOrder;
  p.validity = "alpha -> 0 with alpha > exp(-1/(2 eps^2))";
  p.m_alpha_expansion = std::sqrt(1.0 + epsilon * epsilon) * std::sqrt(radicand);
  p.outside_validity = alpha <= std::exp(-1.0 / (2.0 * epsilon * epsilon));
  return p;
}

// ---------------------------------------------------------------------------
// Uniform goal, power-law discrepancy (beta, eta).

struct UniformPowerMoments {
  double alpha = 1.0;
  double e_xi = 0.0;
  double e_xi2 = 0.0;
  double e_g = 0.0;
  double e_g2 = 0.0;
  double e_gxi = 0.0;
};

namespace detail {

// (m - 1)^k - m^k without cancellation for large m.
inline double pow_diff(double m, double k) { return std::pow(m, k) * std::expm1(k * std::log1p(-1.0 / m)); }

inline void check_power_beta(double beta) {
  if (!(beta > 3.0)) throw DomainError("beta must exceed 3");
  if (std::abs(beta - 4.0) <= kBetaFourGuard) throw DomainError("beta = 4 is excluded");
}

inline constexpr double kSeamSlack = 1e-12;

}  // namespace detail

// Exact moments for m >= 1 + eta (every goal value needs xi >= m - g >= eta).
inline UniformPowerMoments uniform_power_stats_high(double beta, double eta, double m) {
  detail::check_power_beta(beta);
  if (!(eta > 0.0)) throw DomainError("uniform_power_stats_high: eta must be positive");
  if (m < (1.0 + eta) * (1.0 - detail::kSeamSlack))
    throw DomainError("uniform_power_stats_high: requires m >= 1 + eta");
  const double b = beta;
  const double c = std::pow(eta, b - 1.0);
  const double m1 = m - 1.0;
  UniformPowerMoments r;
  r.alpha = c * detail::pow_diff(m, 2.0 - b) / (b - 2.0);
  const double k = c / r.alpha;
  r.e_xi = k * (b - 1.0) / ((b - 2.0) * (b - 3.0)) * detail::pow_diff(m, 3.0 - b);
  r.e_xi2 = k * (b - 1.0) / ((b - 3.0) * (b - 4.0)) * detail::pow_diff(m, 4.0 - b);
  r.e_g = k / (b - 2.0) * (std::pow(m1, 2.0 - b) - detail::pow_diff(m, 3.0 - b) / (b - 3.0));
  r.e_g2 = k / (b - 2.0) *
           (std::pow(m1, 2.0 - b) - 2.0 * std::pow(m1, 3.0 - b) / (b - 3.0) +
            2.0 * detail::pow_diff(m, 4.0 - b) / ((b - 3.0) * (b - 4.0)));
  r.e_gxi = k * (b - 1.0) / ((b - 2.0) * (b - 3.0)) *
            (std::pow(m1, 3.0 - b) - detail::pow_diff(m, 4.0 - b) / (b - 4.0));
  return r;
}

// Exact moments for eta <= m <= 1 + eta.
inline UniformPowerMoments uniform_power_stats_mid(double beta, double eta, double m) {
  detail::check_power_beta(beta);
  if (!(eta > 0.0)) throw DomainError("uniform_power_stats_mid: eta must be positive");
  if (m < eta * (1.0 - detail::kSeamSlack) || m > (1.0 + eta) * (1.0 + detail::kSeamSlack))
    throw DomainError("uniform_power_stats_mid: requires eta <= m <= 1 + eta");
  const double b = beta;
  const double d = m - eta;
  const double r = eta / m;
  // eta^(b-1) (eta^(k-b) - m^(k-b)) written as eta^(k-1) (1 - (eta/m)^(b-k)).
  const double t3 = eta * eta * (1.0 - std::pow(r, b - 3.0));
  const double t4 = eta * eta * eta * (1.0 - std::pow(r, b - 4.0));
  UniformPowerMoments u;
  u.alpha = 1.0 - d + (eta - eta * std::pow(r, b - 2.0)) / (b - 2.0);
  const double ia = 1.0 / u.alpha;
  u.e_xi = ia * (b - 1.0) / (b - 2.0) * (eta - eta * d + t3 / (b - 3.0));
  u.e_xi2 = ia * (b - 1.0) / (b - 3.0) * (eta * eta - eta * eta * d + t4 / (b - 4.0));
  u.e_gxi = ia * (b - 1.0) / (b - 2.0) *
            (0.5 * eta - 0.5 * eta * d * d + eta * eta * d / (b - 3.0) - t4 / ((b - 3.0) * (b - 4.0)));
  u.e_g = ia * (0.5 * (1.0 - d * d) + eta * d / (b - 2.0) - t3 / ((b - 2.0) * (b - 3.0)));
  u.e_g2 = ia * ((1.0 - d * d * d) / 3.0 + eta * d * d / (b - 2.0) - 2.0 * eta * eta * d / ((b - 2.0) * (b - 3.0)) +
                 2.0 * t4 / ((b - 2.0) * (b - 3.0) * (b - 4.0)));
  return u;
}

inline TruncatedStats stats_from_raw(double alpha, double m, double e_g, double e_xi, double e_g2, double e_xi2,
                                     double e_gxi) {
  return assemble_stats(alpha, m, e_g, e_xi, e_g2 - e_g * e_g, e_xi2 - e_xi * e_xi, e_gxi - e_g * e_xi,
                        Method::ClosedForm);
}

// Closed-form record for the regime containing m, or nothing below eta.
inline std::optional<TruncatedStats> uniform_power_closed_stats(double beta, double eta, double m) {
  if (m < eta) return std::nullopt;
  const UniformPowerMoments u =
      m >= 1.0 + eta ? uniform_power_stats_high(beta, eta, m) : uniform_power_stats_mid(beta, eta, m);
  return stats_from_raw(u.alpha, m, u.e_g, u.e_xi, u.e_g2, u.e_xi2, u.e_gxi);
}

struct TurningPoint {
  double eta = 0.0;
  double m = 0.0;
  double alpha_of_eps = 0.0;
  double rho_limit = 0.0;
};

// The selection level with m_alpha = 1 + eta, from
// (beta - 2) alpha = eta (1 - eta^(beta-2) (1 + eta)^(2-beta)), and the
// limiting correlation there as eps -> 0.
inline TurningPoint uniform_power_turning_point(double beta, double epsilon) {
  detail::check_power_beta(beta);
  if (!(epsilon > 0.0)) throw DomainError("uniform_power_turning_point: epsilon must be positive");
  TurningPoint t;
  t.eta = calibrate(Family::PowerLaw, epsilon, {beta, std::nullopt}).scale;
  t.m = 1.0 + t.eta;
  t.alpha_of_eps = t.eta * (1.0 - std::pow(t.eta / (1.0 + t.eta), beta - 2.0)) / (beta - 2.0);
  t.rho_limit = std::max(-std::sqrt((beta - 3.0) / (2.0 * (beta - 2.0))), -1.0 / (beta - 2.0));
  return t;
}

// Leading-order rho_alpha for alpha -> 0, in the discrepancy's own scale:
// -sqrt((beta-3)/(12(beta-1))) alpha^(1/(beta-1)) / eta. With
// eta = (beta-2) sqrt((beta-3)/(beta-1)) eps it equals
// -alpha^(1/(beta-1)) / (sqrt12 (beta-2) eps).
inline AsymptoticPrediction uniform_power_rho_asymptotic(double beta, double eta, double alpha) {
  detail::check_power_beta(beta);
  if (!(eta > 0.0) || !(alpha > 0.0 && alpha < 1.0)) throw DomainError("uniform_power_rho_asymptotic: bad arguments");
  AsymptoticPrediction p;
  p.value = -std::sqrt((beta - 3.0) / (12.0 * (beta - 1.0))) * std::pow(alpha, 1.0 / (beta - 1.0)) / eta;
  p.kind = PredictionKind::LeadingOrder;
  p.validity = "alpha -> 0";
  return p;
}

// The same asymptote written with epsilon, as -alpha^(1/(beta-1)) / (sqrt12 (beta-2) eps).
inline AsymptoticPrediction uniform_power_rho_asymptotic_eps(double beta, double epsilon, double alpha) {
  detail::check_power_beta(beta);
  if (!(epsilon > 0.0) || !(alpha > 0.0 && alpha < 1.0))
    throw DomainError("uniform_power_rho_asymptotic_eps: bad arguments");
  AsymptoticPrediction p;
  p.value = -std::pow(alpha, 1.0 / (beta - 1.0)) / (sqrt12 * (beta - 2.0) * epsilon);
  p.kind = PredictionKind::LeadingOrder;
  p.validity = "alpha -> 0";
  return p;
}

// E[M | M >= m, G = g] = m + (m - g)/(beta - 2) in the power-law tail regime.
inline double conditional_measure_given_goal(double beta, double eta, double m, double g) {
  if (!(beta > 2.0)) throw DomainError("conditional_measure_given_goal: beta must exceed 2");
  if (!(m - g >= eta) || !(m >= eta + 1.0))
    throw DomainError("conditional_measure_given_goal: requires m - g >= eta and m >= 1 + eta");
  return m + (m - g) / (beta - 2.0);
}

// ---------------------------------------------------------------------------
// Power-law goal (gamma, scale 1), power-law discrepancy (beta, eta).

// I(m, kappa, nu) = integral over g in [1, m - eta] of (m - g)^-kappa g^-nu.
inline double power_integral_I(double m, double kappa, double nu, double eta) {
  const double a = 1.0;
  const double b = m - eta;
  if (!(b > a)) return 0.0;
  std::vector<double> br{a, b};
  for (double off = 0x1.0p-10; off < 0.5 * (b - a); off *= 2.0) br.push_back(a + off);
  for (double off = eta * 0x1.0p-10; off < 0.5 * (b - a); off *= 2.0) br.push_back(b - off);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  auto f = [&](double g) { return Vec<1>{std::pow(m - g, -kappa) * std::pow(g, -nu)}; };
  return integrate<1>(f, std::span<const double>(br), QuadOptions{1e-12, 0.0, 60, 400000}).value[0];
}

namespace detail {

inline double power_power_unnormalised(double beta, double eta, double gamma, double m, int c, int b) {
  const double kb = beta - 1.0 - b;
  const double kc = gamma - 1.0 - c;
  const double a_term =
      (gamma - 1.0) * (beta - 1.0) / kb * std::pow(eta, beta - 1.0) * power_integral_I(m, kb, gamma - c, eta);
  const double b_term = (gamma - 1.0) / kc * (beta - 1.0) / kb * std::pow(eta, b) * std::pow(m - eta, -kc);
  return a_term + b_term;
}

inline void check_power_power(double beta, double eta, double gamma, double m, int c, int b) {
  if (!(beta > 3.0) || !(gamma > 3.0) || !(eta > 0.0)) throw DomainError("power_power: need beta, gamma > 3, eta > 0");
  if (c < 0 || b < 0 || c > 2 || b > 2) throw DomainError("power_power: c, b must lie in {0, 1, 2}");
  if (!(b < beta - 1.0) || !(c < gamma - 1.0)) throw DomainError("power_power: need b < beta - 1 and c < gamma - 1");
  if (!(m > 1.0 + eta)) throw DomainError("power_power: requires m > 1 + eta");
}

}  // namespace detail

inline double power_power_alpha(double beta, double eta, double gamma, double m) {
  detail::check_power_power(beta, eta, gamma, m, 0, 0);
  return detail::power_power_unnormalised(beta, eta, gamma, m, 0, 0);
}

// E[G^c xi^b | M >= m] through the split at g = m - eta.
inline double power_power_moment(double beta, double eta, double gamma, double m, int c, int b) {
  detail::check_power_power(beta, eta, gamma, m, c, b);
  if (c == 0 && b == 0) return 1.0;
  return detail::power_power_unnormalised(beta, eta, gamma, m, c, b) /
         detail::power_power_unnormalised(beta, eta, gamma, m, 0, 0);
}

inline std::optional<TruncatedStats> power_power_closed_stats(double beta, double eta, double gamma, double m) {
  if (!(m > 1.0 + eta)) return std::nullopt;
  const double alpha = power_power_alpha(beta, eta, gamma, m);
  auto mom = [&](int c, int b) { return power_power_moment(beta, eta, gamma, m, c, b); };
  return stats_from_raw(alpha, m, mom(1, 0), mom(0, 1), mom(2, 0), mom(0, 2), mom(1, 1));
}

inline double power_power_C(double beta, double gamma) {
  return (beta - 2.0) * ((gamma - 1.0) / (gamma - 2.0) * (beta - 1.0) / (beta - 2.0) - (gamma - 1.0) / (gamma - 3.0)) *
         std::sqrt((gamma - 3.0) * (beta - 3.0) / ((gamma - 1.0) * (beta - 1.0)));
}

inline double power_power_D(double beta, double gamma) {
  return (1.0 + (beta - 1.0) * (gamma + beta - 3.0)) / (gamma - 2.0) *
         std::sqrt((gamma - 1.0) * (beta - 3.0) / ((gamma - 3.0) * (beta - 1.0)));
}

// Three-regime prediction for rho_alpha as alpha -> 0, with C and D as printed.
inline AsymptoticPrediction power_power_rho_asymptotic(double beta, double gamma, double epsilon, double alpha) {
  if (!(beta > 3.0) || !(gamma > 3.0)) throw DomainError("power_power_rho_asymptotic: need beta, gamma > 3");
  if (!(epsilon > 0.0) || !(alpha > 0.0 && alpha < 1.0)) throw DomainError("power_power_rho_asymptotic: bad arguments");
  const double gap = gamma - beta;
  for (double edge : {0.0, 1.0, 2.0, 3.0})
    if (std::abs(gap - edge) <= 1e-9)
      throw DomainError("power_power_rho_asymptotic: gamma - beta = " + std::to_string(edge) +
                        " is a regime boundary with no stated asymptote");
  AsymptoticPrediction p;
  if (gap < 0.0) {
    p.value = 1.0;
    p.kind = PredictionKind::Limit;
    p.validity = "alpha -> 0, gamma < beta";
  } else if (gap < 2.0) {
    p.value = -power_power_C(beta, gamma) * std::pow(epsilon, -(gamma - 1.0) / 2.0) *
              std::pow(alpha, gap / (2.0 * (beta - 1.0)));
    p.kind = PredictionKind::LeadingOrder;
    p.validity = "alpha -> 0, 0 < gamma - beta < 2";
  } else {
    p.value = -power_power_D(beta, gamma) * std::pow(alpha, 1.0 / (beta - 1.0)) / epsilon;
    p.kind = PredictionKind::LeadingOrder;
    p.validity = "alpha -> 0, gamma - beta > 2";
  }
  return p;
}

// Leading-order rho_alpha for gamma - beta > 2 derived from
// Cov_alpha(G, M) -> -Var(G)/(beta - 2): -D' alpha^(1/(beta-1)) / eta with
// D' = sqrt((gamma-1)(beta-3)/((gamma-3)(beta-1))) / (gamma-2).
inline AsymptoticPrediction power_power_rho_limit_eta(double beta, double gamma, double eta, double alpha) {
  if (!(gamma - beta > 2.0)) throw DomainError("power_power_rho_limit_eta: requires gamma - beta > 2");
  AsymptoticPrediction p;
  const double d = std::sqrt((gamma - 1.0) * (beta - 3.0) / ((gamma - 3.0) * (beta - 1.0))) / (gamma - 2.0);
  p.value = -d * std::pow(alpha, 1.0 / (beta - 1.0)) / eta;
  p.kind = PredictionKind::LeadingOrder;
  p.validity = "alpha -> 0, gamma - beta > 2";
  return p;
}

}  // namespace goodhart
