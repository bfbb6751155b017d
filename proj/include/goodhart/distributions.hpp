#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <boost/math/special_functions/erf.hpp>

#include "constants.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace goodhart {

enum class Family { Uniform01, Exponential, Normal, PowerLaw, LogNormal, NegExpGoal };

// One scalar law. Parameter meaning depends on the family:
//   Exponential: rate = lambda
//   Normal:      scale = sigma (mean fixed at 0)
//   PowerLaw:    shape = beta, scale = eta, density (beta-1) eta^(beta-1) x^-beta on x >= eta
//   LogNormal:   scale = eta (location fixed at 0)
//   Uniform01, NegExpGoal: no parameters
struct Distribution {
  Family family = Family::Uniform01;
  double rate = 0.0;
  double shape = 0.0;
  double scale = 0.0;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

inline constexpr double kBetaFourGuard = 1e-6;

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Uniform01: return "uniform01";
    case Family::Exponential: return "exponential";
    case Family::Normal: return "normal";
    case Family::PowerLaw: return "power_law";
    case Family::LogNormal: return "log_normal";
    case Family::NegExpGoal: return "neg_exp_goal";
  }
  return "unknown";
}

inline Family parse_family(std::string_view name) {
  if (name == "uniform01" || name == "uniform") return Family::Uniform01;
  if (name == "exponential") return Family::Exponential;
  if (name == "normal") return Family::Normal;
  if (name == "power_law" || name == "powerlaw") return Family::PowerLaw;
  if (name == "log_normal" || name == "lognormal") return Family::LogNormal;
  if (name == "neg_exp_goal") return Family::NegExpGoal;
  throw ConfigError("unknown distribution family '" + std::string(name) + "'");
}

inline Distribution uniform01() { return {Family::Uniform01, 0.0, 0.0, 0.0}; }

inline Distribution neg_exp_goal() { return {Family::NegExpGoal, 0.0, 0.0, 0.0}; }

inline Distribution exponential(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("exponential: rate must be positive and finite");
  return {Family::Exponential, lambda, 0.0, 0.0};
}

inline Distribution normal(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("normal: sigma must be positive and finite");
  return {Family::Normal, 0.0, 0.0, sigma};
}

inline Distribution power_law(double beta, double eta) {
  if (!(beta > 3.0) || !std::isfinite(beta))
    throw DomainError("power_law: beta must exceed 3 for a finite variance");
  if (std::abs(beta - 4.0) <= kBetaFourGuard)
    throw DomainError("power_law: beta = 4 is excluded (closed forms divide by beta - 4)");
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw DomainError("power_law: eta must be positive and finite");
  return {Family::PowerLaw, 0.0, beta, eta};
}

inline Distribution log_normal(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw DomainError("log_normal: eta must be positive and finite");
  return {Family::LogNormal, 0.0, 0.0, eta};
}

inline double support_lower(const Distribution& d) {
  switch (d.family) {
    case Family::Uniform01:
    case Family::Exponential:
    case Family::LogNormal: return 0.0;
    case Family::PowerLaw: return d.scale;
    case Family::Normal:
    case Family::NegExpGoal: return -inf;
  }
  return -inf;
}

inline double support_upper(const Distribution& d) {
  switch (d.family) {
    case Family::Uniform01: return 1.0;
    case Family::NegExpGoal: return 0.0;
    default: return inf;
  }
}

// Characteristic width used to place quadrature breakpoints.
inline double natural_scale(const Distribution& d) {
  switch (d.family) {
    case Family::Uniform01:
    case Family::NegExpGoal: return 1.0;
    case Family::Exponential: return 1.0 / d.rate;
    case Family::Normal:
    case Family::PowerLaw:
    case Family::LogNormal: return d.scale;
  }
  return 1.0;
}

namespace detail {

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(tau); }

// P[Z >= z] for a standard normal Z.
inline double std_normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// log P[Z >= z], accurate far into the upper tail where erfc underflows.
inline double std_normal_log_sf(double z) {
  if (z < 30.0) return std::log(std_normal_sf(z));
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) +
                        105.0 / (z2 * z2 * z2 * z2);
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(tau) + std::log(series);
}

inline double factorial_small(int n) { return n == 2 ? 2.0 : 1.0; }

}  // namespace detail

inline double pdf(const Distribution& d, double x) {
  switch (d.family) {
    case Family::Uniform01: return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0;
    case Family::Exponential: return x >= 0.0 ? d.rate * std::exp(-d.rate * x) : 0.0;
    case Family::Normal: return detail::std_normal_pdf(x / d.scale) / d.scale;
    case Family::PowerLaw:
      return x >= d.scale ? (d.shape - 1.0) * std::pow(d.scale, d.shape - 1.0) * std::pow(x, -d.shape)
                          : 0.0;
    case Family::LogNormal: {
      if (!(x > 0.0)) return 0.0;
      const double l = std::log(x);
      return std::exp(-l * l / (2.0 * d.scale * d.scale)) / (x * d.scale * std::sqrt(tau));
    }
    case Family::NegExpGoal: return x <= 0.0 ? std::exp(x) : 0.0;
  }
  return 0.0;
}

// P[X >= x].
inline double survival(const Distribution& d, double x) {
  switch (d.family) {
    case Family::Uniform01:
      if (x <= 0.0) return 1.0;
      return x >= 1.0 ? 0.0 : 1.0 - x;
    case Family::Exponential: return x <= 0.0 ? 1.0 : std::exp(-d.rate * x);
    case Family::Normal: return detail::std_normal_sf(x / d.scale);
    case Family::PowerLaw: return x <= d.scale ? 1.0 : std::pow(d.scale / x, d.shape - 1.0);
    case Family::LogNormal:
      return x <= 0.0 ? 1.0 : detail::std_normal_sf(std::log(x) / d.scale);
    case Family::NegExpGoal: return x >= 0.0 ? 0.0 : -std::expm1(x);
  }
  return 0.0;
}

inline double log_survival(const Distribution& d, double x) {
  switch (d.family) {
    case Family::Normal: return detail::std_normal_log_sf(x / d.scale);
    case Family::LogNormal: return x <= 0.0 ? 0.0 : detail::std_normal_log_sf(std::log(x) / d.scale);
    case Family::Exponential: return x <= 0.0 ? 0.0 : -d.rate * x;
    case Family::PowerLaw: return x <= d.scale ? 0.0 : (d.shape - 1.0) * std::log(d.scale / x);
    default: return std::log(survival(d, x));
  }
}

// x such that P[X >= x] = p.
inline double quantile(const Distribution& d, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in (0, 1]");
  switch (d.family) {
    case Family::Uniform01: return 1.0 - p;
    case Family::Exponential: return -std::log(p) / d.rate;
    case Family::Normal:
      if (p == 1.0) return -inf;
      return d.scale * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    case Family::PowerLaw: return d.scale * std::pow(p, -1.0 / (d.shape - 1.0));
    case Family::LogNormal:
      if (p == 1.0) return 0.0;
      return std::exp(d.scale * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p));
    case Family::NegExpGoal: return p == 1.0 ? -inf : std::log1p(-p);
  }
  return 0.0;
}

inline void require_moment(const Distribution& d, int n) {
  if (n < 0 || n > 2) throw DomainError("partial moments are implemented for n in {0, 1, 2}");
  if (d.family == Family::PowerLaw && n + 1 >= d.shape)
    throw MomentDoesNotExist("power_law: moment of order " + std::to_string(n) +
                             " requires beta > " + std::to_string(n + 1));
}

// E[X^n].
inline double raw_moment(const Distribution& d, int n) {
  require_moment(d, n);
  if (n == 0) return 1.0;
  switch (d.family) {
    case Family::Uniform01: return 1.0 / (n + 1.0);
    case Family::Exponential: return detail::factorial_small(n) / std::pow(d.rate, n);
    case Family::Normal: return n == 1 ? 0.0 : d.scale * d.scale;
    case Family::PowerLaw: return (d.shape - 1.0) * std::pow(d.scale, n) / (d.shape - 1.0 - n);
    case Family::LogNormal: return std::exp(0.5 * n * n * d.scale * d.scale);
    case Family::NegExpGoal: return n == 1 ? -1.0 : 2.0;
  }
  return 0.0;
}

inline double mean(const Distribution& d) { return raw_moment(d, 1); }

inline double variance(const Distribution& d) {
  switch (d.family) {
    case Family::Exponential: return 1.0 / (d.rate * d.rate);
    case Family::Normal: return d.scale * d.scale;
    case Family::PowerLaw: {
      const double b = d.shape;
      return (b - 1.0) * d.scale * d.scale / ((b - 2.0) * (b - 2.0) * (b - 3.0));
    }
    case Family::LogNormal: {
      const double s2 = d.scale * d.scale;
      return std::expm1(s2) * std::exp(s2);
    }
    case Family::Uniform01: return 1.0 / 12.0;
    case Family::NegExpGoal: return 1.0;
  }
  return 0.0;
}

// Integral of t^n p(t) over [x, +inf). Below the support it is the raw moment.
inline double upper_partial_moment(const Distribution& d, double x, int n) {
  require_moment(d, n);
  if (x <= support_lower(d)) return raw_moment(d, n);
  if (x >= support_upper(d)) return 0.0;
  switch (d.family) {
    case Family::Uniform01: return (1.0 - std::pow(x, n + 1)) / (n + 1.0);
    case Family::Exponential: {
      const double l = d.rate;
      const double e = std::exp(-l * x);
      if (n == 0) return e;
      if (n == 1) return e * (x + 1.0 / l);
      return e * (x * x + 2.0 * x / l + 2.0 / (l * l));
    }
    case Family::Normal: {
      const double s = d.scale;
      const double phi = pdf(d, x);
      const double sf = survival(d, x);
      if (n == 0) return sf;
      if (n == 1) return s * s * phi;
      return s * s * (x * phi + sf);
    }
    case Family::PowerLaw: {
      const double b = d.shape;
      return (b - 1.0) / (b - 1.0 - n) * std::pow(d.scale, b - 1.0) * std::pow(x, n + 1.0 - b);
    }
    case Family::LogNormal: {
      const double s2 = d.scale * d.scale;
      const double z = (std::log(x) - n * s2) / d.scale;
      return std::exp(0.5 * n * n * s2) * detail::std_normal_sf(z);
    }
    case Family::NegExpGoal: {
      const double e = std::exp(x);
      if (n == 0) return -std::expm1(x);
      if (n == 1) return -1.0 - e * (x - 1.0);
      return 2.0 - e * (x * x - 2.0 * x + 2.0);
    }
  }
  return 0.0;
}

// Integral of (t - c)^n p(t) over [x, +inf), evaluated without expanding the
// binomial where that would cancel catastrophically.
inline double shifted_partial_moment(const Distribution& d, double x, int n, double c) {
  require_moment(d, n);
  if (n == 0) return upper_partial_moment(d, x, 0);
  const double lo = support_lower(d);
  const double hi = support_upper(d);
  if (x >= hi) return 0.0;
  const double xe = std::max(x, lo);
  switch (d.family) {
    case Family::Uniform01:
      return (std::pow(1.0 - c, n + 1) - std::pow(xe - c, n + 1)) / (n + 1.0);
    case Family::Exponential: {
      const double l = d.rate;
      const double e = std::exp(-l * xe);
      const double u = xe - c;
      if (n == 1) return e * (u + 1.0 / l);
      return e * (u * u + 2.0 * u / l + 2.0 / (l * l));
    }
    case Family::PowerLaw: {
      const double b = d.shape;
      const double sf = survival(d, xe);
      const double cond_mean = (b - 1.0) * xe / (b - 2.0);
      if (n == 1) return sf * (cond_mean - c);
      const double cond_var = xe * xe * (b - 1.0) / ((b - 3.0) * (b - 2.0) * (b - 2.0));
      const double dev = cond_mean - c;
      return sf * (cond_var + dev * dev);
    }
    case Family::NegExpGoal: {
      if (xe == -inf) {
        const double m1 = -1.0 - c;
        return n == 1 ? m1 : 2.0 + 2.0 * c + c * c;
      }
      const double e = std::exp(xe);
      const double u = xe - c;
      if (n == 1) return (-1.0 - c) - e * (u - 1.0);
      return (c * c + 2.0 * c + 2.0) - e * (u * u - 2.0 * u + 2.0);
    }
    case Family::Normal:
    case Family::LogNormal: break;
  }
  const double m0 = upper_partial_moment(d, x, 0);
  const double m1 = upper_partial_moment(d, x, 1);
  if (n == 1) return m1 - c * m0;
  return upper_partial_moment(d, x, 2) - 2.0 * c * m1 + c * c * m0;
}

inline double sample_from_uniform(const Distribution& d, double u) { return quantile(d, u); }

inline double sample(const Distribution& d, CounterRng& rng) { return quantile(d, rng.next()); }

}  // namespace goodhart
