#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "constants.hpp"
#include "error.hpp"
#include "quadrature.hpp"

namespace goodhart::worst_case {

// Goal-conditional discrepancy: weight 1/2 on a point mass at x_g and weight
// 1/2 on a power law with survival (eta_g / x)^(beta_g - 1) for x >= eta_g.
struct WorstCaseParams {
  double g = 0.0;
  double epsilon = 0.0;
  double beta_g = 5.0;
  double eta_g = 0.0;
  double x_g = 0.0;
  double mix_point = 0.5;
};

// Lower end of the goal integral. The discarded mass of g e^g below it is
// (L + 1) e^-L, about 1e-48.
inline const double kGoalCutoff = -50.0 * ln10;

inline WorstCaseParams params_at(double g, double epsilon) {
  if (!(g <= 0.0)) throw DomainError("worst_case: goal value must be <= 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("worst_case: epsilon must be positive");
  WorstCaseParams p;
  p.g = g;
  p.epsilon = epsilon;
  p.beta_g = 4.0 + 1.0 / (1.0 - g);
  const double b = p.beta_g;
  const double r = (b - 1.0) / (b - 2.0);
  p.eta_g = std::sqrt(2.0 * epsilon * epsilon / (r * r + (b - 1.0) / (b - 3.0)));
  p.x_g = -r * p.eta_g;
  p.mix_point = 0.5;
  return p;
}

// Mean and variance of the mixture, from the two components' moments.
inline double mixture_mean(const WorstCaseParams& p) {
  const double b = p.beta_g;
  return p.mix_point * p.x_g + (1.0 - p.mix_point) * p.eta_g * (b - 1.0) / (b - 2.0);
}

inline double mixture_variance(const WorstCaseParams& p) {
  const double b = p.beta_g;
  const double second = p.mix_point * p.x_g * p.x_g + (1.0 - p.mix_point) * p.eta_g * p.eta_g * (b - 1.0) / (b - 3.0);
  const double mu = mixture_mean(p);
  return second - mu * mu;
}

// P[xi >= m - g | G = g].
inline double conditional_survival(double m, double g, double epsilon) {
  const WorstCaseParams p = params_at(g, epsilon);
  const double x = m - g;
  const double point = x <= p.x_g ? 1.0 : 0.0;
  const double tail = x <= p.eta_g ? 1.0 : std::pow(p.eta_g / x, p.beta_g - 1.0);
  return p.mix_point * point + (1.0 - p.mix_point) * tail;
}

// Upper envelope of conditional_survival, valid for m >= epsilon.
inline double survival_upper_bound(double m, double g, double epsilon) {
  return epsilon * epsilon * epsilon * std::exp(-3.0 * std::log(m) - std::log(m) / (1.0 - g));
}

// Lower envelope of conditional_survival, valid for g >= -m.
inline double survival_lower_bound(double m, double g, double epsilon) {
  return std::pow(epsilon, 4) / 256.0 * std::exp(-3.0 * std::log(m) - std::log(m) / (1.0 - g));
}

namespace detail {

// Root of f on [lo, hi] by bisection, given a sign change.
template <class F>
double bisect(F&& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Goal values where m - g crosses eta_g or x_g; the survival jumps there.
inline std::vector<double> discontinuities(double m, double epsilon) {
  std::vector<double> out;
  auto scan = [&](auto&& h) {
    double prev_g = kGoalCutoff;
    double prev_h = h(prev_g);
    constexpr int steps = 2000;
    for (int i = 1; i <= steps; ++i) {
      const double g = kGoalCutoff * (1.0 - static_cast<double>(i) / steps);
      const double hv = h(g);
      if ((hv > 0.0) != (prev_h > 0.0)) out.push_back(bisect(h, prev_g, g));
      prev_g = g;
      prev_h = hv;
    }
  };
  scan([&](double g) { return m - g - params_at(g, epsilon).eta_g; });
  scan([&](double g) { return m - g - params_at(g, epsilon).x_g; });
  return out;
}

}  // namespace detail

// E[G | M >= m] for the goal density e^g on g <= 0. At m = -inf this is the
// unconditional mean -1.
inline double conditional_goal_given_threshold(double m, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("worst_case: epsilon must be positive");
  if (m == -inf) return -1.0;
  if (!(m >= std::max(epsilon, 2.0)) || !std::isfinite(m))
    throw DomainError("worst_case: threshold must be finite and at least max(epsilon, 2)");
  std::vector<double> br{kGoalCutoff, 0.0};
  for (double step = 0.25; -step > kGoalCutoff; step *= 2.0) br.push_back(-step);
  for (double d : detail::discontinuities(m, epsilon)) br.push_back(d);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  auto f = [&](double g) {
    const double w = conditional_survival(m, g, epsilon) * std::exp(g);
    return Vec<2>{w, w * g};
  };
  const auto r = integrate<2>(f, std::span<const double>(br), QuadOptions{1e-12, 1e-16, 60, 400000});
  return r.value[1] / r.value[0];
}

struct WorstCasePoint {
  double m = 0.0;
  double e_g = 0.0;
};

// E[G | M >= m] over `points` log-spaced thresholds in [m_min, m_max].
inline std::vector<WorstCasePoint> threshold_sweep(double epsilon, double m_min, double m_max, int points) {
  if (!(m_min > 0.0 && m_max >= m_min) || points < 1) throw DomainError("worst_case: invalid threshold grid");
  std::vector<WorstCasePoint> out;
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    const double m = std::exp(std::log(m_min) + t * (std::log(m_max) - std::log(m_min)));
    out.push_back({m, conditional_goal_given_threshold(m, epsilon)});
  }
  return out;
}

}  // namespace goodhart::worst_case
