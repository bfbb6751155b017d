#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "distributions.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "scenario.hpp"
#include "stats.hpp"

namespace goodhart {

namespace detail {

// Goal values beyond which the goal density is negligible for any threshold.
inline double goal_lower_cutoff(const Distribution& g) {
  const double lo = support_lower(g);
  if (std::isfinite(lo)) return lo;
  if (g.family == Family::Normal) return -40.0 * g.scale;
  return -745.0;
}

inline double goal_upper_cutoff(const Distribution& g) {
  const double hi = support_upper(g);
  if (std::isfinite(hi)) return hi;
  if (g.family == Family::Normal) return 40.0 * g.scale;
  return quantile(g, 1e-300);
}

// Integration plan for the goal variable at threshold m: quadrature over
// [a, b] plus an analytic piece on [exact_from, +inf) where the discrepancy's
// conditional moments no longer depend on g.
struct GoalPlan {
  std::vector<double> breaks;
  double exact_from = inf;
  bool exact_piece = false;
};

inline void add_geometric(std::vector<double>& br, double from, double dir, double step, double span) {
  for (double off = step * 0x1.0p-10; off < span; off *= 2.0) br.push_back(from + dir * off);
}

inline GoalPlan plan_goal(const Scenario& s, double m) {
  GoalPlan plan;
  const Distribution& gd = s.goal;
  const Distribution& xd = s.discrepancy;
  const double xi_lo = support_lower(xd);
  double a = goal_lower_cutoff(gd);
  double b = goal_upper_cutoff(gd);
  bool right_is_kink = false;
  if (std::isfinite(xi_lo)) {
    const double cut = m - xi_lo;
    if (cut < support_upper(gd)) {
      plan.exact_piece = true;
      plan.exact_from = std::max(cut, support_lower(gd));
    }
    if (cut < b) {
      b = cut;
      right_is_kink = true;
    }
  } else if (!std::isfinite(support_upper(gd))) {
    plan.exact_piece = true;
    plan.exact_from = b;
  }
  if (!(b > a)) return plan;

  const double sg = natural_scale(gd);
  const double sx = natural_scale(xd);
  const double len = b - a;
  std::vector<double>& br = plan.breaks;
  br.push_back(a);
  br.push_back(b);
  const double step = std::min(sg, sx);
  const double n_uniform = std::min(len / step, 2000.0);
  for (int i = 1; i < static_cast<int>(n_uniform); ++i) br.push_back(a + len * i / n_uniform);
  add_geometric(br, a, 1.0, sg, 0.5 * len);
  add_geometric(br, b, -1.0, right_is_kink ? sx : sg, 0.5 * len);
  if (!std::isfinite(xi_lo)) {
    // Resolve the transition of P[xi >= m - g] around g = m - median(xi).
    const double centre = m - quantile(xd, 0.5);
    for (int k = -40; k <= 40; ++k) br.push_back(centre + 0.5 * k * sx);
  } else if (xd.family == Family::LogNormal) {
    const double centre = m - 1.0;
    for (int k = -40; k <= 40; ++k) br.push_back(centre + 0.25 * k * sx);
  }
  std::sort(br.begin(), br.end());
  br.erase(std::remove_if(br.begin(), br.end(), [&](double x) { return !(x >= a && x <= b); }), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  return plan;
}

inline QuadOptions engine_options() { return QuadOptions{1e-10, 1e-14, 60, 400000}; }

// Integrals over the goal of p^G(g) (g - cg)^c E[(xi - cx)^b ; xi >= m - g]
// for (c, b) in {(0,0), (1,0), (2,0), (0,1), (0,2), (1,1)}.
inline Vec<6> centred_integrals(const Scenario& s, double m, double cg, double cx) {
  const Distribution& gd = s.goal;
  const Distribution& xd = s.discrepancy;
  const GoalPlan plan = plan_goal(s, m);
  Vec<6> total{};
  if (plan.breaks.size() >= 2) {
    auto f = [&](double g) {
      const double p = pdf(gd, g);
      if (p == 0.0) return Vec<6>{};
      const double x = m - g;
      const double s0 = upper_partial_moment(xd, x, 0);
      const double s1 = shifted_partial_moment(xd, x, 1, cx);
      const double s2 = shifted_partial_moment(xd, x, 2, cx);
      const double dg = g - cg;
      return Vec<6>{p * s0, p * dg * s0, p * dg * dg * s0, p * s1, p * s2, p * dg * s1};
    };
    total = integrate<6>(f, std::span<const double>(plan.breaks), engine_options()).value;
  }
  if (plan.exact_piece) {
    const double g0 = shifted_partial_moment(gd, plan.exact_from, 0, cg);
    const double g1 = shifted_partial_moment(gd, plan.exact_from, 1, cg);
    const double g2 = shifted_partial_moment(gd, plan.exact_from, 2, cg);
    const double x1 = shifted_partial_moment(xd, -inf, 1, cx);
    const double x2 = shifted_partial_moment(xd, -inf, 2, cx);
    total[0] += g0;
    total[1] += g1;
    total[2] += g2;
    total[3] += g0 * x1;
    total[4] += g0 * x2;
    total[5] += g1 * x1;
  }
  return total;
}

}  // namespace detail

// P[M >= m] by quadrature over the goal of the discrepancy's survival.
inline double survival_of_measure(const Scenario& s, double m) {
  if (m == -inf) return 1.0;
  if (std::isnan(m)) throw DomainError("survival_of_measure: threshold is NaN");
  const detail::GoalPlan plan = detail::plan_goal(s, m);
  double total = 0.0;
  if (plan.breaks.size() >= 2) {
    auto f = [&](double g) {
      const double p = pdf(s.goal, g);
      return Vec<1>{p == 0.0 ? 0.0 : p * survival(s.discrepancy, m - g)};
    };
    total = integrate<1>(f, std::span<const double>(plan.breaks), detail::engine_options()).value[0];
  }
  if (plan.exact_piece) total += upper_partial_moment(s.goal, plan.exact_from, 0);
  return std::clamp(total, 0.0, 1.0);
}

// E[G^c xi^b | M >= m] for c + b <= 2.
inline double conditional_moment(const Scenario& s, double m, int c, int b) {
  if (c < 0 || b < 0 || c + b > 2) throw DomainError("conditional_moment: need c, b >= 0 and c + b <= 2");
  require_moment(s.goal, c);
  require_moment(s.discrepancy, b);
  if (c == 0 && b == 0) return 1.0;
  if (m == -inf) return c == 1 && b == 1 ? mean(s.goal) * mean(s.discrepancy)
                                         : raw_moment(s.goal, c) * raw_moment(s.discrepancy, b);
  const detail::GoalPlan plan = detail::plan_goal(s, m);
  Vec<2> total{};
  if (plan.breaks.size() >= 2) {
    auto f = [&](double g) {
      const double p = pdf(s.goal, g);
      if (p == 0.0) return Vec<2>{};
      const double x = m - g;
      return Vec<2>{p * survival(s.discrepancy, x),
                    p * std::pow(g, c) * upper_partial_moment(s.discrepancy, x, b)};
    };
    total = integrate<2>(f, std::span<const double>(plan.breaks), detail::engine_options()).value;
  }
  if (plan.exact_piece) {
    total[0] += upper_partial_moment(s.goal, plan.exact_from, 0);
    total[1] += upper_partial_moment(s.goal, plan.exact_from, c) * raw_moment(s.discrepancy, b);
  }
  if (!(total[0] > 0.0)) throw QuadratureFailure("conditional_moment: selected mass underflowed");
  return total[1] / total[0];
}

// Threshold m with P[M >= m] = alpha.
inline double solve_m_alpha(const Scenario& s, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("solve_m_alpha: alpha must lie in (0, 1)");
  // Relative tolerance: stricter than an absolute floor, which would accept a
  // threshold off by orders of magnitude once alpha drops below 1e-12.
  const double tol = 1e-9 * alpha;
  double lo = quantile(s.goal, 0.99) + quantile(s.discrepancy, 0.99);
  double hi = quantile(s.goal, 1e-4) + quantile(s.discrepancy, alpha / 2.0);
  if (!(hi > lo)) hi = lo + natural_scale(s.goal) + natural_scale(s.discrepancy);
  double s_lo = survival_of_measure(s, lo);
  double s_hi = survival_of_measure(s, hi);
  double width = hi - lo;
  int expansions = 0;
  while (s_lo < alpha) {
    if (++expansions > 200) throw BracketFailure("solve_m_alpha: no lower bracket");
    hi = lo;
    s_hi = s_lo;
    lo -= width;
    width *= 2.0;
    s_lo = survival_of_measure(s, lo);
  }
  width = hi - lo;
  while (s_hi > alpha) {
    if (++expansions > 200) throw BracketFailure("solve_m_alpha: no upper bracket");
    lo = hi;
    s_lo = s_hi;
    hi += width;
    width *= 2.0;
    s_hi = survival_of_measure(s, hi);
  }
  if (std::abs(s_lo - alpha) <= tol) return lo;
  if (std::abs(s_hi - alpha) <= tol) return hi;

  // Illinois iteration on ln S(m) - ln alpha, with bisection safeguards.
  const double la = std::log(alpha);
  auto phi = [&](double sv) { return sv > 0.0 ? std::log(sv) - la : -inf; };
  double f_lo = phi(s_lo);
  double f_hi = phi(s_hi);
  int side = 0;
  for (int it = 0; it < 400; ++it) {
    double x;
    if (std::isfinite(f_lo) && std::isfinite(f_hi) && f_lo != f_hi)
      x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
    else
      x = 0.5 * (lo + hi);
    if (!(x > lo && x < hi) || it % 8 == 7) x = 0.5 * (lo + hi);
    const double sx = survival_of_measure(s, x);
    if (std::abs(sx - alpha) <= tol) return x;
    const double fx = phi(sx);
    if (fx > 0.0) {
      lo = x;
      f_lo = fx;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lo), std::abs(hi), 1.0}))
      return 0.5 * (lo + hi);
  }
  throw BracketFailure("solve_m_alpha: iteration budget exhausted");
}

// Full record at threshold m, with alpha taken as given (or recomputed when
// alpha_hint is NaN).
inline TruncatedStats truncated_stats_at_threshold(const Scenario& s, double m,
                                                   double alpha_hint = std::numeric_limits<double>::quiet_NaN()) {
  if (m == -inf) {
    return assemble_stats(1.0, -inf, mean(s.goal), mean(s.discrepancy), variance(s.goal),
                          variance(s.discrepancy), 0.0, Method::Quadrature);
  }
  // Two passes: locate the conditional means, then integrate moments centred
  // on them so second moments do not cancel.
  double cg = mean(s.goal);
  double cx = mean(s.discrepancy);
  Vec<6> v{};
  for (int pass = 0; pass < 2; ++pass) {
    v = detail::centred_integrals(s, m, cg, cx);
    if (!(v[0] > 0.0)) throw QuadratureFailure("truncated_stats: selected mass underflowed at m = " + std::to_string(m));
    if (pass == 0) {
      cg += v[1] / v[0];
      cx += v[3] / v[0];
    }
  }
  const double dg = v[1] / v[0];
  const double dx = v[3] / v[0];
  const double var_g = v[2] / v[0] - dg * dg;
  const double var_x = v[4] / v[0] - dx * dx;
  const double cov = v[5] / v[0] - dg * dx;
  const double alpha = std::isnan(alpha_hint) ? std::min(v[0], 1.0) : alpha_hint;
  return assemble_stats(alpha, m, cg + dg, cx + dx, var_g, var_x, cov, Method::Quadrature);
}

inline TruncatedStats truncated_stats(const Scenario& s, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("truncated_stats: alpha must lie in (0, 1]");
  if (alpha == 1.0) return truncated_stats_at_threshold(s, -inf);
  return truncated_stats_at_threshold(s, solve_m_alpha(s, alpha), alpha);
}

struct AlphaLogGrid {
  double alpha_max = 1.0;
  double alpha_min = 1e-9;
  int points = 64;
};

struct ThresholdGrid {
  double m_min = 0.0;
  double m_max = 1.0;
  int points = 64;
};

using Grid = std::variant<AlphaLogGrid, ThresholdGrid>;

inline std::vector<double> grid_values(const AlphaLogGrid& g) {
  if (!(g.alpha_max > 0.0 && g.alpha_max <= 1.0 && g.alpha_min > 0.0 && g.alpha_min < g.alpha_max) || g.points < 2)
    throw DomainError("alpha grid needs 0 < alpha_min < alpha_max <= 1 and at least 2 points");
  std::vector<double> out(static_cast<std::size_t>(g.points));
  const double l0 = std::log(g.alpha_max);
  const double l1 = std::log(g.alpha_min);
  for (int i = 0; i < g.points; ++i) out[i] = std::exp(l0 + (l1 - l0) * i / (g.points - 1));
  out.front() = g.alpha_max;
  out.back() = g.alpha_min;
  return out;
}

inline std::vector<double> grid_values(const ThresholdGrid& g) {
  if (!(g.m_max > g.m_min) || g.points < 2) throw DomainError("threshold grid needs m_min < m_max and 2+ points");
  std::vector<double> out(static_cast<std::size_t>(g.points));
  for (int i = 0; i < g.points; ++i) out[i] = g.m_min + (g.m_max - g.m_min) * i / (g.points - 1);
  return out;
}

inline SweepTable sweep(const Scenario& s, const Grid& grid, unsigned threads = 0) {
  SweepTable t;
  t.scenario = s;
  if (const auto* ag = std::get_if<AlphaLogGrid>(&grid)) {
    t.grid_kind = GridKind::AlphaLogGrid;
    const auto alphas = grid_values(*ag);
    t.rows.resize(alphas.size());
    parallel_for(alphas.size(), threads, [&](std::size_t i) { t.rows[i] = truncated_stats(s, alphas[i]); });
  } else {
    t.grid_kind = GridKind::ThresholdGrid;
    const auto ms = grid_values(std::get<ThresholdGrid>(grid));
    t.rows.resize(ms.size());
    parallel_for(ms.size(), threads, [&](std::size_t i) { t.rows[i] = truncated_stats_at_threshold(s, ms[i]); });
  }
  return t;
}

enum class ExtremumKind { Maximum, Minimum };

struct Extremum {
  std::size_t index = 0;
  double alpha = 0.0;
  double e_g = 0.0;
  ExtremumKind kind = ExtremumKind::Maximum;
};

// Interior local extrema of E_alpha[G] along the table's row order. A turn
// only counts once the curve has moved away from the candidate by more than
// `tolerance`, so flat or noisy stretches do not create spurious extrema.
inline std::vector<Extremum> detect_double_descent(const SweepTable& t, double tolerance = 1e-9) {
  if (t.rows.size() < 3) throw DomainError("detect_double_descent: need at least 3 rows");
  std::vector<Extremum> out;
  const auto& r = t.rows;
  int dir = 0;
  std::size_t cand = 0;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double e = r[i].e_g;
    if (dir == 0) {
      if (e > r[0].e_g + tolerance) {
        dir = 1;
        cand = i;
      } else if (e < r[0].e_g - tolerance) {
        dir = -1;
        cand = i;
      }
    } else if (dir == 1) {
      if (e >= r[cand].e_g) {
        cand = i;
      } else if (e < r[cand].e_g - tolerance) {
        out.push_back({cand, r[cand].alpha, r[cand].e_g, ExtremumKind::Maximum});
        dir = -1;
        cand = i;
      }
    } else {
      if (e <= r[cand].e_g) {
        cand = i;
      } else if (e > r[cand].e_g + tolerance) {
        out.push_back({cand, r[cand].alpha, r[cand].e_g, ExtremumKind::Minimum});
        dir = 1;
        cand = i;
      }
    }
  }
  return out;
}

}  // namespace goodhart
