#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "distributions.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace goodhart::feedback {

// Preference the satisfaction term is measured against: the drifting
// instantaneous preference theta_t, or the fixed intrinsic preference theta.
enum class ScoreReference { Instantaneous, Intrinsic };

// Sum of the per-step terms, or their average over the horizon.
enum class ScoreNormalization { Sum, Mean };

inline std::string_view reference_name(ScoreReference r) {
  return r == ScoreReference::Instantaneous ? "instantaneous" : "intrinsic";
}

inline std::string_view normalization_name(ScoreNormalization n) { return n == ScoreNormalization::Sum ? "sum" : "mean"; }

inline ScoreReference parse_reference(std::string_view s) {
  if (s == "instantaneous") return ScoreReference::Instantaneous;
  if (s == "intrinsic") return ScoreReference::Intrinsic;
  throw ConfigError("unknown score reference '" + std::string(s) + "'");
}

inline ScoreNormalization parse_normalization(std::string_view s) {
  if (s == "sum") return ScoreNormalization::Sum;
  if (s == "mean") return ScoreNormalization::Mean;
  throw ConfigError("unknown score normalization '" + std::string(s) + "'");
}

struct SimParams {
  double theta = 0.0;
  double addiction = 1.0;
  int horizon = 100;
  double delta = 1e-5;
  double omega = 0.0;
  ScoreReference reference = ScoreReference::Instantaneous;
  ScoreNormalization normalization = ScoreNormalization::Sum;
};

inline void validate(const SimParams& p) {
  if (p.horizon < 1) throw ConfigError("feedback: horizon must be at least 1");
  if (!(p.delta > 0.0)) throw ConfigError("feedback: delta must be positive");
  if (!(p.addiction > 0.0)) throw ConfigError("feedback: addiction must be positive");
  if (!(p.omega >= 0.0) || !std::isfinite(p.omega)) throw ConfigError("feedback: omega must be finite and >= 0");
  if (!std::isfinite(p.theta)) throw ConfigError("feedback: theta must be finite");
}

namespace detail {

// Runs the recommender loop for t = 1..T starting from x_1 = 0. Each step
// folds x_t into the running preference theta_t and scores the content before
// moving x toward theta_t by omega / t (ties move up). `visit(t, x_t, theta_t)`
// observes every step before the move.
template <class Visit>
double run_loop(const SimParams& p, Visit&& visit) {
  validate(p);
  const double a = p.addiction;
  double x = 0.0;
  double sum = 0.0;
  double h = 0.0;
  for (int t = 1; t <= p.horizon; ++t) {
    sum += x;
    const double theta_t = (a * p.theta + sum) / (a + t);
    visit(t, x, theta_t);
    const double ref = p.reference == ScoreReference::Instantaneous ? theta_t : p.theta;
    const double d = ref - x;
    h += 1.0 / (p.delta + d * d);
    const double y = x <= theta_t ? 1.0 : -1.0;
    x += p.omega * y / t;
  }
  return p.normalization == ScoreNormalization::Mean ? h / p.horizon : h;
}

}  // namespace detail

inline double simulate_score(const SimParams& p) {
  return detail::run_loop(p, [](int, double, double) {});
}

// Content positions x_1..x_T and preferences theta_1..theta_T.
struct Trajectory {
  std::vector<double> x;
  std::vector<double> theta;
};

inline Trajectory simulate_trajectory(const SimParams& p) {
  Trajectory tr;
  detail::run_loop(p, [&](int, double x, double th) {
    tr.x.push_back(x);
    tr.theta.push_back(th);
  });
  return tr;
}

struct ExperimentConfig {
  double theta = 0.2;
  double addiction_measure = 50.0;
  double addiction_goal = 5.0;
  int horizon = 100;
  double delta = 1e-5;
  std::int64_t n_draws = 100000;
  double mu = 0.0;
  double sigma = 3.0;
  std::uint64_t seed = 0;
  ScoreReference reference = ScoreReference::Intrinsic;
  ScoreNormalization normalization = ScoreNormalization::Mean;
  int histogram_bins = 50;
  unsigned threads = 0;
};

struct Draw {
  double omega = 0.0;
  double m_value = 0.0;
  double g_value = 0.0;
};

struct Histogram {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::int64_t> counts;
};

struct ExperimentResult {
  std::vector<Draw> draws;
  double correlation = 0.0;
  Draw best_by_goal;
  Draw best_by_measure;
  Histogram discrepancy_histogram;
  double discrepancy_skew = 0.0;
  double discrepancy_kurtosis = 0.0;  // non-excess; 3 for a Gaussian
};

inline void validate(const ExperimentConfig& c) {
  if (c.n_draws < 100) throw ConfigError("feedback: n_draws must be at least 100");
  if (c.histogram_bins < 1) throw ConfigError("feedback: histogram needs at least one bin");
  if (!(c.sigma >= 0.0) || !std::isfinite(c.mu)) throw ConfigError("feedback: invalid log-normal parameters");
  validate(SimParams{c.theta, c.addiction_measure, c.horizon, c.delta, 0.0, c.reference, c.normalization});
  validate(SimParams{c.theta, c.addiction_goal, c.horizon, c.delta, 0.0, c.reference, c.normalization});
}

// omega for draw i: exp(mu + sigma z) with z from uniform i of stream 0.
inline double omega_draw(const ExperimentConfig& c, std::uint64_t i) {
  const CounterRng rng{c.seed, 0, 0};
  const double z = quantile(normal(1.0), rng.uniform_at(i));
  return std::exp(c.mu + c.sigma * z);
}

inline double pearson(const std::vector<Draw>& d) {
  const auto n = static_cast<double>(d.size());
  double mm = 0.0, mg = 0.0;
  for (const auto& r : d) {
    mm += r.m_value;
    mg += r.g_value;
  }
  mm /= n;
  mg /= n;
  double smm = 0.0, sgg = 0.0, smg = 0.0;
  for (const auto& r : d) {
    smm += (r.m_value - mm) * (r.m_value - mm);
    sgg += (r.g_value - mg) * (r.g_value - mg);
    smg += (r.m_value - mm) * (r.g_value - mg);
  }
  return (smm > 0.0 && sgg > 0.0) ? smg / std::sqrt(smm * sgg) : 1.0;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  validate(c);
  ExperimentResult r;
  const auto n = static_cast<std::size_t>(c.n_draws);
  r.draws.resize(n);
  parallel_for(n, c.threads, [&](std::size_t i) {
    const double w = omega_draw(c, i);
    SimParams p{c.theta, c.addiction_measure, c.horizon, c.delta, w, c.reference, c.normalization};
    const double m = simulate_score(p);
    p.addiction = c.addiction_goal;
    const double g = simulate_score(p);
    r.draws[i] = {w, m, g};
  });
  r.correlation = pearson(r.draws);

  // Strict comparisons keep the lowest draw index on ties.
  std::size_t bg = 0, bm = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (r.draws[i].g_value > r.draws[bg].g_value) bg = i;
    if (r.draws[i].m_value > r.draws[bm].m_value) bm = i;
  }
  r.best_by_goal = r.draws[bg];
  r.best_by_measure = r.draws[bm];

  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = r.draws[i].m_value - r.draws[i].g_value;
  const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
  Histogram& hist = r.discrepancy_histogram;
  hist.lower = *lo;
  hist.upper = *hi;
  hist.counts.assign(static_cast<std::size_t>(c.histogram_bins), 0);
  const double width = (hist.upper - hist.lower) / c.histogram_bins;
  for (double v : diff) {
    auto b = width > 0.0 ? static_cast<std::int64_t>((v - hist.lower) / width) : 0;
    b = std::clamp<std::int64_t>(b, 0, c.histogram_bins - 1);
    ++hist.counts[static_cast<std::size_t>(b)];
  }

  double mu = 0.0;
  for (double v : diff) mu += v;
  mu /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : diff) {
    const double d = v - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  r.discrepancy_skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  r.discrepancy_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  return r;
}

}  // namespace goodhart::feedback
