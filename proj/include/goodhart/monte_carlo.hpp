#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/poisson.hpp>

#include "distributions.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "stats.hpp"

namespace goodhart {

struct McConfig {
  std::uint64_t n = 1000000;
  std::uint64_t seed = 0;
  std::vector<double> alphas{1.0};
  int bootstrap = 200;
  unsigned threads = 0;
};

struct McResult {
  std::vector<TruncatedStats> rows;  // one per configured alpha, same order
  std::vector<std::uint64_t> survivors;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

inline void validate(const McConfig& c) {
  if (c.n < 1000) throw ConfigError("monte carlo: n must be at least 1000");
  if (c.n > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("monte carlo: n must fit in 32 bits");
  if (c.alphas.empty()) throw ConfigError("monte carlo: alpha list is empty");
  if (c.bootstrap < 2) throw ConfigError("monte carlo: need at least 2 bootstrap resamples");
  for (double a : c.alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("monte carlo: alphas must lie in (0, 1]");
    if (static_cast<double>(c.n) * a < 100.0)
      throw ConfigError("monte carlo: n * alpha must be at least 100 (alpha = " + std::to_string(a) + ")");
  }
}

namespace detail {

struct WeightedMoments {
  double m_alpha = 0.0;
  double e_g = 0.0;
  double e_xi = 0.0;
  double var_g = 0.0;
  double var_xi = 0.0;
  double cov = 0.0;
};

// Two-pass weighted moments over the first `count` entries, in index order.
inline WeightedMoments weighted_moments(const std::vector<double>& g, const std::vector<double>& x,
                                        const std::vector<double>& w, std::size_t count) {
  WeightedMoments r;
  double sw = 0.0, sg = 0.0, sx = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    sw += w[j];
    sg += w[j] * g[j];
    sx += w[j] * x[j];
  }
  r.e_g = sg / sw;
  r.e_xi = sx / sw;
  double sgg = 0.0, sxx = 0.0, sgx = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const double dg = g[j] - r.e_g;
    const double dx = x[j] - r.e_xi;
    sgg += w[j] * dg * dg;
    sxx += w[j] * dx * dx;
    sgx += w[j] * dg * dx;
  }
  r.var_g = sgg / sw;
  r.var_xi = sxx / sw;
  r.cov = sgx / sw;
  return r;
}

inline TruncatedStats to_stats(double alpha, const WeightedMoments& w) {
  return assemble_stats(alpha, w.m_alpha, w.e_g, w.e_xi, w.var_g, w.var_xi, w.cov, Method::MonteCarlo);
}

inline constexpr std::uint64_t kBootstrapStreamBase = 1ull << 32;

}  // namespace detail

// Empirical top-alpha statistics. Draw i uses uniforms from block i of
// stream 0, so results do not depend on the worker count. Survivors are the
// round(n alpha) largest values of M = G + xi (ties broken by draw index).
// Standard errors come from a Poisson bootstrap that also resamples the
// selection threshold.
inline McResult run(const Scenario& s, const McConfig& cfg) {
  validate(cfg);
  const std::uint64_t n = cfg.n;
  const CounterRng draws{cfg.seed, 0, 0};
  std::vector<double> mvals(n);
  constexpr std::size_t chunk = 1 << 16;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  parallel_for(chunks, cfg.threads, [&](std::size_t c) {
    const std::size_t end = std::min<std::size_t>(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      const auto u = draws.uniform_pair(i);
      mvals[i] = quantile(s.goal, u[0]) + quantile(s.discrepancy, u[1]);
    }
  });

  auto survivors_for = [&](double a) {
    return static_cast<std::uint64_t>(std::max<double>(1.0, std::llround(static_cast<double>(n) * a)));
  };
  auto buffer_for = [&](std::uint64_t k) {
    const double extra = 10.0 * std::sqrt(static_cast<double>(k)) + 100.0;
    return std::min<std::uint64_t>(n, k + static_cast<std::uint64_t>(extra));
  };
  std::uint64_t kmax = 0;
  for (double a : cfg.alphas) kmax = std::max(kmax, buffer_for(survivors_for(a)));

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  auto desc = [&](std::uint32_t i, std::uint32_t j) { return mvals[i] > mvals[j] || (mvals[i] == mvals[j] && i < j); };
  if (kmax < n) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kmax), order.end(), desc);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kmax), desc);

  std::vector<double> gs(kmax), xs(kmax), ms(kmax);
  for (std::size_t j = 0; j < kmax; ++j) {
    const auto u = draws.uniform_pair(order[j]);
    gs[j] = quantile(s.goal, u[0]);
    xs[j] = quantile(s.discrepancy, u[1]);
    ms[j] = mvals[order[j]];
  }
  mvals.clear();
  mvals.shrink_to_fit();
  order.clear();
  order.shrink_to_fit();

  McResult out;
  out.n = n;
  out.seed = cfg.seed;
  for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
    const double alpha = cfg.alphas[ai];
    const std::uint64_t k = survivors_for(alpha);
    const std::uint64_t kbuf = buffer_for(k);

    std::vector<double> ones(k, 1.0);
    detail::WeightedMoments point = detail::weighted_moments(gs, xs, ones, k);
    point.m_alpha = ms[k - 1];
    TruncatedStats row = detail::to_stats(alpha, point);

    const int B = cfg.bootstrap;
    std::vector<TruncatedStats> reps(static_cast<std::size_t>(B));
    parallel_for(static_cast<std::size_t>(B), cfg.threads, [&](std::size_t r) {
      const CounterRng rng{cfg.seed, detail::kBootstrapStreamBase * (ai + 1) + r, 0};
      thread_local std::vector<double> w;
      w.resize(((kbuf + 3) / 4) * 4);
      std::int64_t wsum_int = 0;
      for (std::size_t j = 0; j < w.size(); j += 4) {
        const auto blk = rng.block(j / 4);
        for (std::size_t q = 0; q < 4; ++q) {
          const int draw = poisson1_from_bits32(blk[q]);
          w[j + q] = draw;
          if (j + q < kbuf) wsum_int += draw;
        }
      }
      const auto wsum = static_cast<double>(wsum_int);
      double rest = 0.0;
      if (kbuf < n) {
        const double lam = static_cast<double>(n - kbuf);
        const double u = std::min(rng.uniform_at(std::uint64_t{1} << 62), 1.0 - 1e-16);
        rest = boost::math::quantile(boost::math::poisson_distribution<double>(lam), u);
      }
      const double target = std::max(1.0, std::round(alpha * (wsum + rest)));
      double cum = 0.0;
      std::size_t used = 0;
      double m_at = ms[0];
      for (; used < kbuf && cum < target; ++used) {
        if (w[used] == 0.0) continue;
        if (cum + w[used] > target) w[used] = target - cum;
        cum += w[used];
        m_at = ms[used];
      }
      detail::WeightedMoments wm = detail::weighted_moments(gs, xs, w, used);
      wm.m_alpha = m_at;
      reps[r] = detail::to_stats(alpha, wm);
    });

    auto sd = [&](auto field) {
      double mu = 0.0;
      for (const auto& t : reps) mu += field(t);
      mu /= B;
      double ss = 0.0;
      for (const auto& t : reps) ss += (field(t) - mu) * (field(t) - mu);
      return std::sqrt(ss / (B - 1));
    };
    StdErrors se;
    se.m_alpha = sd([](const TruncatedStats& t) { return t.m_alpha; });
    se.e_g = sd([](const TruncatedStats& t) { return t.e_g; });
    se.e_xi = sd([](const TruncatedStats& t) { return t.e_xi; });
    se.e_g2 = sd([](const TruncatedStats& t) { return t.e_g2; });
    se.e_xi2 = sd([](const TruncatedStats& t) { return t.e_xi2; });
    se.e_gxi = sd([](const TruncatedStats& t) { return t.e_gxi; });
    se.var_g = sd([](const TruncatedStats& t) { return t.var_g; });
    se.var_xi = sd([](const TruncatedStats& t) { return t.var_xi; });
    se.cov_gxi = sd([](const TruncatedStats& t) { return t.cov_gxi; });
    se.rho_alpha = sd([](const TruncatedStats& t) { return t.rho_alpha; });
    row.std_errors = se;
    out.rows.push_back(row);
    out.survivors.push_back(k);
  }
  return out;
}

struct FieldComparison {
  std::string field;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double band = 4.0;
  bool flagged = false;
};

struct ComparisonReport {
  double alpha = 0.0;
  std::vector<FieldComparison> fields;
  bool heavy_tail = false;
  std::string note;

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(std::count_if(fields.begin(), fields.end(), [](const auto& f) { return f.flagged; }));
  }
};

struct CompareOptions {
  double band = 4.0;
  double second_moment_band = 4.0;
  bool heavy_tail = false;
};

// Power-law discrepancies with beta <= 5 have slowly converging second-moment
// estimates; those fields, and rho_alpha which is built from them, get a 6 SE
// band.
inline CompareOptions compare_options_for(const Scenario& s) {
  CompareOptions o;
  if (s.discrepancy.family == Family::PowerLaw && s.discrepancy.shape <= 5.0) {
    o.heavy_tail = true;
    o.second_moment_band = 6.0;
  }
  return o;
}

inline ComparisonReport compare(const TruncatedStats& analytic, const TruncatedStats& empirical,
                                const CompareOptions& opt = {}) {
  if (!empirical.std_errors) throw MissingStdErrors("compare: empirical record has no standard errors");
  if (std::abs(analytic.alpha - empirical.alpha) > 1e-9 * std::max(analytic.alpha, empirical.alpha))
    throw DomainError("compare: records refer to different alpha");
  const StdErrors& se = *empirical.std_errors;
  ComparisonReport rep;
  rep.alpha = analytic.alpha;
  rep.heavy_tail = opt.heavy_tail;
  if (opt.heavy_tail)
    rep.note = "power-law discrepancy with beta <= 5: second-moment estimates converge slowly; band widened";
  auto add = [&](const char* name, double a, double e, double s, bool second) {
    FieldComparison f;
    f.field = name;
    f.analytic = a;
    f.empirical = e;
    f.std_error = s;
    f.band = second ? opt.second_moment_band : opt.band;
    if (s > 0.0) f.z = (e - a) / s;
    else f.z = (e == a) ? 0.0 : std::numeric_limits<double>::infinity();
    f.flagged = !(std::abs(f.z) <= f.band);
    rep.fields.push_back(f);
  };
  add("m_alpha", analytic.m_alpha, empirical.m_alpha, se.m_alpha, false);
  add("e_g", analytic.e_g, empirical.e_g, se.e_g, false);
  add("e_xi", analytic.e_xi, empirical.e_xi, se.e_xi, false);
  add("e_g2", analytic.e_g2, empirical.e_g2, se.e_g2, true);
  add("e_xi2", analytic.e_xi2, empirical.e_xi2, se.e_xi2, true);
  add("e_gxi", analytic.e_gxi, empirical.e_gxi, se.e_gxi, true);
  add("var_g", analytic.var_g, empirical.var_g, se.var_g, true);
  add("var_xi", analytic.var_xi, empirical.var_xi, se.var_xi, true);
  add("cov_gxi", analytic.cov_gxi, empirical.cov_gxi, se.cov_gxi, true);
  add("rho_alpha", analytic.rho_alpha, empirical.rho_alpha, se.rho_alpha, true);
  return rep;
}

}  // namespace goodhart
