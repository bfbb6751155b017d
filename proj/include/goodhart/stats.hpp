#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "scenario.hpp"

namespace goodhart {

enum class Method { Quadrature, ClosedForm, Asymptotic, MonteCarlo };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Quadrature: return "quadrature";
    case Method::ClosedForm: return "closed_form";
    case Method::Asymptotic: return "asymptotic";
    case Method::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

struct StdErrors {
  double m_alpha = 0.0;
  double e_g = 0.0;
  double e_xi = 0.0;
  double e_g2 = 0.0;
  double e_xi2 = 0.0;
  double e_gxi = 0.0;
  double var_g = 0.0;
  double var_xi = 0.0;
  double cov_gxi = 0.0;
  double rho_alpha = 0.0;
};

// Conditional statistics of the top-alpha selection {M >= m_alpha}.
struct TruncatedStats {
  double alpha = 1.0;
  double m_alpha = -inf;
  double e_g = 0.0;
  double e_xi = 0.0;
  double e_g2 = 0.0;
  double e_xi2 = 0.0;
  double e_gxi = 0.0;
  double var_g = 0.0;
  double var_xi = 0.0;
  double cov_gxi = 0.0;
  double cov_gm = 0.0;
  double var_m = 0.0;
  double rho_alpha = 0.0;
  Method method = Method::Quadrature;
  std::optional<StdErrors> std_errors;
};

// Fills the derived fields from means and central second moments.
inline TruncatedStats assemble_stats(double alpha, double m, double e_g, double e_xi, double var_g, double var_xi,
                                     double cov_gxi, Method method) {
  TruncatedStats t;
  t.alpha = alpha;
  t.m_alpha = m;
  t.e_g = e_g;
  t.e_xi = e_xi;
  t.var_g = std::max(var_g, 0.0);
  t.var_xi = std::max(var_xi, 0.0);
  t.cov_gxi = cov_gxi;
  t.e_g2 = t.var_g + e_g * e_g;
  t.e_xi2 = t.var_xi + e_xi * e_xi;
  t.e_gxi = cov_gxi + e_g * e_xi;
  t.cov_gm = t.var_g + cov_gxi;
  t.var_m = std::max(t.var_g + t.var_xi + 2.0 * cov_gxi, 0.0);
  const double denom = std::sqrt(t.var_g * t.var_m);
  t.rho_alpha = denom > 0.0 ? std::clamp(t.cov_gm / denom, -1.0, 1.0) : 0.0;
  t.method = method;
  return t;
}

enum class GridKind { AlphaLogGrid, ThresholdGrid };

struct SweepTable {
  Scenario scenario;
  std::vector<TruncatedStats> rows;
  GridKind grid_kind = GridKind::AlphaLogGrid;
};

}  // namespace goodhart
