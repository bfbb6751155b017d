#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "feedback_sim.hpp"
#include "stats.hpp"
#include "worst_case.hpp"

namespace goodhart::io {

inline constexpr const char* kStatsHeader = "alpha,m_alpha,e_g,e_xi,var_g,var_xi,cov_gxi,rho_alpha,method";
inline constexpr const char* kMcExtraHeader = ",se_e_g,se_rho";

// 17 significant digits, enough to round-trip any double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string stats_row(const TruncatedStats& t, bool with_se) {
  std::string out = fmt(t.alpha) + ',' + fmt(t.m_alpha) + ',' + fmt(t.e_g) + ',' + fmt(t.e_xi) + ',' + fmt(t.var_g) +
                    ',' + fmt(t.var_xi) + ',' + fmt(t.cov_gxi) + ',' + fmt(t.rho_alpha) + ',' +
                    std::string(method_name(t.method));
  if (with_se) {
    const StdErrors se = t.std_errors.value_or(StdErrors{});
    out += ',' + fmt(se.e_g) + ',' + fmt(se.rho_alpha);
  }
  return out;
}

// Stats CSV. The standard-error columns appear when any row carries them.
inline std::string stats_csv(const std::vector<TruncatedStats>& rows) {
  bool with_se = false;
  for (const auto& r : rows) with_se = with_se || r.std_errors.has_value();
  std::ostringstream os;
  os << kStatsHeader << (with_se ? kMcExtraHeader : "") << '\n';
  for (const auto& r : rows) os << stats_row(r, with_se) << '\n';
  return os.str();
}

inline std::string worst_case_csv(const std::vector<worst_case::WorstCasePoint>& pts) {
  std::ostringstream os;
  os << "m,e_g\n";
  for (const auto& p : pts) os << fmt(p.m) << ',' << fmt(p.e_g) << '\n';
  return os.str();
}

inline std::string draws_csv(const std::vector<feedback::Draw>& draws) {
  std::ostringstream os;
  os << "omega,m,g\n";
  for (const auto& d : draws) os << fmt(d.omega) << ',' << fmt(d.m_value) << ',' << fmt(d.g_value) << '\n';
  return os.str();
}

// Writes to a sibling temporary file and renames it over the target, so
// readers never observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("cannot move output into place at '" + path.string() + "'");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace goodhart::io
