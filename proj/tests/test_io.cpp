#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "goodhart/io.hpp"
#include "goodhart/truncation.hpp"

using namespace goodhart;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::size_t count_commas(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), ',')); }

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("goodhart_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Format, RoundTripsDoubles) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(std::strtod(io::fmt(v).c_str(), nullptr), v) << io::fmt(v);
  }
  EXPECT_EQ(io::fmt(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::fmt(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(io::fmt(std::nan("")), "nan");
}

TEST(StatsCsv, HeaderAndColumns) {
  const SweepTable t = sweep(normal_normal(0.1), AlphaLogGrid{1.0, 1e-3, 4});
  const auto lines = split_lines(io::stats_csv(t.rows));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "alpha,m_alpha,e_g,e_xi,var_g,var_xi,cov_gxi,rho_alpha,method");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_EQ(count_commas(lines[i]), 8u);
    EXPECT_NE(lines[i].find(",quadrature"), std::string::npos);
  }
  EXPECT_EQ(lines[1].rfind("1,-inf,", 0), 0u);
}

TEST(StatsCsv, StandardErrorColumnsWhenPresent) {
  TruncatedStats a = truncated_stats(normal_normal(0.1), 0.5);
  TruncatedStats b = a;
  b.method = Method::MonteCarlo;
  b.std_errors = StdErrors{};
  b.std_errors->e_g = 0.25;
  b.std_errors->rho_alpha = 0.125;
  const auto lines = split_lines(io::stats_csv({a, b}));
  EXPECT_EQ(lines[0], std::string(io::kStatsHeader) + ",se_e_g,se_rho");
  EXPECT_EQ(count_commas(lines[1]), 10u);
  EXPECT_NE(lines[2].find(",monte_carlo,0.25,0.125"), std::string::npos);
}

TEST(StatsCsv, ValuesRoundTrip) {
  const TruncatedStats t = truncated_stats(uniform_power(3.5, 1.0 / 256), 1e-5);
  const std::string row = io::stats_row(t, false);
  std::vector<double> vals;
  std::istringstream is(row);
  for (std::string cell; std::getline(is, cell, ',');) vals.push_back(std::strtod(cell.c_str(), nullptr));
  ASSERT_EQ(vals.size(), 9u);
  EXPECT_EQ(vals[0], t.alpha);
  EXPECT_EQ(vals[1], t.m_alpha);
  EXPECT_EQ(vals[2], t.e_g);
  EXPECT_EQ(vals[7], t.rho_alpha);
}

TEST(OtherCsv, Headers) {
  EXPECT_EQ(split_lines(io::worst_case_csv({{10.0, -1.5}}))[0], "m,e_g");
  EXPECT_EQ(split_lines(io::worst_case_csv({{10.0, -1.5}}))[1], "10,-1.5");
  EXPECT_EQ(split_lines(io::draws_csv({{0.5, 2.0, 3.0}}))[0], "omega,m,g");
  EXPECT_EQ(split_lines(io::draws_csv({{0.5, 2.0, 3.0}}))[1], "0.5,2,3");
}

TEST(WriteAtomic, WritesAndReplaces) {
  const fs::path d = scratch_dir();
  const fs::path f = d / "out.csv";
  io::write_atomic(f, "first\n");
  EXPECT_EQ(io::read_file(f), "first\n");
  io::write_atomic(f, "second\n");
  EXPECT_EQ(io::read_file(f), "second\n");
  EXPECT_FALSE(fs::exists(d / "out.csv.tmp"));
  fs::remove_all(d);
}

TEST(WriteAtomic, MissingDirectoryIsConfigError) {
  EXPECT_THROW(io::write_atomic("/nonexistent-dir-for-test/x.csv", "x"), ConfigError);
  EXPECT_THROW(io::read_file("/nonexistent-dir-for-test/x.csv"), ConfigError);
}
