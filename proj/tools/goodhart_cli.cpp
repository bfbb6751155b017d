// goodhart: command-line front end for sweeps, validation campaigns, the
// worst-case construction and the recommender feedback experiment.
//
// Exit codes: 0 success, 1 validation or numerical failure, 2 bad
// configuration. Diagnostics go to stderr prefixed with "error:".

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "goodhart/goodhart.hpp"
#include "json.hpp"

namespace {

using namespace goodhart;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct ScenarioSource {
  std::string name;
  std::string config;
  std::optional<double> epsilon;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::string dump_config;
};

void add_scenario_flags(CLI::App* cmd, ScenarioSource& src) {
  cmd->add_option("--scenario", src.name,
                  "named scenario: uniform-exp, normal-normal, uniform-power, power-power, uniform-lognormal");
  cmd->add_option("--config", src.config, "scenario JSON file");
  cmd->add_option("--epsilon", src.epsilon, "noise-to-signal calibration for a named scenario");
  cmd->add_option("--beta", src.beta, "power-law discrepancy decay");
  cmd->add_option("--gamma", src.gamma, "power-law goal decay");
  cmd->add_option("--dump-config", src.dump_config, "write the resolved scenario as JSON to this path");
}

Scenario resolve_scenario(const ScenarioSource& src) {
  if (src.name.empty() == src.config.empty()) throw ConfigError("give exactly one of --scenario or --config");
  Scenario s;
  if (!src.config.empty()) {
    if (src.epsilon || src.beta || src.gamma)
      throw ConfigError("--epsilon/--beta/--gamma only apply to --scenario; put them in the config file");
    json j;
    try {
      j = json::parse(io::read_file(src.config));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON in '") + src.config + "': " + e.what());
    }
    s = scenario_from_json(j);
  } else {
    if (!src.epsilon) throw ConfigError("--scenario needs --epsilon");
    try {
      s = named_scenario(src.name, *src.epsilon, src.beta, src.gamma);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (!src.dump_config.empty()) io::write_atomic(src.dump_config, to_json(s).dump(2) + "\n");
  return s;
}

std::vector<double> split_numbers(const std::string& spec, std::size_t count, const char* what) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " '" + spec + "'");
    }
  }
  if (out.size() != count) throw ConfigError(std::string("bad ") + what + " '" + spec + "'");
  return out;
}

// "max:min:points", log-spaced.
AlphaLogGrid parse_alpha_grid(const std::string& spec) {
  const auto v = split_numbers(spec, 3, "--alpha-grid (expected max:min:points)");
  AlphaLogGrid g{v[0], v[1], static_cast<int>(v[2])};
  if (static_cast<double>(g.points) != v[2]) throw ConfigError("--alpha-grid point count must be an integer");
  try {
    grid_values(g);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return g;
}

// "min:max:points", linearly spaced.
ThresholdGrid parse_m_grid(const std::string& spec) {
  const auto v = split_numbers(spec, 3, "--m-grid (expected min:max:points)");
  ThresholdGrid g{v[0], v[1], static_cast<int>(v[2])};
  if (static_cast<double>(g.points) != v[2]) throw ConfigError("--m-grid point count must be an integer");
  try {
    grid_values(g);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return g;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else io::write_atomic(path, content);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  ScenarioSource src;
  std::string alpha_grid;
  std::string m_grid;
  std::string out;
  unsigned threads = 0;
  std::uint64_t mc_n = 0;
  std::uint64_t seed = 42;
};

int run_sweep(const SweepArgs& a) {
  const Scenario s = resolve_scenario(a.src);
  if (!a.alpha_grid.empty() && !a.m_grid.empty()) throw ConfigError("give at most one of --alpha-grid or --m-grid");
  std::vector<TruncatedStats> rows;
  if (a.mc_n > 0) {
    if (!a.m_grid.empty()) throw ConfigError("Monte Carlo sweeps take an --alpha-grid");
    McConfig cfg;
    cfg.n = a.mc_n;
    cfg.seed = a.seed;
    cfg.alphas = grid_values(parse_alpha_grid(a.alpha_grid.empty() ? "0.5:0.001:4" : a.alpha_grid));
    cfg.threads = a.threads;
    rows = run(s, cfg).rows;
  } else if (!a.m_grid.empty()) {
    rows = sweep(s, parse_m_grid(a.m_grid), a.threads).rows;
  } else {
    rows = sweep(s, parse_alpha_grid(a.alpha_grid.empty() ? "1:1e-9:64" : a.alpha_grid), a.threads).rows;
  }
  emit(a.out, io::stats_csv(rows));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
  ScenarioSource src;
  std::string matrix;
  std::string alpha_list;
  std::string out;
  std::string csv_dir;
  unsigned threads = 0;
  std::uint64_t mc_n = 1000000;
  std::uint64_t seed = 42;
  int bootstrap = 200;
};

std::vector<double> parse_alpha_list(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad --alphas entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--alphas is empty");
  return out;
}

int run_validate(const ValidateArgs& a) {
  std::vector<MatrixScenario> scenarios;
  if (!a.matrix.empty()) {
    if (a.matrix != "reference") throw ConfigError("unknown --matrix '" + a.matrix + "' (expected 'reference')");
    if (!a.src.name.empty() || !a.src.config.empty()) throw ConfigError("--matrix excludes --scenario and --config");
    scenarios = reference_scenarios();
  } else {
    const Scenario s = resolve_scenario(a.src);
    scenarios.push_back({a.src.name.empty() ? a.src.config : a.src.name, s});
  }
  const std::vector<double> alphas = a.alpha_list.empty() ? reference_alphas() : parse_alpha_list(a.alpha_list);
  McBudget budget{a.mc_n, a.seed, a.bootstrap, a.threads};
  if (a.mc_n > 0) {
    McConfig probe;
    probe.n = a.mc_n;
    probe.alphas = alphas;
    probe.bootstrap = a.bootstrap;
    validate(probe);
  }
  const ValidationReport rep = validation_matrix(scenarios, alphas, budget);
  emit(a.out, to_json(rep).dump(2) + "\n");
  if (!a.csv_dir.empty()) {
    std::filesystem::create_directories(a.csv_dir);
    for (const auto& sc : scenarios) {
      std::vector<TruncatedStats> rows;
      for (const auto& e : rep.entries) {
        if (e.scenario != sc.id) continue;
        rows.push_back(e.quadrature);
        if (e.monte_carlo) rows.push_back(*e.monte_carlo);
      }
      const std::string stem = std::filesystem::path(sc.id).stem().string();
      io::write_atomic(std::filesystem::path(a.csv_dir) / (stem + ".csv"), io::stats_csv(rows));
    }
  }
  if (!rep.pass()) {
    std::cerr << "error: validation failed (closed-form failures " << rep.closed_form_failures << ", Monte Carlo pass "
              << rep.mc_fields_passed << "/" << rep.mc_fields << ")\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// worst-case

struct WorstCaseArgs {
  double epsilon = 0.1;
  std::string m_grid = "10:10000:4";
  std::string out;
};

int run_worst_case(const WorstCaseArgs& a) {
  const auto v = split_numbers(a.m_grid, 3, "--m-grid (expected min:max:points, log-spaced)");
  if (static_cast<double>(static_cast<int>(v[2])) != v[2]) throw ConfigError("--m-grid point count must be an integer");
  if (!(a.epsilon > 0.0)) throw ConfigError("--epsilon must be positive");
  if (!(v[0] >= std::max(a.epsilon, 2.0))) throw ConfigError("worst-case thresholds must be at least max(epsilon, 2)");
  std::vector<worst_case::WorstCasePoint> pts;
  try {
    pts = worst_case::threshold_sweep(a.epsilon, v[0], v[1], static_cast<int>(v[2]));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  emit(a.out, io::worst_case_csv(pts));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// feedback-sim

struct FeedbackArgs {
  feedback::ExperimentConfig cfg;
  std::string reference = "intrinsic";
  std::string normalization = "mean";
  std::string out;
  std::string summary;
};

json summary_json(const feedback::ExperimentConfig& c, const feedback::ExperimentResult& r) {
  auto draw = [](const feedback::Draw& d) { return json{{"omega", d.omega}, {"m", d.m_value}, {"g", d.g_value}}; };
  json j;
  j["config"] = {{"theta", c.theta},
                 {"alpha_measure", c.addiction_measure},
                 {"alpha_goal", c.addiction_goal},
                 {"horizon", c.horizon},
                 {"delta", c.delta},
                 {"n", c.n_draws},
                 {"mu", c.mu},
                 {"sigma", c.sigma},
                 {"seed", c.seed},
                 {"score_reference", std::string(feedback::reference_name(c.reference))},
                 {"score_normalization", std::string(feedback::normalization_name(c.normalization))}};
  j["correlation"] = r.correlation;
  j["best_by_goal"] = draw(r.best_by_goal);
  j["best_by_measure"] = draw(r.best_by_measure);
  j["histogram"] = {{"lower", r.discrepancy_histogram.lower},
                    {"upper", r.discrepancy_histogram.upper},
                    {"counts", r.discrepancy_histogram.counts}};
  j["skew"] = r.discrepancy_skew;
  j["kurtosis"] = r.discrepancy_kurtosis;
  return j;
}

int run_feedback(FeedbackArgs a) {
  a.cfg.reference = feedback::parse_reference(a.reference);
  a.cfg.normalization = feedback::parse_normalization(a.normalization);
  const auto r = feedback::run_experiment(a.cfg);
  if (!a.out.empty()) io::write_atomic(a.out, io::draws_csv(r.draws));
  emit(a.summary, summary_json(a.cfg, r).dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// asymptote

struct AsymptoteArgs {
  ScenarioSource src;
  std::string alpha_grid = "0.001:1e-12:10";
  std::string out;
  unsigned threads = 0;
};

int run_asymptote(const AsymptoteArgs& a) {
  const Scenario s = resolve_scenario(a.src);
  const auto alphas = grid_values(parse_alpha_grid(a.alpha_grid));
  const ScenarioKind kind = kind_of(s);
  if (kind != ScenarioKind::NormalNormal && kind != ScenarioKind::UniformPower && kind != ScenarioKind::PowerPower)
    throw ConfigError("asymptote: no leading-order prediction for this scenario family");
  std::vector<TruncatedStats> rows(alphas.size());
  parallel_for(alphas.size(), a.threads, [&](std::size_t i) { rows[i] = truncated_stats(s, alphas[i]); });
  std::ostringstream os;
  os << "alpha,m_alpha,rho_alpha,predicted,ratio,outside_validity\n";
  for (const auto& r : rows) {
    AsymptoticPrediction p;
    if (kind == ScenarioKind::NormalNormal) p = normal_rho_asymptotic(s.discrepancy.scale, r.alpha);
    else if (kind == ScenarioKind::UniformPower)
      p = uniform_power_rho_asymptotic(s.discrepancy.shape, s.discrepancy.scale, r.alpha);
    else p = power_power_rho_asymptotic(s.discrepancy.shape, s.goal.shape, s.epsilon, r.alpha);
    os << io::fmt(r.alpha) << ',' << io::fmt(r.m_alpha) << ',' << io::fmt(r.rho_alpha) << ',' << io::fmt(p.value)
       << ',' << io::fmt(r.rho_alpha / p.value) << ',' << (p.outside_validity ? "true" : "false") << '\n';
  }
  emit(a.out, os.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  ScenarioSource src;
  std::string alpha_grid = "1:1e-9:64";
  std::string out;
  unsigned threads = 0;
  ClassifyOptions opt;
};

int run_classify(const ClassifyArgs& a) {
  const Scenario s = resolve_scenario(a.src);
  const SweepTable t = sweep(s, parse_alpha_grid(a.alpha_grid), a.threads);
  RegimeVerdict v;
  try {
    v = classify(t, a.opt);
  } catch (const InsufficientSweep& e) {
    throw ConfigError(e.what());
  }
  emit(a.out, to_json(v).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-alpha selection statistics for Goodhart's law experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "conditional statistics along an alpha or threshold grid (CSV)");
  add_scenario_flags(sweep_cmd, sweep_args.src);
  sweep_cmd->add_option("--alpha-grid", sweep_args.alpha_grid, "max:min:points, log-spaced (default 1:1e-9:64)");
  sweep_cmd->add_option("--m-grid", sweep_args.m_grid, "min:max:points, linear thresholds");
  sweep_cmd->add_option("--out", sweep_args.out, "output CSV path (stdout if omitted)");
  sweep_cmd->add_option("--threads", sweep_args.threads, "worker count (0 = GOODHART_THREADS or all cores)");
  sweep_cmd->add_option("--mc-n", sweep_args.mc_n, "use Monte Carlo with this many draws instead of quadrature");
  sweep_cmd->add_option("--seed", sweep_args.seed, "Monte Carlo seed");

  ValidateArgs val_args;
  auto* val_cmd = app.add_subcommand("validate", "quadrature vs closed forms vs Monte Carlo (JSON report)");
  add_scenario_flags(val_cmd, val_args.src);
  val_cmd->add_option("--matrix", val_args.matrix, "'reference' runs the five reference scenarios");
  val_cmd->add_option("--alphas", val_args.alpha_list, "comma-separated alphas (default 0.5,0.1,0.01,0.001)");
  val_cmd->add_option("--out", val_args.out, "output JSON path (stdout if omitted)");
  val_cmd->add_option("--csv-dir", val_args.csv_dir, "also write one stats CSV per scenario here");
  val_cmd->add_option("--threads", val_args.threads, "worker count");
  val_cmd->add_option("--mc-n", val_args.mc_n, "Monte Carlo draws per scenario (0 skips Monte Carlo)");
  val_cmd->add_option("--seed", val_args.seed, "Monte Carlo seed");
  val_cmd->add_option("--bootstrap", val_args.bootstrap, "bootstrap resamples for standard errors");

  WorstCaseArgs wc_args;
  auto* wc_cmd = app.add_subcommand("worst-case", "E[G | M >= m] for the dependent worst-case construction (CSV)");
  wc_cmd->add_option("--epsilon", wc_args.epsilon, "conditional discrepancy scale");
  wc_cmd->add_option("--m-grid", wc_args.m_grid, "min:max:points, log-spaced (default 10:10000:4)");
  wc_cmd->add_option("--out", wc_args.out, "output CSV path (stdout if omitted)");

  FeedbackArgs fb_args;
  auto* fb_cmd = app.add_subcommand("feedback-sim", "recommender feedback-loop experiment (JSON summary)");
  fb_cmd->add_option("--theta", fb_args.cfg.theta, "intrinsic preference");
  fb_cmd->add_option("--alpha-measure", fb_args.cfg.addiction_measure, "addiction coefficient of the measure");
  fb_cmd->add_option("--alpha-goal", fb_args.cfg.addiction_goal, "addiction coefficient of the goal");
  fb_cmd->add_option("--horizon", fb_args.cfg.horizon, "interaction rounds T");
  fb_cmd->add_option("--delta", fb_args.cfg.delta, "satisfaction regularizer");
  fb_cmd->add_option("--n", fb_args.cfg.n_draws, "number of omega draws");
  fb_cmd->add_option("--mu", fb_args.cfg.mu, "log-normal location of omega");
  fb_cmd->add_option("--sigma", fb_args.cfg.sigma, "log-normal shape of omega");
  fb_cmd->add_option("--seed", fb_args.cfg.seed, "seed for the omega stream");
  fb_cmd->add_option("--threads", fb_args.cfg.threads, "worker count");
  fb_cmd->add_option("--score-reference", fb_args.reference, "intrinsic (default) or instantaneous");
  fb_cmd->add_option("--score-normalization", fb_args.normalization, "mean (default) or sum");
  fb_cmd->add_option("--out", fb_args.out, "per-draw CSV path (omega,m,g)");
  fb_cmd->add_option("--summary", fb_args.summary, "summary JSON path (stdout if omitted)");

  AsymptoteArgs as_args;
  auto* as_cmd = app.add_subcommand("asymptote", "quadrature rho against its leading-order prediction (CSV)");
  add_scenario_flags(as_cmd, as_args.src);
  as_cmd->add_option("--alpha-grid", as_args.alpha_grid, "max:min:points, log-spaced");
  as_cmd->add_option("--out", as_args.out, "output CSV path (stdout if omitted)");
  as_cmd->add_option("--threads", as_args.threads, "worker count");

  ClassifyArgs cl_args;
  auto* cl_cmd = app.add_subcommand("classify", "weak / strong / no Goodhart verdict for a sweep (JSON)");
  add_scenario_flags(cl_cmd, cl_args.src);
  cl_cmd->add_option("--alpha-grid", cl_args.alpha_grid, "max:min:points, log-spaced; must reach 1e-6");
  cl_cmd->add_option("--out", cl_args.out, "output JSON path (stdout if omitted)");
  cl_cmd->add_option("--threads", cl_args.threads, "worker count");
  cl_cmd->add_option("--strong-threshold", cl_args.opt.strong_threshold, "rho below this marks strong Goodhart");
  cl_cmd->add_option("--no-goodhart-margin", cl_args.opt.no_goodhart_margin,
                     "final rho within this of the maximum marks no Goodhart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*val_cmd) return run_validate(val_args);
    if (*wc_cmd) return run_worst_case(wc_args);
    if (*fb_cmd) return run_feedback(fb_args);
    if (*as_cmd) return run_asymptote(as_args);
    if (*cl_cmd) return run_classify(cl_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}
