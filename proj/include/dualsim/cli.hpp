#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dualsim/config.hpp"
#include "dualsim/experiments.hpp"
#include "dualsim/io.hpp"

namespace dualsim {

inline constexpr std::uint64_t kDefaultSeed = 1;

struct CliOptions {
  std::string config_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_reps;
  std::optional<double> horizon;
  std::optional<double> dt;
  std::string backend;
  std::string rate_policy;
  std::string firing_law;
  std::string out_dir;
  bool plot = false;
  unsigned threads = 0;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << content;
  if (content.empty() || content.back() != '\n') out << '\n';
}

// Flags override the config file, which overrides DUALSIM_SEED.
inline std::uint64_t resolve_seed(const CliOptions& opt, const ConfigDocument& doc) {
  if (opt.seed) return *opt.seed;
  if (doc.seed) return *doc.seed;
  if (const char* env = std::getenv("DUALSIM_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw SimError(ErrorCode::InvalidArgument, "DUALSIM_SEED is not an unsigned integer: " + std::string(s));
    }
    return v;
  }
  return kDefaultSeed;
}

inline ConfigDocument load_config(const CliOptions& opt) {
  ConfigDocument doc;
  if (!opt.config_path.empty()) {
    doc = parse_config(read_file(opt.config_path));
    if (!opt.scenario.empty()) throw SimError(ErrorCode::InvalidArgument, "give --config or --scenario, not both");
  } else {
    doc.scenario = find_scenario(opt.scenario);
  }
  ScenarioConfig& cfg = doc.scenario;
  if (opt.n_reps) cfg.n_reps = *opt.n_reps;
  if (opt.horizon) cfg.horizon = *opt.horizon;
  if (opt.dt) {
    cfg.engine.dt = *opt.dt;
    cfg.ode_dt = *opt.dt;
  }
  if (!opt.backend.empty()) cfg.engine.backend = parse_backend(opt.backend);
  if (!opt.rate_policy.empty()) cfg.engine.rate_policy = parse_rate_policy(opt.rate_policy);
  if (!opt.firing_law.empty()) cfg.engine.firing_law = parse_firing_law(opt.firing_law);
  if (opt.threads) cfg.engine.threads = opt.threads;
  if (!opt.out_dir.empty()) doc.out_dir = opt.out_dir;
  doc.plot = doc.plot || opt.plot;
  validate_scenario(cfg);
  return doc;
}

inline std::filesystem::path prepare_out_dir(const ConfigDocument& doc) {
  std::filesystem::path dir = doc.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(doc.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Header plus the last `n` rows of a trajectory CSV.
inline std::string tail_rows(const std::string& csv, std::size_t n) {
  const auto header_end = csv.find('\n');
  if (header_end == std::string::npos) return csv;
  std::size_t pos = csv.size();
  for (std::size_t k = 0; k < n && pos > header_end; ++k) {
    pos = csv.rfind('\n', pos - 1);
    if (pos == std::string::npos || pos <= header_end) {
      pos = header_end;
      break;
    }
  }
  return csv.substr(0, header_end) + csv.substr(pos);
}

inline void write_plots(const std::filesystem::path& dir, const Trajectory* ode, const Trajectory* abm) {
  const Trajectory& any = ode ? *ode : *abm;
  for (const auto& sp : any.species) write_file(dir / ("plot-" + sp + ".svg"), svg_plot(ode, abm, sp));
}

inline void print_header(std::ostream& out, const ScenarioConfig& cfg, std::uint64_t seed) {
  out << "scenario " << cfg.name << " (" << cfg.description << "), seed " << seed << ", horizon " << cfg.horizon
      << " days\n";
}

inline int cmd_list(std::ostream& out) {
  for (const auto& s : scenario_registry()) out << std::left << std::setw(12) << s.name << ' ' << s.description << '\n';
  return 0;
}

inline int cmd_run_ode(const CliOptions& opt, std::ostream& out) {
  const ConfigDocument doc = load_config(opt);
  const ModelSpec model = build_model(doc.scenario);
  const Trajectory ode = run_ode(doc.scenario, model);
  const auto dir = prepare_out_dir(doc);
  const std::string csv = trajectory_csv(ode);
  write_file(dir / "ode.csv", csv);
  if (doc.plot) write_plots(dir, &ode, nullptr);
  print_header(out, doc.scenario, resolve_seed(opt, doc));
  out << tail_rows(csv, 5) << '\n';
  out << "clamp events: " << ode.clamp_events << "; wrote " << (dir / "ode.csv").string() << '\n';
  return 0;
}

inline int cmd_run_abm(const CliOptions& opt, std::ostream& out) {
  const ConfigDocument doc = load_config(opt);
  const std::uint64_t seed = resolve_seed(opt, doc);
  const ModelSpec model = build_model(doc.scenario);
  const Ensemble ens = run_ensemble(model, initial_counts(doc.scenario, model), doc.scenario.engine,
                                    doc.scenario.horizon, doc.scenario.n_reps, seed);
  const auto dir = prepare_out_dir(doc);
  const std::string mean_csv = trajectory_csv(ens.mean);
  write_file(dir / "abm-mean.csv", mean_csv);
  for (std::size_t k = 0; k < ens.size(); ++k) {
    write_file(dir / ("abm-rep-" + std::to_string(k) + ".csv"), trajectory_csv(ens.replications[k]));
  }
  if (doc.plot) write_plots(dir, nullptr, &ens.mean);
  print_header(out, doc.scenario, seed);
  out << "ABM mean over " << ens.size() << " replications:\n" << tail_rows(mean_csv, 5) << '\n';
  out << "clamp events: " << ens.mean.clamp_events << "; wrote " << (dir / "abm-mean.csv").string() << " and "
      << ens.size() << " replication files\n";
  return 0;
}

inline int cmd_compare(const CliOptions& opt, std::ostream& out) {
  const ConfigDocument doc = load_config(opt);
  const std::uint64_t seed = resolve_seed(opt, doc);
  const ExperimentResult r = run_experiment(doc.scenario, seed);
  const auto dir = prepare_out_dir(doc);
  write_file(dir / "ode.csv", emit_csv(r, "ode"));
  write_file(dir / "abm-mean.csv", emit_csv(r, "abm-mean"));
  write_file(dir / "report.csv", emit_csv(r, "report"));
  if (doc.plot) write_plots(dir, &r.ode, &r.abm.mean);

  print_header(out, doc.scenario, seed);
  out << "Wilcoxon rank-sum, ODE vs ABM mean (" << doc.scenario.n_reps << " replications), n=" << r.comparison.n_ode
      << "/" << r.comparison.n_abm << ", alpha " << r.comparison.alpha << '\n';
  for (const auto& row : r.comparison.rows) {
    out << "  " << std::left << std::setw(10) << row.species << " U=" << std::setw(10) << format_number(row.U)
        << " p=" << std::setw(12) << std::setprecision(4) << row.p << ' '
        << (row.reject ? "reject" : "fail to reject") << '\n';
  }
  const std::size_t n = r.comparison.rows.size();
  const std::size_t rej = r.comparison.rejections();
  if (rej == 0) {
    out << "fail to reject (" << n << "/" << n << " species)\n";
  } else {
    out << "reject (" << rej << "/" << n << " species)\n";
  }
  return 0;
}

inline int cmd_census(const CliOptions& opt, std::ostream& out) {
  const ConfigDocument doc = load_config(opt);
  const std::uint64_t seed = resolve_seed(opt, doc);
  const ScenarioConfig& cfg = doc.scenario;
  if (cfg.census.empty()) throw SimError(ErrorCode::InvalidArgument, cfg.name + " defines no census predicates");
  const ModelSpec model = build_model(cfg);
  const Ensemble ens = run_ensemble(model, initial_counts(cfg, model), cfg.engine, cfg.horizon, cfg.n_reps, seed);
  const auto rows = extreme_case_census(ens.replications, cfg.census);
  const auto dir = prepare_out_dir(doc);
  write_file(dir / "census.csv", census_csv(rows));
  print_header(out, cfg, seed);
  for (const auto& row : rows) {
    out << "  " << std::left << std::setw(34) << row.predicate << ' ' << row.count << "/" << row.total << " ("
        << format_number(row.frequency) << ")\n";
  }
  return 0;
}

}  // namespace detail

// Exit codes: 0 success, 1 usage error, 2 runtime error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tumour-immune simulations: ODE models and their agent-based counterparts", "dualsim"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_common = [&](CLI::App* sub, bool stochastic) {
    auto* config = sub->add_option("--config", opt.config_path, "JSON configuration file");
    auto* scenario = sub->add_option("--scenario", opt.scenario, "registry scenario name");
    config->excludes(scenario);
    sub->add_option("--horizon", opt.horizon, "days to simulate")->check(CLI::PositiveNumber);
    sub->add_option("--dt", opt.dt, "time step")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out_dir, "output directory (default: current directory)");
    sub->add_flag("--plot", opt.plot, "write an SVG chart per species");
    sub->add_option("--seed", opt.seed, "base seed (overrides config and DUALSIM_SEED)");
    if (stochastic) {
      sub->add_option("--n-reps", opt.n_reps, "ABM replications")->check(CLI::PositiveNumber);
      sub->add_option("--backend", opt.backend, "tau-leap or per-agent")
          ->check(CLI::IsMember({"tau-leap", "per-agent"}));
      sub->add_option("--rate-policy", opt.rate_policy, "live or frozen-at-birth")
          ->check(CLI::IsMember({"live", "frozen-at-birth"}));
      sub->add_option("--firing-law", opt.firing_law, "linear or exponential")
          ->check(CLI::IsMember({"linear", "exponential"}));
      sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
    }
    sub->callback([sub, config, scenario] {
      if (config->count() == 0 && scenario->count() == 0) {
        throw CLI::RequiredError(sub->get_name() + ": --config or --scenario is required");
      }
    });
  };

  auto* list = app.add_subcommand("list-scenarios", "print the scenario registry");
  auto* run_ode_cmd = app.add_subcommand("run-ode", "integrate the ODE model");
  auto* run_abm_cmd = app.add_subcommand("run-abm", "run the agent-based ensemble");
  auto* compare = app.add_subcommand("compare", "ODE vs ABM mean with a Wilcoxon rank-sum test per species");
  auto* census = app.add_subcommand("census", "frequency of extreme outcomes across replications");
  add_common(run_ode_cmd, false);
  add_common(run_abm_cmd, true);
  add_common(compare, true);
  add_common(census, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (list->parsed()) return detail::cmd_list(out);
    if (run_ode_cmd->parsed()) return detail::cmd_run_ode(opt, out);
    if (run_abm_cmd->parsed()) return detail::cmd_run_abm(opt, out);
    if (compare->parsed()) return detail::cmd_compare(opt, out);
    if (census->parsed()) return detail::cmd_census(opt, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace dualsim
