// grp: command-line front end for the gossip random projection library.
//
//   grp lambda   --topology clique --m 4
//   grp gamma    --topology star --m 4
//   grp bound    --config configs/quadratic_balanced.json
//   grp check    --config configs/quadratic_balanced.json
//   grp baseline --config configs/mpc_clique_m4.json --out baseline.json
//   grp run      --config configs/mpc_clique_m4.json --run-id 3 --out run3.csv
//   grp mc       --config configs/mpc_clique_m4.json --threads 4 --out mc.csv
//
// Exit status: 0 success, 2 invalid configuration (or failed check), 1 runtime error.
// Log verbosity comes from GRP_LOG_LEVEL (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "grp/harness.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> topology;
  std::optional<int> m;
  std::optional<std::uint64_t> seed;
  std::optional<long> n_runs;
  std::optional<long> n_iters;
  long run_id = 0;
  std::string out;
  unsigned threads = 0;
  int precision = 4;
  bool dump_config = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--topology", o.topology, "clique | cycle | star");
  cmd->add_option("--m", o.m, "number of agents");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--n-runs", o.n_runs, "Monte-Carlo runs");
  cmd->add_option("--n-iters", o.n_iters, "ticks per run");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
  cmd->add_flag("--dump-config", o.dump_config, "print the effective configuration and exit");
}

grp::RunConfig load_config(const Options& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw grp::ConfigError("cannot open config file " + o.config_path);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw grp::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  auto cfg = grp::config_from_json(j);
  if (o.topology) cfg.topology = *o.topology;
  if (o.m) cfg.m = *o.m;
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_runs) cfg.n_runs = *o.n_runs;
  if (o.n_iters) cfg.n_iters = *o.n_iters;
  cfg.validate();
  return cfg;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + o.out);
  f << text;
  spdlog::info("wrote {}", o.out);
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("grp"));
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("GRP_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
}

int dispatch(const std::string& cmd, const Options& o) {
  const auto cfg = load_config(o);
  if (o.dump_config) {
    emit(o, grp::to_json(cfg).dump(2) + "\n");
    return 0;
  }
  if (cmd == "lambda" || cmd == "gamma") {
    const auto topo = grp::detail::make_topology(cfg);
    const auto sel = grp::detail::make_selection(cfg, topo);
    if (cmd == "lambda") {
      emit(o, fmt::format("{:.{}f}\n", grp::lambda2(grp::mean_matrix(sel)), o.precision));
    } else {
      std::string line;
      for (double g : grp::gamma(sel)) line += fmt::format("{}{:.{}f}", line.empty() ? "" : " ", g, o.precision);
      emit(o, line + "\n");
    }
    return 0;
  }
  if (cmd == "bound" || cmd == "check") {
    const auto setup = grp::build_setup(cfg, false);
    const auto inputs = grp::bound_inputs(setup);
    if (cmd == "bound") {
      emit(o, grp::bound_report(inputs, grp::rho_variant(cfg)).dump(2) + "\n");
      return 0;
    }
    const auto report = grp::check_report(inputs);
    emit(o, report.dump(2) + "\n");
    return report.at("ok").get<bool>() ? 0 : 2;
  }
  if (cmd == "baseline") {
    const auto setup = grp::build_setup(cfg, true);
    nlohmann::json out = {{"baseline", grp::io::to_json(*setup.baseline)}};
    if (setup.instance) out["instance"] = grp::io::to_json(*setup.instance);
    emit(o, out.dump(2) + "\n");
    return 0;
  }
  const auto setup = grp::build_setup(cfg, true);
  if (cmd == "run") {
    spdlog::info("run {} seed {} ticks {}", o.run_id, grp::run_seed(cfg, o.run_id), cfg.n_iters);
    emit(o, grp::to_csv(grp::run_single(setup, o.run_id)));
    return 0;
  }
  spdlog::info("mc: {} runs x {} ticks", cfg.n_runs, cfg.n_iters);
  emit(o, grp::to_csv(grp::run_monte_carlo(setup, o.threads)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Gossip-based random projection: analysis, baseline and Monte-Carlo runs"};
  app.require_subcommand(1);
  Options o;
  const char* names[] = {"lambda", "gamma", "bound", "baseline", "run", "mc", "check"};
  const char* help[] = {"second eigenvalue of the mean mixing matrix",
                        "per-agent update probabilities",
                        "constants and asymptotic bounds (JSON)",
                        "solve the centralized problem (JSON)",
                        "one seeded run (CSV)",
                        "Monte-Carlo runs (CSV)",
                        "stepsize validity report (JSON); exit 2 when violated"};
  for (int i = 0; i < 7; ++i) {
    auto* cmd = app.add_subcommand(names[i], help[i]);
    add_common(cmd, o);
    if (i < 2) cmd->add_option("--precision", o.precision, "decimal places")->check(CLI::Range(0, 17));
    if (names[i] == std::string("run")) cmd->add_option("--run-id", o.run_id, "run index");
    if (names[i] == std::string("mc")) cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, o);
  } catch (const grp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
