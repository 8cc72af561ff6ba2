#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "loggas/cli.hpp"
#include "loggas/errors.hpp"
#include "loggas/parallel.hpp"

namespace loggas::cli {

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool dump = false;
};

void add_run_options(CLI::App* sub, RunArgs& a) {
  sub->add_option("--config", a.config, "experiment config (YAML)")->required();
  sub->add_option("--seed", a.seed, "root seed (overrides the config)");
  sub->add_option("--workers", a.workers, "worker threads (overrides LOGGAS_WORKERS and the config)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", a.out, "output directory (overrides the config)");
  sub->add_flag("--dump", a.dump, "write trajectory snapshots");
}

int run_command(const std::string& sub, const RunArgs& a) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(a.config);
  } catch (const ConfigError& e) {
    std::cerr << a.config;
    if (e.line() > 0) std::cerr << ':' << e.line() << ':' << e.column();
    std::cerr << ": " << e.what() << "\n";
    return exit_usage;
  }
  if (sub != "run" && cfg.kind != sub) {
    std::cerr << a.config << ": config kind '" << cfg.kind << "' does not match subcommand '" << sub << "'\n";
    return exit_usage;
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) {
    cfg.workers = *a.workers;
  } else if (std::getenv("LOGGAS_WORKERS")) {
    cfg.workers = resolve_workers(0);
  }
  std::filesystem::path out = !a.out.empty() ? a.out : (!cfg.output.empty() ? cfg.output : "out/" + cfg.kind);
  cfg.output = out.string();
  try {
    const auto rec = run_experiment(cfg, out, RunOptions{a.dump});
    std::cout << cfg.kind << " -> " << out.string() << " (" << rec.wall_seconds << " s)\n";
    for (const auto& c : rec.checks) std::cout << "  [" << to_string(c.verdict) << "] " << c.name << ": " << c.detail << "\n";
    return exit_code(rec.checks);
  } catch (const Error& e) {
    std::cerr << cfg.kind << ": " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_software;
  } catch (const std::exception& e) {
    std::cerr << cfg.kind << ": " << e.what() << "\n";
    return exit_software;
  }
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"loggas: regularized log-gas laboratory"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  std::map<std::string, RunArgs> args;
  std::vector<std::string> names = experiment_kinds();
  names.push_back("run");
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n, n == "run" ? "run any experiment config" : "run a " + n + " experiment");
    add_run_options(sub, args[n]);
  }
  std::string report_dir;
  auto* rep = app.add_subcommand("report", "merge experiment records in a directory");
  rep->add_option("dir", report_dir, "directory holding experiment records")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }
  if (rep->parsed()) {
    const auto res = report(report_dir);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    if (res.exit != exit_no_input) std::cout << "report: " << res.records << " records -> " << res.summary.string() << "\n";
    return res.exit;
  }
  for (const auto& n : names)
    if (app.got_subcommand(n)) return run_command(n, args[n]);
  return exit_usage;
}

}  // namespace loggas::cli
