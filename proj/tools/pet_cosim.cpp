// Command-line entry point: run a builtin or file-configured scenario and
// write its outputs, list the builtins, or print the version.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pet/config.hpp"
#include "pet/runner.hpp"

namespace {

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitViolations = 2;

int run_command(const std::string& scenario, const std::string& config_file, std::optional<int> days,
                std::optional<std::uint64_t> seed, const std::string& out_dir,
                const std::vector<std::string>& overrides, bool parallel, bool quiet) {
  auto cfg = pet::config::resolve_scenario(scenario);
  if (!config_file.empty()) cfg = pet::config::load_config_file(config_file, cfg);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw pet::ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (days) cfg.days = *days;
  if (seed) cfg.seed = *seed;
  cfg.validate();

  pet::log::set_quiet(quiet);
  const auto started = std::chrono::steady_clock::now();
  const auto result = pet::runner::run_scenario(
      cfg, parallel ? pet::kernel::Execution::parallel : pet::kernel::Execution::sequential);
  pet::runner::write_outputs(result, out_dir);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const auto& s = result.summary;
  std::cout << fmt::format("scenario {} seed {}: {} rounds in {:.2f} s -> {}\n", cfg.name, cfg.seed,
                           result.samples.size(), elapsed, out_dir);
  std::cout << fmt::format("  T_excess2_bar      {:.4f} C^2\n", s.T_excess2_bar);
  std::cout << fmt::format("  vwap_bar           {}\n",
                           s.vwap_bar ? fmt::format("{:.5f} USD/kWh", *s.vwap_bar) : std::string("no trades"));
  std::cout << fmt::format("  P_target_bar       {:.2f} kW\n", s.P_target_bar / 1000.0);
  std::cout << fmt::format("  P_supplied_bar     {:.2f} kW\n", s.P_supplied_bar / 1000.0);
  std::cout << fmt::format("  P_surplus_pv_bar   {:.2f} kW\n", s.P_surplus_pv_bar / 1000.0);
  std::cout << fmt::format("  violations         {}\n", result.total_violations());
  return result.clean() ? kExitClean : kExitViolations;
}

void list_scenarios() {
  for (const auto& b : pet::config::kBuiltins) {
    const auto cfg = *pet::config::builtin_scenario(b.name);
    std::cout << fmt::format("{}  n_ev={:<2} n_pv={:<2} cap={:<9}  {}\n", b.name, cfg.n_ev, cfg.n_pv,
                             cfg.grid_capacity_kw ? fmt::format("{:g} kW", *cfg.grid_capacity_kw) : "uncapped",
                             b.description);
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packetized energy trading co-simulation"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario and write its outputs");
  std::string scenario, config_file, out_dir = "out";
  std::optional<int> days;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool parallel = false, quiet = false;
  run->add_option("--scenario", scenario, "Builtin name (s1..s5) or path to a config file")->required();
  run->add_option("--config", config_file, "Config file layered over the scenario");
  run->add_option("--days", days, "Simulated days");
  run->add_option("--seed", seed, "Master RNG seed");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--set", overrides, "Override a config key (key=value); repeatable");
  run->add_flag("--parallel", parallel, "Step federates on worker threads");
  run->add_flag("--quiet", quiet, "Suppress warnings");

  auto* scenarios = app.add_subcommand("scenarios", "Builtin scenarios");
  scenarios->require_subcommand(1);
  auto* list = scenarios->add_subcommand("list", "List builtin scenarios");

  auto* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitClean : kExitError;
  }

  try {
    if (run->parsed()) return run_command(scenario, config_file, days, seed, out_dir, overrides, parallel, quiet);
    if (list->parsed()) {
      list_scenarios();
      return kExitClean;
    }
    if (version->parsed()) {
      std::cout << "pet_cosim " << pet::runner::kVersion << '\n';
      return kExitClean;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
