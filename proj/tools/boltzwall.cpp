// boltzwall: simulate, certify, check and oracle subcommands.

#include <CLI11.hpp>

#include <iostream>

#include "boltzwall/parallel.hpp"
#include "commands.hpp"

using namespace boltzwall;
using namespace boltzwall::cli;

int main(int argc, char** argv) {
  CLI::App app{"Kinetic gas in a convex vessel with a diffusive wall: simulation and lower-bound certificates"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "TOML run configuration (defaults apply when omitted)");
  app.add_option("--out", out_dir, "output directory; must not exist or be empty");
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "seed for randomized oracles");

  auto* sim = app.add_subcommand("simulate", "run the transport solver and write snapshots");
  auto* cert = app.add_subcommand("certify", "issue a lower-bound certificate");
  auto* chk = app.add_subcommand("check", "compare a snapshot with a certificate");
  std::string snapshot, certificate;
  chk->add_option("--snapshot", snapshot, "snapshot CSV")->required()->check(CLI::ExistingFile);
  chk->add_option("--certificate", certificate, "certificate JSON")->required()->check(CLI::ExistingFile);
  auto* orc = app.add_subcommand("oracle", "run a verification oracle");
  std::string oracle_name;
  orc->add_option("name", oracle_name, "spread | iterated | bc-flux | kernel-asymptotics")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  return guarded(
      [&]() -> int {
        set_thread_count(threads);
        const Environment env = process_environment();
        const RunConfig cfg = config_path.empty() ? parse_config("", env) : load_config(config_path, env);
        const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output.dir) : std::filesystem::path(out_dir);
        if (sim->parsed()) return cmd_simulate(cfg, out, std::cerr);
        if (cert->parsed()) return cmd_certify(cfg, out, std::cerr);
        if (chk->parsed()) {
          std::optional<std::filesystem::path> o;
          if (!out_dir.empty()) o = out_dir;
          return cmd_check(snapshot, certificate, o, std::cout, std::cerr);
        }
        return cmd_oracle(oracle_name, cfg, out, seed, std::cerr);
      },
      std::cerr);
}
