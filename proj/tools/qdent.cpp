#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qdent/commands.hpp"

namespace cli = qdent::cli;

int main(int argc, char** argv) {
  CLI::App app{"Quantum-dot biexciton cascade and time-bin entanglement simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  using Command = std::function<std::vector<std::filesystem::path>(const qdent::RunConfig&, const std::filesystem::path&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands{
      {"evolve", {"Evolve one pulse and write trajectory.csv", cli::cmd_evolve}},
      {"rabi", {"Rabi sweep of P_b for each dephasing model", cli::cmd_rabi}},
      {"ratio", {"Biexciton/exciton ratio against pulse energy", cli::cmd_ratio}},
      {"entangle", {"Time-bin state metrics and simulated tomography", cli::cmd_entangle}},
      {"fit-dephasing", {"Fit the intensity-dependent dephasing strength", cli::cmd_fit_dephasing}},
  };

  std::map<std::string, CLI::App*> subs;
  std::map<std::string, CLI::Option*> seed_opts, thread_opts;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "JSON configuration file (defaults when omitted)");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    seed_opts[name] = sub->add_option("--seed", seed, "Base random seed (overrides tomography.seed)");
    thread_opts[name] = sub->add_option("--threads", threads, "Worker threads (overrides threads)");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      cli::CommandOptions opts;
      opts.out_dir = out_dir;
      if (seed_opts[name]->count()) opts.seed = seed;
      if (thread_opts[name]->count()) opts.threads = threads;
      const auto config = cli::resolve(config_path.empty() ? qdent::RunConfig{} : qdent::load_config(config_path), opts);
      for (const auto& path : commands.at(name).second(config, opts.out_dir)) std::cout << path.string() << '\n';
      return cli::kOk;
    } catch (const std::exception& e) {
      std::cerr << "qdent " << name << ": " << e.what() << '\n';
      return cli::exit_code_for(e);
    }
  }
  return cli::kConfigError;
}
