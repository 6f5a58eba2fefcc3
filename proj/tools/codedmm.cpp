#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "codedmm/cli.hpp"

int main(int argc, char **argv) {
  using namespace codedmm::cli;

  CLI::App app{"Coded distributed matrix-vector multiplication: loads, delays, assignments, LT designs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config;
  Overrides o;
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  std::uint64_t budget = 0;

  const std::map<std::string, Command> commands{
      {"evaluate", Command::evaluate},
      {"solve", Command::solve},
      {"design-lt", Command::design_lt},
      {"deadline", Command::deadline},
  };
  const std::map<std::string, std::string> help{
      {"evaluate", "Load and delay of each scheme per sweep point"},
      {"solve", "Assignment matrix from a solver"},
      {"design-lt", "Robust Soliton parameters meeting a failure target"},
      {"deadline", "Probability of missing each deadline"},
  };
  std::map<std::string, CLI::App *> subs;
  for (const auto &[name, cmd] : commands) {
    auto *sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out, "Output path (default: stdout)");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1U, 1024U));
    sub->add_option("--sample-budget", budget, "Monte Carlo samples for deadlines and g simulation")
        ->check(CLI::PositiveNumber);
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  for (const auto &[name, sub] : subs) {
    if (!sub->parsed()) {
      continue;
    }
    if (sub->count("--seed") > 0) {
      o.seed = seed;
    }
    if (sub->count("--out") > 0) {
      o.out = out;
    }
    if (!format.empty()) {
      o.format = format == "json" ? Format::json : Format::csv;
    }
    if (sub->count("--sample-budget") > 0) {
      o.sample_budget = budget;
    }
    return run(commands.at(name), config, o, std::cout, std::cerr);
  }
  return exit_failure;
}
