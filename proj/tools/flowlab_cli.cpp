// flowlab: command-line runner for the experiments.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
// divergence, 1 any other failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/lab/commands.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

int run(const std::string& command, const Flags& flags) {
  using namespace flowlab;
  try {
    lab::ExperimentConfig config = flags.config.empty() ? lab::config_from_json(nlohmann::json::object())
                                                        : lab::load_config(flags.config);
    if (flags.seed) config.seed = *flags.seed;
    lab::RunOptions options;
    options.out_dir = flags.out.empty() ? config.output_dir : flags.out;
    options.workers = flags.workers;
    const nlohmann::json summary = lab::run_command(command, config, options);
    std::cout << command << ": wrote " << options.out_dir << "; checks "
              << (summary.value("all_checks_pass", false) ? "pass" : "FAIL") << '\n';
    for (const auto& [name, ok] : summary["checks"].items()) {
      std::cout << "  " << (ok.get<bool>() ? "pass " : "FAIL ") << name << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "flowlab " << command << ": " << e.what() << '\n';
    if (e.code() == ErrorCode::Config || e.code() == ErrorCode::InvalidArgument) return kExitValidation;
    if (e.is_divergence()) return kExitDivergence;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "flowlab " << command << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy experiments for time changes of suspension flows"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : flowlab::lab::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (default: output_dir from the config)");
    sub->add_option("--seed", flags.seed, "seed, overriding the config");
    sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::Range(1, 1024));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  return run(app.get_subcommands().front()->get_name(), flags);
}
