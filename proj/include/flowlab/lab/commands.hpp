// The five experiment commands. Each writes its files (every one paired with
// a manifest) into the output directory and returns a summary document whose
// "checks" member holds the pass/fail outcome of every built-in check.
#pragma once

#include <string>
#include <vector>

#include "flowlab/flat_profile.hpp"
#include "flowlab/lab/config.hpp"
#include "flowlab/lab/io.hpp"
#include "json.hpp"

namespace flowlab::lab {

struct RunOptions {
  std::string out_dir;
  int workers = 1;
};

nlohmann::json run_flatfn(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json run_entropy(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json run_recurrence(const ExperimentConfig& config, const RunOptions& options);
nlohmann::json run_timechange(const ExperimentConfig& config, const RunOptions& options);
/// Persists every finished stage before rethrowing a failure.
nlohmann::json run_dichotomy(const ExperimentConfig& config, const RunOptions& options);

const std::vector<std::string>& command_names();
/// Dispatch by name; throws Error(Config) for an unknown command.
nlohmann::json run_command(const std::string& name, const ExperimentConfig& config, const RunOptions& options);

/// The flat profile a configuration asks for over `map`, recording the
/// recurrence constants, shell lengths and betas in manifest.derived under
/// `key`, and a warning when the recurrence is not certified.
FlatProfile configured_profile(const ProfileSpec& spec, const BaseMap& map, std::uint64_t seed, RunManifest& manifest,
                               const std::string& key = "profile");

}  // namespace flowlab::lab
