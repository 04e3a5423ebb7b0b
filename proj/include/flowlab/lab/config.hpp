// Experiment configuration: one JSON document, read strictly. Unknown keys,
// wrong types and out-of-range values are rejected with the JSON path of the
// offending field.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/base_map.hpp"
#include "flowlab/entropy.hpp"
#include "flowlab/sampling.hpp"
#include "json.hpp"

namespace flowlab::lab {

struct BaseMapSpec {
  /// "cat", "golden_rotation", "identity", "toral_automorphism" or "rotation".
  std::string kind = "cat";
  std::vector<std::vector<long long>> matrix;
  std::vector<double> angles;
  int dim = 2;

  BaseMap build() const;
};

struct StoppedPointSpec {
  std::vector<double> base;  // empty: 0.3 in every coordinate
  double height = 0.5;
};

/// Shell recipe for the flat profile.
struct ProfileSpec {
  int i0 = 2;
  int count = 12;
  /// l_i = l_scale / i.
  double l_scale = 0.25;
  double truncation_tol = 1e-14;
  /// "auto": certified recurrence for rotations, sampled starts otherwise;
  /// "certified" or "empirical" force one route.
  std::string recurrence = "auto";
  int recurrence_starts = 16;
  /// Explicit betas (beta_{-1} = 1 first) bypass the recipe.
  std::vector<double> betas;
};

struct FieldSpec {
  /// "constant", "flat" or "quadratic".
  std::string kind = "quadratic";
  double value = 1.0;  // constant kind
  int floor_depth = 0;  // flat kind
  double chart_radius = 0.2;
  StoppedPointSpec p;
};

struct FlatFnSection {
  int grid_points = 200;
  double t_min = 1e-4;
  double t_max = 2.0;
  int shells = 11;
  int per_shell = 100;
  int derivative_exponents = 4;
};

struct EntropySection {
  bool map = true;
  bool suspension = true;
  /// Optional time change of the suspension flow.
  std::optional<FieldSpec> time_change;
  bool totoki = true;
  /// Extra grid at another delta; empty disables the delta-independence check.
  std::optional<double> alt_delta;
};

struct RecurrenceSection {
  std::vector<double> eps_values = {0.3, 0.2, 0.15, 0.1, 0.05};
  double grid_resolution = 0.0;
  long long horizon = 1000000;
  int centers = 5;
  long long orbit_length = 1000000;
};

struct TimeChangeSection {
  FieldSpec field;
  int checks = 1000;
  double max_time = 5.0;
  double constant_rate = 2.0;
  double inversion_tol = 1e-11;
  int histogram_bins = 20;
};

struct DichotomySection {
  StoppedPointSpec p;
  double chart_radius = 0.2;
  std::vector<int> flat_depths = {1, 2, 3, 4, 5, 6};
  /// Base samples for the return-time trace (the cloud uses top-level sampling).
  std::size_t gamma_samples = 10000;
  /// Base map for the return-time trace; defaults to the top-level map.
  std::optional<BaseMapSpec> gamma_base_map;
  int witness_points = 10;
  double witness_horizon = 5.0;
  int witness_rows = 20;
  double witness_tol = 1e-6;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  BaseMapSpec base_map;
  BirkhoffOptions sampling;
  EntropyGridSpec grid;
  ProfileSpec profile;
  FlatFnSection flatfn;
  EntropySection entropy;
  RecurrenceSection recurrence;
  TimeChangeSection timechange;
  DichotomySection dichotomy;
  /// The document as given, echoed into manifests.
  nlohmann::json source = nlohmann::json::object();
};

/// Parses and validates; throws Error(Config) naming the line/column of a
/// syntax error or the JSON path of an invalid field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Built from an already parsed document (validation as above).
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// The effective configuration with every default filled in.
nlohmann::json effective_json(const ExperimentConfig& config);

}  // namespace flowlab::lab
