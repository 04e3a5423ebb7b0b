// Entropy estimates from Katok covering numbers: fill a grid R(delta, n, eps),
// fit the growth rate of ln R in n before the cloud saturates, and take the
// small-eps limit.
#pragma once

#include <string>
#include <vector>

#include "flowlab/katok.hpp"
#include "flowlab/speed_field.hpp"
#include "json.hpp"

namespace flowlab {

struct EntropyGridSpec {
  double delta = 0.1;
  /// Iterate counts (maps) or integer flow times.
  std::vector<int> n_values;
  /// Decreasing.
  std::vector<double> eps_values;
  CountMethod method = CountMethod::GreedyCover;
  /// Flow sampling step; must not exceed the smallest eps.
  double time_step = 0.05;
  /// A cell is saturated once R reaches this fraction of the cloud size.
  double saturation_fraction = 0.05;
};

struct EntropyGrid {
  EntropyGridSpec spec;
  std::size_t cloud_size = 0;
  /// counts[e][j] for eps_values[e], n_values[j]; raw greedy output, or -1
  /// for cells skipped because an earlier n of the same eps had saturated.
  std::vector<std::vector<long long>> raw_counts;
  /// Running maxima: nondecreasing in n, nonincreasing in eps.
  std::vector<std::vector<long long>> counts;
  std::vector<std::vector<bool>> saturated;
  /// Raw cells that break monotonicity, and the largest relative shortfall.
  int monotone_violations = 0;
  double worst_violation = 0.0;
};

struct SlopeFit {
  double eps = 0.0;
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double residual_rms = 0.0;
  int n_first = 0;
  int n_last = 0;
  int points = 0;
};

struct EntropyEstimate {
  EntropyGrid grid;
  std::vector<SlopeFit> fits;
  /// max of the slopes at the two smallest eps with a valid fit (nats per unit time).
  double extrapolated = 0.0;
  double extrapolated_error = 0.0;
  std::size_t dropped_points = 0;
  std::vector<std::string> warnings;
};

void validate(const EntropyGridSpec& spec);

/// windows[j]: number of stored samples spanning n_values[j].
EntropyGrid katok_grid(const TrajectoryCloud& cloud, const EntropyGridSpec& spec, const std::vector<int>& windows,
                       int workers = 1);

/// Slope fits and extrapolation; throws SaturatedGrid when no eps has two
/// unsaturated cells.
EntropyEstimate estimate_from_grid(EntropyGrid grid);

EntropyEstimate entropy_estimate_map(const BaseMap& map, const std::vector<TorusPoint>& cloud,
                                     const EntropyGridSpec& spec, int workers = 1);

EntropyEstimate entropy_estimate_flow(const SuspensionFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                      const EntropyGridSpec& spec, int workers = 1);

/// Time-changed flow; points near the singular fiber are dropped (counted in
/// dropped_points) and, for clocks built from a speed field, the rest are
/// weighted by the density of the time-changed invariant measure.
EntropyEstimate entropy_estimate_flow(const TimeChangedFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                      const EntropyGridSpec& spec, int workers = 1,
                                      const PhiCloudOptions& options = {});

struct TotokiReport {
  double h_phi = 0.0;
  double h_psi = 0.0;
  double K = 0.0;  // estimate of mu_hat(Omega)
  double K_error = 0.0;
  double lhs = 0.0;  // h_phi * K
  double rhs = 0.0;  // h_psi * mu_bar(Omega) = h_psi
  double ratio = 0.0;
  double ratio_error = 0.0;
};

/// h(phi) * mu_hat(Omega) against h(psi) for a clock a = 1/alpha_hat. The
/// mass K is estimated from the same cloud (pushforward_density); throws
/// DivergedMeasure when it diverges.
TotokiReport totoki_check(const TimeChangedFlow& flow_hat, const std::vector<SuspensionPoint>& cloud,
                          const EntropyGridSpec& spec, int workers = 1);

/// Same, with the psi estimate and K supplied by the caller.
TotokiReport totoki_from_estimates(const EntropyEstimate& phi, const EntropyEstimate& psi, double K, double K_error);

/// Rows "delta,n,eps,count,method" (computed raw counts) preceded by the header.
std::string grid_csv(const EntropyGrid& grid);
nlohmann::json to_json(const EntropyEstimate& estimate);
nlohmann::json to_json(const TotokiReport& report);

}  // namespace flowlab
