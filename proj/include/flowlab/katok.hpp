// Katok-style covering numbers: how many Bowen balls D(x, n, eps) it takes to
// cover a set of measure > 1 - delta, estimated on a finite cloud of orbits.
#pragma once

#include <optional>
#include <vector>

#include "flowlab/base_map.hpp"
#include "flowlab/suspension.hpp"
#include "flowlab/time_change.hpp"

namespace flowlab {

enum class CountMethod { GreedyCover, MaxSeparated };

const char* to_string(CountMethod method);
CountMethod count_method_from_string(const std::string& name);

/// Orbits of a cloud sampled at a common set of times, stored in single
/// precision, point-major: coordinate c of sample k of point i is
/// data[(i * samples + k) * coords + c]. Torus clouds use coords = m and the
/// max-circle metric; suspension clouds use coords = m + 1 (base, height) and
/// dist_susp, which needs the base map to compare points across the roof.
struct TrajectoryCloud {
  int coords = 0;
  int samples = 0;
  std::optional<BaseMap> roof_map;  // set for suspension clouds
  std::vector<float> data;
  /// Measure weights; empty means uniform. Need not be normalised.
  std::vector<double> weights;
  /// Indices (into the caller's cloud) of the points that were kept.
  std::vector<std::size_t> kept;

  std::size_t size() const { return samples == 0 || coords == 0 ? 0 : data.size() / (samples * coords); }
  bool is_suspension() const { return roof_map.has_value(); }
  const float* at(std::size_t point, int sample) const {
    return data.data() + (point * static_cast<std::size_t>(samples) + sample) * coords;
  }
};

/// f^k(x) for k = 0..samples-1.
TrajectoryCloud map_trajectories(const BaseMap& map, const std::vector<TorusPoint>& cloud, int samples,
                                 int workers = 1);

/// psi_{k dt}(q) for k = 0..samples-1.
TrajectoryCloud flow_trajectories(const SuspensionFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                  double time_step, int samples, int workers = 1);

struct PhiCloudOptions {
  /// Weight each point by the density 1/alpha of the time-changed invariant
  /// measure relative to mu_bar (when the clock comes from a speed field).
  bool density_weights = true;
  /// Points whose sampled orbit passes within this distance of p (or runs
  /// into it) are dropped.
  double singular_tol = 1e-9;
  /// Clock quadrature tolerance (absolute per unit length and relative) for
  /// the trajectories; positions need far less than the clock's default.
  /// 0 keeps the flow's own tolerances.
  double clock_tol = 1e-10;
};

/// phi_{k dt}(q) for k = 0..samples-1 through the clock inverse; `dropped`
/// receives the indices of excluded points.
TrajectoryCloud phi_trajectories(const TimeChangedFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                 double time_step, int samples, int workers = 1, const PhiCloudOptions& options = {},
                                 std::vector<std::size_t>* dropped = nullptr);

/// max_{0 <= i < n} dist_base(f^i x, f^i y).
double bowen_distance(const BaseMap& map, const TorusPoint& x, const TorusPoint& y, int n);

/// Covering count over the first `window` samples of every orbit.
///   GreedyCover: scan the cloud in index order, opening a ball at every point
///     not yet within eps of an earlier centre; sort balls by the weight they
///     claimed and count how many reach 1 - delta of the total weight.
///   MaxSeparated: a maximal subset of those balls' points (the (1 - delta)-core)
///     with pairwise Bowen distance >= 2 eps, so eps-balls around it are
///     disjoint. Hence MaxSeparated(eps) <= GreedyCover(eps).
/// Throws EmptyCloud.
long long katok_count(const TrajectoryCloud& cloud, double delta, int window, double eps, CountMethod method);

/// Convenience form for a base map and a cloud of starting points.
long long katok_count(const BaseMap& map, const std::vector<TorusPoint>& cloud, double delta, int n, double eps,
                      CountMethod method = CountMethod::GreedyCover);

/// Boxes (base Bowen ball) x (height band [j eps, (j+1) eps)) needed to cover
/// the suspension cloud {(x_i, heights_i)}: the greedy base cover's selected
/// balls, each split into the height bands its core points occupy. Lies
/// between the base count and k(eps) times it.
long long suspension_box_count(const TrajectoryCloud& base_cloud, const std::vector<double>& heights, double delta,
                               int n, double eps);

/// Smallest integer strictly larger than 1/eps.
long long box_factor(double eps);

}  // namespace flowlab
