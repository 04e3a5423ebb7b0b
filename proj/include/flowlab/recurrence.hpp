// Uniform recurrence constants L(eps): every orbit enters every eps-ball within
// L(eps) steps. Exists for minimal maps; certified here for rotations.
#pragma once

#include <optional>
#include <vector>

#include "flowlab/base_map.hpp"

namespace flowlab {

struct RecurrenceReport {
  double epsilon = 0.0;
  long long L = 0;
  double witness_grid_resolution = 0.0;
  bool is_certified = false;
  /// For circle rotations: the value from the orbit-gap oracle.
  std::optional<long long> gap_oracle_L;
};

struct RecurrenceOptions {
  /// Grid spacing; 0 means epsilon / 4.
  double grid_resolution = 0.0;
  /// Grid points sit at (j + offset) * spacing.
  double grid_offset = 0.0;
  long long horizon = 1000000;
};

/// Smallest L such that for all grid points x, y some f^l(y), 0 <= l <= L, lies
/// within 3 eps / 4 of x. For rotations the grid check certifies the statement
/// for all points with radius eps (the off-grid slack is at most eps / 4), and
/// translation invariance reduces the search to the single start y = grid
/// origin. Other maps are searched pair by pair and marked uncertified.
/// Throws NotFoundWithinHorizon when some grid start fails to visit every cell.
RecurrenceReport recurrence_constant(const BaseMap& map, double epsilon, const RecurrenceOptions& options = {});

/// Circle rotation by theta: smallest L with max gap of {k theta mod 1 : k <= L} < 2 eps.
long long rotation_gap_L(double theta, double epsilon, long long horizon = 1000000);

/// Uncertified recurrence profile measured from the given (typical) starts
/// instead of grid starts; for maps that are not minimal.
RecurrenceReport empirical_recurrence(const BaseMap& map, double epsilon, const std::vector<TorusPoint>& starts,
                                      const RecurrenceOptions& options = {});

/// Fraction of f^k(start), 0 <= k < n, in the open ball B(center, eps).
double birkhoff_ball_frequency(const BaseMap& map, const TorusPoint& start, long long n, const TorusPoint& center,
                               double epsilon);

struct BallMeasureCheck {
  double bound = 0.0;  // 1 / max(L, 1)
  std::vector<double> frequency;
  /// min over centers of frequency - bound + statistical margin.
  double min_slack = 0.0;
  bool pass = false;
};

/// Lower bound mu(B(x, eps)) >= 1 / L(eps) on each center, with mu(B) measured
/// by a Birkhoff frequency along the orbit of `start` and a 3-sigma binomial
/// margin. Throws UncertifiedReport for uncertified reports.
BallMeasureCheck ball_measure_bound_check(const BaseMap& map, double epsilon, const RecurrenceReport& report,
                                          const std::vector<TorusPoint>& centers, const TorusPoint& start,
                                          long long orbit_length = 1000000);

}  // namespace flowlab
