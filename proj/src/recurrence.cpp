#include "flowlab/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "flowlab/errors.hpp"

namespace flowlab {

namespace {

// Grid of K^m cells, cell index j -> coordinate (j + offset) / K per axis.
struct Grid {
  int m;
  long long K;
  double offset;
  long long size;

  Grid(int dim, double resolution, double off) : m(dim), offset(off) {
    K = static_cast<long long>(std::ceil(1.0 / resolution - 1e-12));
    size = 1;
    for (int i = 0; i < m; ++i) size *= K;
    if (size > 50'000'000) throw Error(ErrorCode::InvalidArgument, "recurrence grid too fine");
  }
  double coord(long long j) const { return (static_cast<double>(j) + offset) / static_cast<double>(K); }
  TorusPoint point(long long index) const {
    TorusPoint x(m);
    for (int i = 0; i < m; ++i) {
      x(i) = wrap_unit(coord(index % K));
      index /= K;
    }
    return x;
  }
};

// Tracks which grid cells have been visited within `radius`; returns true once all are.
class CoverageTracker {
 public:
  CoverageTracker(const Grid& grid, double radius) : grid_(grid), radius_(radius), hit_(grid.size, 0) {}

  void reset() {
    std::fill(hit_.begin(), hit_.end(), 0);
    remaining_ = grid_.size;
  }
  long long remaining() const { return remaining_; }

  void mark(const double* z) {
    const int m = grid_.m;
    const long long K = grid_.K;
    long long lo[kMaxTorusDim], count[kMaxTorusDim];
    for (int i = 0; i < m; ++i) {
      lo[i] = static_cast<long long>(std::floor((z[i] - radius_) * K - grid_.offset));
      count[i] = static_cast<long long>(std::ceil((z[i] + radius_) * K - grid_.offset)) - lo[i] + 1;
      count[i] = std::min(count[i], K);
    }
    long long idx[kMaxTorusDim] = {0};
    while (true) {
      long long flat = 0;
      long long stride = 1;
      bool inside = true;
      for (int i = 0; i < m; ++i) {
        const long long j = lo[i] + idx[i];
        if (!(circle_distance(grid_.coord(j), z[i]) < radius_)) {
          inside = false;
          break;
        }
        flat += (((j % K) + K) % K) * stride;
        stride *= K;
      }
      if (inside && !hit_[flat]) {
        hit_[flat] = 1;
        --remaining_;
      }
      int d = 0;
      while (d < m && ++idx[d] == count[d]) idx[d++] = 0;
      if (d == m) break;
    }
  }

 private:
  const Grid& grid_;
  double radius_;
  std::vector<char> hit_;
  long long remaining_ = 0;
};

// Steps needed from `start` until every grid cell was visited; -1 past the horizon.
long long coverage_time(const BaseMap& map, const TorusPoint& start, CoverageTracker& tracker, long long horizon) {
  tracker.reset();
  double z[kMaxTorusDim];
  for (int i = 0; i < map.dim(); ++i) z[i] = start(i);
  for (long long l = 0; l <= horizon; ++l) {
    tracker.mark(z);
    if (tracker.remaining() == 0) return l;
    map.step(z, z);
  }
  return -1;
}

}  // namespace

RecurrenceReport recurrence_constant(const BaseMap& map, double epsilon, const RecurrenceOptions& options) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  RecurrenceReport report;
  report.epsilon = epsilon;
  report.witness_grid_resolution = options.grid_resolution > 0.0 ? options.grid_resolution : epsilon / 4.0;
  report.is_certified = map.is_isometry();
  if (map.is_isometry() && map.dim() == 1) report.gap_oracle_L = rotation_gap_L(map.angles()(0), epsilon, options.horizon);
  if (epsilon >= 0.5) {
    report.L = 0;
    return report;
  }
  const Grid grid(map.dim(), report.witness_grid_resolution, options.grid_offset);
  CoverageTracker tracker(grid, 0.75 * epsilon);
  const long long starts = map.is_isometry() ? 1 : grid.size;
  long long L = 0;
  for (long long y = 0; y < starts; ++y) {
    const long long l = coverage_time(map, grid.point(y), tracker, options.horizon);
    if (l < 0) {
      throw Error(ErrorCode::NotFoundWithinHorizon,
                  "grid start " + std::to_string(y) + " misses some eps-ball for " + std::to_string(options.horizon) +
                      " iterates; the map is not minimal at this scale");
    }
    L = std::max(L, l);
  }
  report.L = L;
  return report;
}

long long rotation_gap_L(double theta, double epsilon, long long horizon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (epsilon >= 0.5) return 0;
  std::set<double> points{0.0};
  std::multiset<double> gaps{1.0};
  long double angle = 0.0L;
  for (long long k = 1; k <= horizon; ++k) {
    if (*gaps.rbegin() < 2.0 * epsilon) return k - 1;
    angle += static_cast<long double>(theta);
    angle -= std::floor(angle);
    const double v = static_cast<double>(angle);
    auto [it, inserted] = points.insert(v);
    if (!inserted) continue;
    auto next = std::next(it);
    const double right = next == points.end() ? *points.begin() + 1.0 : *next;
    const double left = it == points.begin() ? *points.rbegin() - 1.0 : *std::prev(it);
    gaps.erase(gaps.find(right - left));
    gaps.insert(v - left);
    gaps.insert(right - v);
  }
  if (*gaps.rbegin() < 2.0 * epsilon) return horizon;
  throw Error(ErrorCode::NotFoundWithinHorizon, "orbit gaps stay >= 2 eps up to the horizon");
}

RecurrenceReport empirical_recurrence(const BaseMap& map, double epsilon, const std::vector<TorusPoint>& starts,
                                      const RecurrenceOptions& options) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (starts.empty()) throw Error(ErrorCode::EmptySamples, "empirical recurrence needs start points");
  RecurrenceReport report;
  report.epsilon = epsilon;
  report.witness_grid_resolution = options.grid_resolution > 0.0 ? options.grid_resolution : epsilon / 4.0;
  report.is_certified = false;
  if (epsilon >= 0.5) return report;
  const Grid grid(map.dim(), report.witness_grid_resolution, options.grid_offset);
  CoverageTracker tracker(grid, 0.75 * epsilon);
  for (const auto& y : starts) {
    const long long l = coverage_time(map, y, tracker, options.horizon);
    if (l < 0) throw Error(ErrorCode::NotFoundWithinHorizon, "a sampled start misses some eps-ball");
    report.L = std::max(report.L, l);
  }
  return report;
}

double birkhoff_ball_frequency(const BaseMap& map, const TorusPoint& start, long long n, const TorusPoint& center,
                               double epsilon) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "orbit length must be positive");
  TorusPoint z = start;
  long long hits = 0;
  for (long long k = 0; k < n; ++k) {
    if (dist_base(z, center) < epsilon) ++hits;
    map.step(z.data(), z.data());
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

BallMeasureCheck ball_measure_bound_check(const BaseMap& map, double epsilon, const RecurrenceReport& report,
                                          const std::vector<TorusPoint>& centers, const TorusPoint& start,
                                          long long orbit_length) {
  if (!report.is_certified) throw Error(ErrorCode::UncertifiedReport, "ball-measure bound needs a certified L");
  if (report.epsilon != epsilon) throw Error(ErrorCode::InvalidArgument, "report was computed for another epsilon");
  BallMeasureCheck out;
  out.bound = 1.0 / static_cast<double>(std::max(report.L, 1LL));
  out.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& x : centers) {
    const double freq = epsilon >= 0.5 ? 1.0 : birkhoff_ball_frequency(map, start, orbit_length, x, epsilon);
    const double sigma = std::sqrt(std::max(freq * (1.0 - freq), 1e-12) / static_cast<double>(orbit_length));
    out.frequency.push_back(freq);
    out.min_slack = std::min(out.min_slack, freq - out.bound + 3.0 * sigma);
  }
  out.pass = centers.empty() || out.min_slack >= 0.0;
  return out;
}

}  // namespace flowlab
