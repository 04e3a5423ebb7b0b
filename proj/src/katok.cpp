#include "flowlab/katok.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowlab/errors.hpp"
#include "flowlab/parallel.hpp"

namespace flowlab {

const char* to_string(CountMethod method) {
  return method == CountMethod::GreedyCover ? "greedy_cover" : "max_separated";
}

CountMethod count_method_from_string(const std::string& name) {
  if (name == "greedy_cover") return CountMethod::GreedyCover;
  if (name == "max_separated") return CountMethod::MaxSeparated;
  throw Error(ErrorCode::InvalidArgument, "unknown count method '" + name + "'");
}

namespace {

// --- per-sample metrics on stored coordinates ----------------------------------

double torus_gap(const float* a, const float* b, int m) {
  double d = 0.0;
  for (int i = 0; i < m; ++i) {
    double g = std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    g = std::min(g, 1.0 - g);
    d = std::max(d, g);
  }
  return d;
}

double torus_gap(const double* a, const float* b, int m) {
  double d = 0.0;
  for (int i = 0; i < m; ++i) {
    double g = std::abs(wrap_unit(a[i]) - static_cast<double>(b[i]));
    g = std::min(g, 1.0 - g);
    d = std::max(d, g);
  }
  return d;
}

// dist_susp(a, b) < eps, evaluated lazily: the lifted comparisons are needed
// only when the heights straddle the roof.
bool susp_less(const float* a, const float* b, int m, const BaseMap& f, double eps) {
  const double ha = a[m];
  const double hb = b[m];
  const double dh = std::abs(ha - hb);
  if (dh < eps && torus_gap(a, b, m) < eps) return true;
  if (dh <= 1.0 - eps) return false;
  // one point near the top, the other near the bottom
  const float* hi = ha > hb ? a : b;
  const float* lo = ha > hb ? b : a;
  const double lifted = std::abs(std::max(ha, hb) - std::min(ha, hb) - 1.0);
  if (!(lifted < eps)) return false;
  double buf[kMaxTorusDim] = {};
  double src[kMaxTorusDim] = {};
  for (int i = 0; i < m; ++i) src[i] = hi[i];
  f.step(src, buf);  // hi dropped into lo's sheet
  if (torus_gap(buf, lo, m) < eps) return true;
  for (int i = 0; i < m; ++i) src[i] = lo[i];
  f.step_inverse(src, buf);  // lo raised into hi's sheet
  return torus_gap(buf, hi, m) < eps;
}

struct Metric {
  const TrajectoryCloud& cloud;
  bool sample_less(const float* a, const float* b, double eps) const {
    if (cloud.roof_map) return susp_less(a, b, cloud.coords - 1, *cloud.roof_map, eps);
    return torus_gap(a, b, cloud.coords) < eps;
  }
  // Bowen distance over samples [0, window) below eps; the last sample is
  // the most discriminating under expansion, so it is checked first.
  bool bowen_less(std::size_t i, std::size_t j, int window, double eps) const {
    if (!sample_less(cloud.at(i, window - 1), cloud.at(j, window - 1), eps)) return false;
    for (int k = 0; k + 1 < window; ++k) {
      if (!sample_less(cloud.at(i, k), cloud.at(j, k), eps)) return false;
    }
    return true;
  }
};

// --- spatial index -----------------------------------------------------------

// Periodic grid on up to four (sample, coordinate) axes taken from the first
// and the last sample of the window: Bowen-close orbits are close at both ends,
// and under expansion the two ends are nearly independent. Cells are at least
// `cell` wide, so points within distance < cell sit in adjacent cells. For
// suspension clouds a sample near the roof is also looked up through its
// identified representative in the other sheet.
class CellIndex {
 public:
  CellIndex(const TrajectoryCloud& cloud, int window, double cell) : cloud_(cloud) {
    const bool susp = cloud.is_suspension();
    m_ = susp ? cloud.coords - 1 : cloud.coords;
    const int last = window - 1;
    if (last == 0) {
      for (int i = 0; i < std::min(m_, susp ? 2 : 3); ++i) axes_.push_back({0, i});
      if (susp) axes_.push_back({0, m_});
    } else if (susp) {
      axes_.push_back({0, 0});
      axes_.push_back({0, m_});
      for (int i = 0; i < std::min(m_, 2); ++i) axes_.push_back({last, i});
    } else {
      for (int i = 0; i < std::min(m_, 2); ++i) axes_.push_back({0, i});
      for (int i = 0; i < std::min(m_, 2); ++i) axes_.push_back({last, i});
    }
    for (const Axis& a : axes_) {
      if (samples_.empty() || samples_.back() != a.sample) samples_.push_back(a.sample);
    }
    // Finer cells than the cloud can fill only cost memory.
    const double budget = std::pow(4.0 * static_cast<double>(std::max<std::size_t>(cloud.size(), 1)),
                                   1.0 / static_cast<double>(axes_.size()));
    K_ = static_cast<long long>(std::floor(std::min(1.0 / cell, budget)));
    if (K_ < 3) K_ = 1;  // neighbourhoods would wrap onto themselves
    long long cells = 1;
    for (std::size_t a = 0; a < axes_.size(); ++a) cells *= K_;
    buckets_.resize(static_cast<std::size_t>(cells));
  }

  void insert(std::size_t point) {
    long long id = 0;
    for (const Axis& a : axes_) id = id * K_ + wrap(coord_cell(cloud_.at(point, a.sample)[a.coord]), K_);
    buckets_[static_cast<std::size_t>(id)].push_back(point);
  }

  template <typename Fn>
  void for_each_candidate(std::size_t point, Fn&& fn) const {
    // Up to two representatives per indexed sample.
    float reps[2][2][kMaxTorusDim + 1];
    int count[2] = {1, 1};
    for (std::size_t s = 0; s < samples_.size(); ++s) {
      const float* q = cloud_.at(point, samples_[s]);
      std::copy(q, q + cloud_.coords, reps[s][0]);
      if (cloud_.is_suspension() && lift(q, reps[s][1])) count[s] = 2;
    }
    for (int a = 0; a < count[0]; ++a) {
      for (int b = 0; b < (samples_.size() > 1 ? count[1] : 1); ++b) {
        const float* chosen[2] = {reps[0][a], reps[1][b]};
        visit_around(chosen, fn);
      }
    }
  }

 private:
  struct Axis {
    int sample;
    int coord;
  };

  long long coord_cell(double v) const { return static_cast<long long>(std::floor(v * static_cast<double>(K_))); }
  static long long wrap(long long c, long long K) { return ((c % K) + K) % K; }

  // The representative of q in the neighbouring sheet, when q is near the roof.
  bool lift(const float* q, float* out) const {
    const double h = q[m_];
    const double reach = 1.0 / static_cast<double>(K_);
    if (h <= 1.0 - reach && h >= reach) return false;
    double src[kMaxTorusDim] = {};
    double buf[kMaxTorusDim] = {};
    for (int i = 0; i < m_; ++i) src[i] = q[i];
    if (h > 1.0 - reach) {
      cloud_.roof_map->step(src, buf);
      out[m_] = static_cast<float>(h - 1.0);
    } else {
      cloud_.roof_map->step_inverse(src, buf);
      out[m_] = static_cast<float>(h + 1.0);
    }
    for (int i = 0; i < m_; ++i) out[i] = static_cast<float>(wrap_unit(buf[i]));
    return true;
  }

  template <typename Fn>
  void visit_around(const float* const* reps, Fn& fn) const {
    const int H = static_cast<int>(axes_.size());
    long long base[4];
    for (int a = 0; a < H; ++a) {
      const int slot = axes_[a].sample == samples_[0] ? 0 : 1;
      base[a] = coord_cell(reps[slot][axes_[a].coord]);
    }
    const int span = K_ == 1 ? 1 : 3;
    int idx[4] = {0, 0, 0, 0};
    while (true) {
      long long id = 0;
      for (int a = 0; a < H; ++a) id = id * K_ + (K_ == 1 ? 0 : wrap(base[a] + idx[a] - 1, K_));
      for (std::size_t p : buckets_[static_cast<std::size_t>(id)]) fn(p);
      int d = 0;
      while (d < H && ++idx[d] == span) idx[d++] = 0;
      if (d == H) break;
    }
  }

  const TrajectoryCloud& cloud_;
  int m_ = 0;
  std::vector<Axis> axes_;
  std::vector<int> samples_;
  long long K_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

struct GreedyCover {
  std::vector<std::size_t> centers;
  std::vector<int> owner;          // ball index of every point
  std::vector<double> claimed;     // weight claimed by each ball
  std::vector<int> selected;       // balls needed for 1 - delta, heaviest first
};

GreedyCover greedy_cover(const TrajectoryCloud& cloud, double delta, int window, double eps) {
  const std::size_t N = cloud.size();
  const Metric metric{cloud};
  CellIndex index(cloud, window, eps);
  for (std::size_t i = 0; i < N; ++i) index.insert(i);

  GreedyCover g;
  g.owner.assign(N, -1);
  std::vector<std::size_t> stamp(N, static_cast<std::size_t>(-1));
  auto weight = [&](std::size_t i) { return cloud.weights.empty() ? 1.0 : cloud.weights[i]; };
  for (std::size_t i = 0; i < N; ++i) {
    if (g.owner[i] >= 0) continue;
    const int ball = static_cast<int>(g.centers.size());
    g.centers.push_back(i);
    g.owner[i] = ball;
    double claim = weight(i);
    stamp[i] = i;
    index.for_each_candidate(i, [&](std::size_t j) {
      if (stamp[j] == i) return;
      stamp[j] = i;
      if (g.owner[j] >= 0) return;
      if (metric.bowen_less(i, j, window, eps)) {
        g.owner[j] = ball;
        claim += weight(j);
      }
    });
    g.claimed.push_back(claim);
  }

  std::vector<int> order(g.centers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g.claimed[a] > g.claimed[b]; });
  double total = 0.0;
  for (double c : g.claimed) total += c;
  const double target = (1.0 - delta) * total;
  double acc = 0.0;
  for (int b : order) {
    g.selected.push_back(b);
    acc += g.claimed[b];
    if (acc > target) break;
  }
  return g;
}

long long max_separated(const TrajectoryCloud& cloud, const GreedyCover& cover, int window, double eps) {
  std::vector<char> in_core(cover.claimed.size(), 0);
  for (int b : cover.selected) in_core[b] = 1;
  const Metric metric{cloud};
  CellIndex chosen(cloud, window, 2.0 * eps);
  long long count = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!in_core[cover.owner[i]]) continue;
    bool separated = true;
    chosen.for_each_candidate(i, [&](std::size_t j) {
      if (separated && metric.bowen_less(i, j, window, 2.0 * eps)) separated = false;
    });
    if (separated) {
      chosen.insert(i);
      ++count;
    }
  }
  return count;
}

void check_count_args(const TrajectoryCloud& cloud, double delta, int window, double eps) {
  if (cloud.size() == 0) throw Error(ErrorCode::EmptyCloud, "covering count on an empty cloud");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  if (window < 1 || window > cloud.samples) throw Error(ErrorCode::InvalidArgument, "window outside stored samples");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
}

}  // namespace

TrajectoryCloud map_trajectories(const BaseMap& map, const std::vector<TorusPoint>& cloud, int samples, int workers) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample per orbit");
  TrajectoryCloud out;
  out.coords = map.dim();
  out.samples = samples;
  out.data.resize(cloud.size() * samples * out.coords);
  out.kept.resize(cloud.size());
  std::iota(out.kept.begin(), out.kept.end(), std::size_t{0});
  parallel_for(cloud.size(), workers, [&](std::size_t i) {
    double x[kMaxTorusDim];
    for (int c = 0; c < out.coords; ++c) x[c] = cloud[i](c);
    float* dst = out.data.data() + i * samples * out.coords;
    for (int k = 0; k < samples; ++k) {
      for (int c = 0; c < out.coords; ++c) dst[k * out.coords + c] = static_cast<float>(x[c]);
      if (k + 1 < samples) map.step(x, x);
    }
  });
  return out;
}

TrajectoryCloud flow_trajectories(const SuspensionFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                  double time_step, int samples, int workers) {
  if (samples < 1 || !(time_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad flow sampling parameters");
  const BaseMap& f = flow.base_map();
  const int m = f.dim();
  TrajectoryCloud out;
  out.coords = m + 1;
  out.samples = samples;
  out.roof_map = f;
  out.data.resize(cloud.size() * samples * out.coords);
  out.kept.resize(cloud.size());
  std::iota(out.kept.begin(), out.kept.end(), std::size_t{0});
  parallel_for(cloud.size(), workers, [&](std::size_t i) {
    double x[kMaxTorusDim];
    for (int c = 0; c < m; ++c) x[c] = cloud[i].base(c);
    long long crossed = 0;
    float* dst = out.data.data() + i * samples * out.coords;
    for (int k = 0; k < samples; ++k) {
      const double total = cloud[i].height + time_step * k;
      long long target = static_cast<long long>(std::floor(total));
      double h = total - static_cast<double>(target);
      if (h >= 1.0) {
        h = 0.0;
        ++target;
      }
      for (; crossed < target; ++crossed) f.step(x, x);
      for (int c = 0; c < m; ++c) dst[k * out.coords + c] = static_cast<float>(x[c]);
      dst[k * out.coords + m] = static_cast<float>(h);
    }
  });
  return out;
}

TrajectoryCloud phi_trajectories(const TimeChangedFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                 double time_step, int samples, int workers, const PhiCloudOptions& options,
                                 std::vector<std::size_t>* dropped) {
  if (samples < 1 || !(time_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad flow sampling parameters");
  const SuspensionFlow& psi = flow.flow();
  const int m = psi.base_dim();
  const int D = m + 1;
  const SpeedField* field = flow.clock().speed_field();
  const bool singular = field && field->has_singularity();
  const TimeChangedFlow walk_flow =
      options.clock_tol > 0.0
          ? TimeChangedFlow(flow.clock().with_tolerances(options.clock_tol, options.clock_tol), flow.inversion_tol(),
                            flow.horizon())
          : flow;

  std::vector<std::vector<float>> per_point(cloud.size());
  std::vector<double> weight(cloud.size(), 1.0);
  std::vector<char> keep(cloud.size(), 1);
  parallel_for(cloud.size(), workers, [&](std::size_t i) {
    if (field && options.density_weights) {
      weight[i] = 1.0 / (*field)(cloud[i]);
      if (!std::isfinite(weight[i])) {
        keep[i] = 0;
        return;
      }
    }
    try {
      ClockWalker walker(walk_flow, cloud[i]);
      std::vector<float>& dst = per_point[i];
      dst.resize(static_cast<std::size_t>(samples) * D);
      for (int k = 0; k < samples; ++k) {
        const double s = walker.psi_time_at(time_step * k);
        if (walker.stuck()) {
          keep[i] = 0;
          return;
        }
        const SuspensionPoint q = walker.point_at(s);
        if (singular && dist_susp(psi, q, field->stopped_point()) < options.singular_tol) {
          keep[i] = 0;
          return;
        }
        for (int c = 0; c < m; ++c) dst[k * D + c] = static_cast<float>(q.base(c));
        dst[k * D + m] = static_cast<float>(q.height);
      }
    } catch (const Error& e) {
      if (!e.is_divergence()) throw;
      keep[i] = 0;
    }
  });

  TrajectoryCloud out;
  out.coords = D;
  out.samples = samples;
  out.roof_map = psi.base_map();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) {
      if (dropped) dropped->push_back(i);
      continue;
    }
    out.kept.push_back(i);
    out.data.insert(out.data.end(), per_point[i].begin(), per_point[i].end());
    std::vector<float>().swap(per_point[i]);
    if (field && options.density_weights) out.weights.push_back(weight[i]);
  }
  return out;
}

double bowen_distance(const BaseMap& map, const TorusPoint& x, const TorusPoint& y, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "bowen_distance needs n >= 1");
  if (x.size() != map.dim() || y.size() != map.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  TorusPoint a = x;
  TorusPoint b = y;
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, dist_base(a, b));
    if (i + 1 < n) {
      map.step(a.data(), a.data());
      map.step(b.data(), b.data());
    }
  }
  return d;
}

long long katok_count(const TrajectoryCloud& cloud, double delta, int window, double eps, CountMethod method) {
  check_count_args(cloud, delta, window, eps);
  const GreedyCover cover = greedy_cover(cloud, delta, window, eps);
  if (method == CountMethod::GreedyCover) return static_cast<long long>(cover.selected.size());
  return max_separated(cloud, cover, window, eps);
}

long long katok_count(const BaseMap& map, const std::vector<TorusPoint>& cloud, double delta, int n, double eps,
                      CountMethod method) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "covering count on an empty cloud");
  return katok_count(map_trajectories(map, cloud, n), delta, n, eps, method);
}

long long box_factor(double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  return static_cast<long long>(std::floor(1.0 / eps)) + 1;
}

long long suspension_box_count(const TrajectoryCloud& base_cloud, const std::vector<double>& heights, double delta,
                               int n, double eps) {
  check_count_args(base_cloud, delta, n, eps);
  if (base_cloud.is_suspension()) throw Error(ErrorCode::InvalidArgument, "box count needs a base-map cloud");
  if (heights.size() != base_cloud.size()) throw Error(ErrorCode::InvalidArgument, "one height per cloud point");
  const GreedyCover cover = greedy_cover(base_cloud, delta, n, eps);
  const long long k = box_factor(eps);
  std::vector<char> in_core(cover.claimed.size(), 0);
  for (int b : cover.selected) in_core[b] = 1;
  std::vector<char> used(cover.claimed.size() * static_cast<std::size_t>(k), 0);
  long long count = 0;
  for (std::size_t i = 0; i < base_cloud.size(); ++i) {
    const int b = cover.owner[i];
    if (!in_core[b]) continue;
    const long long band = std::min(static_cast<long long>(std::floor(heights[i] / eps)), k - 1);
    char& slot = used[static_cast<std::size_t>(b) * k + band];
    if (!slot) {
      slot = 1;
      ++count;
    }
  }
  return count;
}

}  // namespace flowlab
