#include "flowlab/entropy.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "flowlab/errors.hpp"
#include "flowlab/format.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/return_time.hpp"

namespace flowlab {

void validate(const EntropyGridSpec& spec) {
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  if (spec.n_values.empty() || spec.eps_values.empty()) throw Error(ErrorCode::InvalidArgument, "empty entropy grid");
  for (std::size_t j = 0; j < spec.n_values.size(); ++j) {
    // t = 0 is a legal flow cell (a pure spatial covering); maps reject it below
    if (spec.n_values[j] < 0) throw Error(ErrorCode::InvalidArgument, "n values must be >= 0");
    if (j > 0 && spec.n_values[j] <= spec.n_values[j - 1]) {
      throw Error(ErrorCode::InvalidArgument, "n values must be increasing");
    }
  }
  for (std::size_t e = 0; e < spec.eps_values.size(); ++e) {
    if (!(spec.eps_values[e] > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps values must be positive");
    if (e > 0 && spec.eps_values[e] >= spec.eps_values[e - 1]) {
      throw Error(ErrorCode::InvalidArgument, "eps values must be decreasing");
    }
  }
  if (!(spec.time_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "time_step must be positive");
  if (!(spec.saturation_fraction > 0.0 && spec.saturation_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "saturation_fraction must lie in (0, 1]");
  }
}

EntropyGrid katok_grid(const TrajectoryCloud& cloud, const EntropyGridSpec& spec, const std::vector<int>& windows,
                       int workers) {
  validate(spec);
  if (cloud.size() == 0) throw Error(ErrorCode::EmptyCloud, "entropy grid on an empty cloud");
  if (windows.size() != spec.n_values.size()) throw Error(ErrorCode::InvalidArgument, "one window per n value");
  for (int w : windows) {
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "windows must hold at least one sample");
  }
  const std::size_t E = spec.eps_values.size();
  const std::size_t J = spec.n_values.size();
  EntropyGrid grid;
  grid.spec = spec;
  grid.cloud_size = cloud.size();
  grid.raw_counts.assign(E, std::vector<long long>(J, -1));
  grid.counts.assign(E, std::vector<long long>(J, 0));
  grid.saturated.assign(E, std::vector<bool>(J, false));
  const double limit = spec.saturation_fraction * static_cast<double>(cloud.size());

  // Sweep n in wavefronts; once a row saturates, its later cells cannot
  // enter a fit and are skipped (raw count -1).
  std::vector<std::size_t> active(E);
  std::iota(active.begin(), active.end(), std::size_t{0});
  for (std::size_t j = 0; j < J && !active.empty(); ++j) {
    parallel_for(active.size(), workers, [&](std::size_t a) {
      const std::size_t e = active[a];
      grid.raw_counts[e][j] = katok_count(cloud, spec.delta, windows[j], spec.eps_values[e], spec.method);
    });
    std::vector<std::size_t> next;
    for (std::size_t e : active) {
      if (static_cast<double>(grid.raw_counts[e][j]) < limit) next.push_back(e);
    }
    active = std::move(next);
  }

  auto shortfall = [&](long long got, long long want) {
    ++grid.monotone_violations;
    grid.worst_violation =
        std::max(grid.worst_violation, 1.0 - static_cast<double>(got) / static_cast<double>(want));
  };
  // Running maxima along n, then along decreasing eps. A skipped cell
  // inherits its row's last computed count.
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t j = 0; j < J; ++j) {
      const long long raw = grid.raw_counts[e][j];
      const long long prev = j > 0 ? grid.counts[e][j - 1] : 0;
      if (raw >= 0 && raw < prev) shortfall(raw, prev);
      grid.counts[e][j] = std::max(raw, prev);
    }
  }
  for (std::size_t e = 1; e < E; ++e) {
    for (std::size_t j = 0; j < J; ++j) {
      if (grid.raw_counts[e][j] < 0 || grid.raw_counts[e - 1][j] < 0) continue;
      if (grid.counts[e][j] < grid.counts[e - 1][j]) {
        shortfall(grid.counts[e][j], grid.counts[e - 1][j]);
        grid.counts[e][j] = grid.counts[e - 1][j];
      }
    }
  }
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t j = 0; j < J; ++j) {
      grid.saturated[e][j] = grid.raw_counts[e][j] < 0 || static_cast<double>(grid.counts[e][j]) >= limit;
    }
  }
  return grid;
}

namespace {

SlopeFit fit_slope(const EntropyGrid& grid, std::size_t e) {
  SlopeFit fit;
  fit.eps = grid.spec.eps_values[e];
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < grid.spec.n_values.size(); ++j) {
    if (grid.saturated[e][j]) break;  // saturation persists for larger n
    xs.push_back(grid.spec.n_values[j]);
    ys.push_back(std::log(static_cast<double>(grid.counts[e][j])));
  }
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.valid = true;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  fit.std_error = xs.size() > 2 ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
  fit.n_first = static_cast<int>(xs.front());
  fit.n_last = static_cast<int>(xs.back());
  return fit;
}

std::vector<int> flow_windows(const EntropyGridSpec& spec) {
  std::vector<int> w;
  for (int t : spec.n_values) w.push_back(static_cast<int>(std::lround(t / spec.time_step)) + 1);
  return w;
}

void check_flow_spec(const EntropyGridSpec& spec) {
  validate(spec);
  if (spec.time_step > spec.eps_values.back() * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "time_step must not exceed the smallest eps");
  }
}

}  // namespace

EntropyEstimate estimate_from_grid(EntropyGrid grid) {
  EntropyEstimate est;
  for (std::size_t e = 0; e < grid.spec.eps_values.size(); ++e) est.fits.push_back(fit_slope(grid, e));
  std::vector<const SlopeFit*> valid;
  for (auto it = est.fits.rbegin(); it != est.fits.rend() && valid.size() < 2; ++it) {
    if (it->valid) valid.push_back(&*it);
  }
  if (valid.empty()) throw Error(ErrorCode::SaturatedGrid, "every eps saturates before two n values");
  const SlopeFit* best = valid[0];
  if (valid.size() > 1 && valid[1]->slope > best->slope) best = valid[1];
  est.extrapolated = best->slope;
  est.extrapolated_error = best->std_error;
  if (!est.fits.back().valid) est.warnings.push_back("smallest eps saturated; extrapolation uses larger eps");
  if (grid.monotone_violations > 0) {
    est.warnings.push_back("raw counts regularized in " + std::to_string(grid.monotone_violations) +
                           " cells (worst relative shortfall " + fmt17(grid.worst_violation) + ")");
  }
  est.grid = std::move(grid);
  return est;
}

EntropyEstimate entropy_estimate_map(const BaseMap& map, const std::vector<TorusPoint>& cloud,
                                     const EntropyGridSpec& spec, int workers) {
  validate(spec);
  if (spec.n_values.front() < 1) throw Error(ErrorCode::InvalidArgument, "map grids need n >= 1");
  const TrajectoryCloud traj = map_trajectories(map, cloud, spec.n_values.back(), workers);
  return estimate_from_grid(katok_grid(traj, spec, spec.n_values, workers));
}

EntropyEstimate entropy_estimate_flow(const SuspensionFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                      const EntropyGridSpec& spec, int workers) {
  check_flow_spec(spec);
  const std::vector<int> windows = flow_windows(spec);
  const TrajectoryCloud traj = flow_trajectories(flow, cloud, spec.time_step, windows.back(), workers);
  return estimate_from_grid(katok_grid(traj, spec, windows, workers));
}

EntropyEstimate entropy_estimate_flow(const TimeChangedFlow& flow, const std::vector<SuspensionPoint>& cloud,
                                      const EntropyGridSpec& spec, int workers, const PhiCloudOptions& options) {
  check_flow_spec(spec);
  const std::vector<int> windows = flow_windows(spec);
  std::vector<std::size_t> dropped;
  const TrajectoryCloud traj =
      phi_trajectories(flow, cloud, spec.time_step, windows.back(), workers, options, &dropped);
  if (traj.size() == 0) throw Error(ErrorCode::EmptyCloud, "every cloud point was dropped near the singular fiber");
  EntropyEstimate est = estimate_from_grid(katok_grid(traj, spec, windows, workers));
  est.dropped_points = dropped.size();
  if (!dropped.empty()) {
    est.warnings.push_back("excluded " + std::to_string(dropped.size()) +
                           " cloud points whose orbit comes within 1e-9 of the singular point");
  }
  return est;
}

TotokiReport totoki_from_estimates(const EntropyEstimate& phi, const EntropyEstimate& psi, double K, double K_error) {
  TotokiReport r;
  r.h_phi = phi.extrapolated;
  r.h_psi = psi.extrapolated;
  r.K = K;
  r.K_error = K_error;
  r.lhs = r.h_phi * K;
  r.rhs = r.h_psi;
  r.ratio = r.lhs / r.rhs;
  // first-order propagation of the three relative errors
  auto rel = [](double err, double v) { return v != 0.0 ? err / std::abs(v) : 0.0; };
  const double rr = std::hypot(std::hypot(rel(phi.extrapolated_error, r.h_phi), rel(K_error, K)),
                               rel(psi.extrapolated_error, r.h_psi));
  r.ratio_error = std::abs(r.ratio) * rr;
  return r;
}

TotokiReport totoki_check(const TimeChangedFlow& flow_hat, const std::vector<SuspensionPoint>& cloud,
                          const EntropyGridSpec& spec, int workers) {
  double K = 1.0;
  double K_error = 0.0;
  if (const auto c = flow_hat.clock().constant_rate()) {
    K = *c;  // mu_hat = a mu_bar with a constant
  } else {
    const SpeedField* field = flow_hat.clock().speed_field();
    if (!field) throw Error(ErrorCode::InvalidArgument, "totoki_check needs a clock built from a speed field");
    const DensityReport density = pushforward_density(*field, cloud);
    if (density.diverged) throw Error(ErrorCode::DivergedMeasure, "mu_hat(Omega) diverges");
    K = density.value;
    K_error = density.std_error;
  }
  const EntropyEstimate phi = entropy_estimate_flow(flow_hat, cloud, spec, workers);
  const EntropyEstimate psi = entropy_estimate_flow(flow_hat.flow(), cloud, spec, workers);
  return totoki_from_estimates(phi, psi, K, K_error);
}

std::string grid_csv(const EntropyGrid& grid) {
  std::ostringstream out;
  out << "delta,n,eps,count,method\n";
  for (std::size_t e = 0; e < grid.spec.eps_values.size(); ++e) {
    for (std::size_t j = 0; j < grid.spec.n_values.size(); ++j) {
      if (grid.raw_counts[e][j] < 0) continue;  // skipped past saturation
      out << fmt17(grid.spec.delta) << ',' << grid.spec.n_values[j] << ',' << fmt17(grid.spec.eps_values[e]) << ','
          << grid.raw_counts[e][j] << ',' << to_string(grid.spec.method) << '\n';
    }
  }
  return out.str();
}

nlohmann::json to_json(const EntropyEstimate& est) {
  nlohmann::json j;
  const EntropyGrid& g = est.grid;
  j["delta"] = g.spec.delta;
  j["n_values"] = g.spec.n_values;
  j["eps_values"] = g.spec.eps_values;
  j["method"] = to_string(g.spec.method);
  j["time_step"] = g.spec.time_step;
  j["saturation_fraction"] = g.spec.saturation_fraction;
  j["cloud_size"] = g.cloud_size;
  j["raw_counts"] = g.raw_counts;
  j["counts"] = g.counts;
  j["saturated"] = g.saturated;
  j["monotone_violations"] = g.monotone_violations;
  j["worst_violation"] = g.worst_violation;
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : est.fits) {
    fits.push_back({{"eps", f.eps},
                    {"valid", f.valid},
                    {"slope", f.slope},
                    {"intercept", f.intercept},
                    {"std_error", f.std_error},
                    {"residual_rms", f.residual_rms},
                    {"n_first", f.n_first},
                    {"n_last", f.n_last},
                    {"points", f.points}});
  }
  j["fits"] = fits;
  j["extrapolated"] = est.extrapolated;
  j["extrapolated_error"] = est.extrapolated_error;
  j["dropped_points"] = est.dropped_points;
  j["warnings"] = est.warnings;
  return j;
}

nlohmann::json to_json(const TotokiReport& r) {
  return {{"h_phi", r.h_phi}, {"h_psi", r.h_psi}, {"K", r.K},     {"K_error", r.K_error},
          {"lhs", r.lhs},     {"rhs", r.rhs},     {"ratio", r.ratio}, {"ratio_error", r.ratio_error}};
}

}  // namespace flowlab
