#include "flowlab/lab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "flowlab/entropy.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/recurrence.hpp"
#include "flowlab/return_time.hpp"
#include "flowlab/sampling.hpp"

namespace flowlab::lab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent random streams hanging off the run seed. The numbering is part
// of the output format: changing it changes every sample.
enum Stream : std::uint64_t {
  kCloud = 1,
  kHeights = 2,
  kRecurrenceStarts = 3,
  kClockChecks = 4,
  kGammaSamples = 5,
  kTailProfile = 6,
  kWitness = 7,
  kBallMeasure = 8,
  kDoubledCloud = 9,
  kDoubledGamma = 10,
};

CounterRng stream(std::uint64_t seed, Stream s) { return CounterRng(seed).split(s); }

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

RunManifest start_manifest(const std::string& command, const ExperimentConfig& config) {
  RunManifest m;
  m.command = command;
  m.config = effective_json(config);
  return m;
}

SuspensionPoint stopped_point(const StoppedPointSpec& spec, int dim) {
  SuspensionPoint p;
  if (static_cast<int>(spec.base.size()) == dim) {
    p.base = Eigen::Map<const Eigen::VectorXd>(spec.base.data(), dim);
  } else {
    p.base = TorusPoint::Constant(dim, 0.3);
  }
  p.height = spec.height;
  return p;
}

SpeedField build_field(const FieldSpec& spec, const SuspensionFlow& flow, const FlatProfile* profile) {
  if (spec.kind == "constant") return SpeedField::constant(flow, spec.value);
  const SuspensionPoint p = stopped_point(spec.p, flow.base_dim());
  if (spec.kind == "quadratic") return SpeedField::quadratic(flow, p, spec.chart_radius);
  if (!profile) throw Error(ErrorCode::InvalidArgument, "flat field needs a profile");
  const FlatProfile shaped = spec.floor_depth > 0 ? profile->with_floor_depth(spec.floor_depth) : *profile;
  return SpeedField::flat(flow, shaped, p, spec.chart_radius);
}

void merge_warnings(RunManifest& manifest, const EntropyEstimate& est, const std::string& what) {
  for (const auto& w : est.warnings) manifest.warn(what + ": " + w);
}

void write_summary(OutputDir& out, const std::string& command, json& summary) {
  bool all = true;
  for (const auto& [name, ok] : summary["checks"].items()) all = all && ok.get<bool>();
  summary["command"] = command;
  summary["all_checks_pass"] = all;
  out.write_json(command + "_summary.json", summary);
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// Relative tolerance for an entropy oracle: zero-entropy systems get an
// absolute floor instead.
bool matches_entropy(double estimate, double oracle, double rel, double zero_floor = 0.02) {
  if (oracle <= zero_floor) return estimate < zero_floor;
  return within(estimate, oracle, rel);
}

}  // namespace

// --- profile ------------------------------------------------------------------

FlatProfile configured_profile(const ProfileSpec& spec, const BaseMap& map, std::uint64_t seed, RunManifest& manifest,
                               const std::string& key) {
  json d;
  FlatProfile profile;
  if (!spec.betas.empty()) {
    profile = make_flat_profile(spec.betas, spec.truncation_tol);
    d["source"] = "explicit";
  } else {
    std::string route = spec.recurrence;
    if (route == "auto") route = map.is_isometry() ? "certified" : "empirical";
    std::vector<TorusPoint> starts;
    if (route == "empirical") {
      BirkhoffOptions bo;
      bo.count = static_cast<std::size_t>(spec.recurrence_starts);
      starts = birkhoff_samples(map, bo, stream(seed, kRecurrenceStarts));
    }
    json ls = json::array();
    bool certified = true;
    auto recurrence_L = [&](int i) {
      const double eps = 1.0 / i;
      const RecurrenceReport r =
          route == "certified" ? recurrence_constant(map, eps) : empirical_recurrence(map, eps, starts);
      certified = certified && r.is_certified;
      ls.push_back({{"i", i}, {"eps", eps}, {"L", r.L}, {"certified", r.is_certified}});
      return r.L;
    };
    json shell = json::array();
    auto shell_l = [&](int i) {
      const double l = spec.l_scale / i;
      shell.push_back({{"i", i}, {"l", l}});
      return l;
    };
    profile = build_flat_profile(recurrence_L, shell_l, spec.i0, spec.count, spec.truncation_tol);
    d["source"] = "recipe";
    d["recurrence_route"] = route;
    d["recurrence_certified"] = certified;
    d["L_values"] = ls;
    d["l_sequence"] = shell;
    if (!certified) {
      manifest.warn("uncertified recurrence: L(1/i) for the flat profile was measured along " +
                    std::to_string(starts.size()) + " typical orbits of " + map.describe() +
                    ", not certified for every starting point");
    }
  }
  d["betas"] = profile.betas;
  d["regularized"] = profile.regularized;
  d["profile"] = to_json(profile);
  manifest.derived[key] = d;
  return profile;
}

// --- flatfn -------------------------------------------------------------------

json run_flatfn(const ExperimentConfig& config, const RunOptions& options) {
  RunManifest manifest = start_manifest("flatfn", config);
  OutputDir out(options.out_dir, manifest);
  Stopwatch sw;
  const FlatProfile profile = configured_profile(config.profile, config.base_map.build(), config.seed, manifest);
  manifest.timings.emplace_back("profile", sw.lap());
  const FlatFnSection& s = config.flatfn;
  json summary;
  json& checks = summary["checks"];

  // Values and series derivatives: the left half-line, then a log grid.
  std::vector<double> ts = {-1.0, -0.5, -0.1, -0.01, -1e-6, 0.0};
  for (int i = 0; i < s.grid_points; ++i) {
    const double u = s.grid_points == 1 ? 0.0 : static_cast<double>(i) / (s.grid_points - 1);
    ts.push_back(s.t_min * std::pow(s.t_max / s.t_min, u));
  }
  CsvTable values({"t", "eta", "d1", "d2", "d3", "d4"});
  bool zero_left = true;
  for (double t : ts) {
    const double eta = eta_eval(profile, t);
    if (t <= 0.0) zero_left = zero_left && eta == 0.0;
    values.cell(t).cell(eta);
    for (int k = 1; k <= 4; ++k) values.cell(eta_derivative(profile, t, k));
    values.end_row();
  }
  out.write("flatfn_values.csv", values.str());
  checks["zero_for_nonpositive_t"] = zero_left;

  bool plateau = true;
  for (int i = 0; i <= 100; ++i) plateau = plateau && eta_eval(profile, 1.0 + i / 100.0) == 1.0;
  checks["one_on_1_2"] = plateau;

  // Shell k is (alpha_{k+1}, alpha_k); the bound holds on all of (0, alpha_k)
  // and the series is increasing, so the shell carries the maximum.
  CsvTable shells({"k", "t_low", "t_high", "samples", "max_eta", "bound", "max_eta_extended", "pass"});
  bool shells_ok = true;
  json shell_rows = json::array();
  for (int k = 0; k < s.shells; ++k) {
    const double lo = FlatProfile::alpha(k + 1);
    const double hi = FlatProfile::alpha(k);
    double max_eta = 0.0;
    double max_ext = 0.0;
    for (int j = 0; j < s.per_shell; ++j) {
      const double t = lo * std::pow(hi / lo, (j + 1.0) / (s.per_shell + 1.0));
      max_eta = std::max(max_eta, eta_series(profile, t));
      max_ext = std::max(max_ext, eta_eval(profile, t));
    }
    const double bound = profile.beta(k) * mollifier_h(1.0) / std::ldexp(1.0, k);
    const bool pass = max_eta < bound;
    shells_ok = shells_ok && pass;
    shells.cell(k).cell(lo).cell(hi).cell(s.per_shell).cell(max_eta).cell(bound).cell(max_ext).cell(pass);
    shells.end_row();
    shell_rows.push_back({{"k", k}, {"max_eta", max_eta}, {"bound", bound}, {"pass", pass}});
  }
  out.write("flatfn_shells.csv", shells.str());
  checks["shell_bounds"] = shells_ok;
  summary["shells"] = shell_rows;

  // Finite differences at t = 10^-j with step t/10, next to the series values.
  CsvTable deriv({"j", "t", "order", "finite_difference", "series"});
  std::vector<std::vector<double>> fd(4);
  for (int j = 1; j <= s.derivative_exponents; ++j) {
    const double t = std::pow(10.0, -j);
    for (int k = 1; k <= 4; ++k) {
      const double v = eta_derivative_fd(profile, t, k, t / 10.0);
      fd[k - 1].push_back(v);
      deriv.cell(j).cell(t).cell(k).cell(v).cell(eta_derivative(profile, t, k)).end_row();
    }
  }
  out.write("flatfn_derivatives.csv", deriv.str());
  bool decreasing = true;
  for (const auto& col : fd) {
    for (std::size_t j = 1; j < col.size(); ++j) decreasing = decreasing && std::abs(col[j]) <= std::abs(col[j - 1]);
    if (!col.empty()) decreasing = decreasing && std::abs(col.back()) < std::max(std::abs(col.front()), 1e-300);
  }
  checks["derivatives_decrease_to_zero"] = decreasing;
  summary["finite_differences"] = fd;

  manifest.timings.emplace_back("tables", sw.lap());
  write_summary(out, "flatfn", summary);
  out.finalize();
  return summary;
}

// --- entropy ------------------------------------------------------------------

json run_entropy(const ExperimentConfig& config, const RunOptions& options) {
  RunManifest manifest = start_manifest("entropy", config);
  OutputDir out(options.out_dir, manifest);
  Stopwatch sw;
  const int W = options.workers;
  const BaseMap map = config.base_map.build();
  const EntropySection& sec = config.entropy;
  json summary;
  json& checks = summary["checks"];

  const std::vector<TorusPoint> base = birkhoff_samples(map, config.sampling, stream(config.seed, kCloud), W);
  manifest.timings.emplace_back("sampling", sw.lap());

  std::optional<EntropyEstimate> map_est;
  if (sec.map) {
    validate(config.grid);
    const TrajectoryCloud traj = map_trajectories(map, base, config.grid.n_values.back(), W);
    map_est = estimate_from_grid(katok_grid(traj, config.grid, config.grid.n_values, W));
    merge_warnings(manifest, *map_est, "map");
    out.write("entropy_map_grid.csv", grid_csv(map_est->grid));
    json j = to_json(*map_est);
    if (auto h = map.known_entropy()) j["oracle"] = *h;
    out.write_json("entropy_map.json", j);
    summary["map"] = {{"estimate", map_est->extrapolated}, {"error", map_est->extrapolated_error}};
    if (auto h = map.known_entropy()) {
      summary["map"]["oracle"] = *h;
      checks["map_matches_oracle"] = matches_entropy(map_est->extrapolated, *h, 0.10);
    }
    manifest.timings.emplace_back("map_grid", sw.lap());

    // Box-count sandwich on every unsaturated cell of the map grid.
    std::vector<double> heights;
    const SuspensionFlow psi(map);
    for (const auto& q : suspension_samples(psi, base, stream(config.seed, kHeights))) heights.push_back(q.height);
    struct Cell {
      std::size_t e, j;
      long long box = 0;
    };
    std::vector<Cell> cells;
    const EntropyGrid& g = map_est->grid;
    for (std::size_t e = 0; e < g.spec.eps_values.size(); ++e) {
      for (std::size_t j = 0; j < g.spec.n_values.size(); ++j) {
        if (g.raw_counts[e][j] >= 0 && !g.saturated[e][j]) cells.push_back({e, j});
      }
    }
    parallel_for(cells.size(), W, [&](std::size_t c) {
      Cell& cell = cells[c];
      cell.box = suspension_box_count(traj, heights, g.spec.delta, g.spec.n_values[cell.j], g.spec.eps_values[cell.e]);
    });
    CsvTable sandwich({"n", "eps", "map_count", "box_count", "k_eps", "upper", "pass"});
    bool sandwich_ok = !cells.empty();
    for (const Cell& cell : cells) {
      const double eps = g.spec.eps_values[cell.e];
      const long long r = g.raw_counts[cell.e][cell.j];
      const long long k = box_factor(eps);
      const bool pass = r <= cell.box && cell.box <= k * r;
      sandwich_ok = sandwich_ok && pass;
      sandwich.cell(g.spec.n_values[cell.j]).cell(eps).cell(r).cell(cell.box).cell(k).cell(k * r).cell(pass).end_row();
    }
    out.write("entropy_box_sandwich.csv", sandwich.str());
    checks["box_sandwich"] = sandwich_ok;
    manifest.timings.emplace_back("box_sandwich", sw.lap());

    if (sec.alt_delta) {
      EntropyGridSpec alt = config.grid;
      alt.delta = *sec.alt_delta;
      const EntropyEstimate alt_est = estimate_from_grid(katok_grid(traj, alt, alt.n_values, W));
      out.write("entropy_map_alt_delta_grid.csv", grid_csv(alt_est.grid));
      out.write_json("entropy_map_alt_delta.json", to_json(alt_est));
      summary["alt_delta"] = {{"delta", alt.delta}, {"estimate", alt_est.extrapolated}};
      checks["delta_independence"] =
          matches_entropy(alt_est.extrapolated, std::max(map_est->extrapolated, 0.0), 0.10);
      manifest.timings.emplace_back("alt_delta_grid", sw.lap());
    }
  }

  const SuspensionFlow psi(map);
  const std::vector<SuspensionPoint> cloud = suspension_samples(psi, base, stream(config.seed, kHeights));
  std::optional<EntropyEstimate> psi_est;
  if (sec.suspension || (sec.time_change && sec.totoki)) {
    psi_est = entropy_estimate_flow(psi, cloud, config.grid, W);
    merge_warnings(manifest, *psi_est, "suspension");
    out.write("entropy_suspension_grid.csv", grid_csv(psi_est->grid));
    out.write_json("entropy_suspension.json", to_json(*psi_est));
    summary["suspension"] = {{"estimate", psi_est->extrapolated}, {"error", psi_est->extrapolated_error}};
    if (map_est) {
      const double ratio = psi_est->extrapolated / map_est->extrapolated;
      summary["suspension"]["ratio_to_map"] = ratio;
      checks["suspension_matches_map"] = matches_entropy(psi_est->extrapolated, map_est->extrapolated, 0.15);
    }
    manifest.timings.emplace_back("suspension_grid", sw.lap());
  }

  if (sec.time_change) {
    std::optional<FlatProfile> profile;
    if (sec.time_change->kind == "flat") profile = configured_profile(config.profile, map, config.seed, manifest);
    const SpeedField field = build_field(*sec.time_change, psi, profile ? &*profile : nullptr);
    const TimeChangedFlow phi(AdditiveClock::from_speed(field));
    // The invariant mass first: a divergent one ends the run before the
    // expensive grids.
    const DensityReport K = pushforward_density(field, cloud);
    if (sec.totoki && K.diverged) throw Error(ErrorCode::DivergedMeasure, "mu_hat(Omega) diverges on the cloud");
    // A constant clock a = c > 1 runs c times slower through psi; stretch the
    // time grid so that the same psi-windows are visited.
    EntropyGridSpec spec = config.grid;
    if (auto c = phi.clock().constant_rate(); c && *c > 1.0) {
      for (int& n : spec.n_values) n = static_cast<int>(std::lround(n * *c));
      spec.n_values.erase(std::unique(spec.n_values.begin(), spec.n_values.end()), spec.n_values.end());
    }
    manifest.derived["time_change_n_values"] = spec.n_values;
    const EntropyEstimate phi_est = entropy_estimate_flow(phi, cloud, spec, W);
    merge_warnings(manifest, phi_est, "time change");
    out.write("entropy_timechange_grid.csv", grid_csv(phi_est.grid));
    out.write_json("entropy_timechange.json", to_json(phi_est));
    summary["time_change"] = {{"estimate", phi_est.extrapolated},
                              {"error", phi_est.extrapolated_error},
                              {"dropped_points", phi_est.dropped_points}};
    manifest.timings.emplace_back("time_change_grid", sw.lap());

    if (sec.totoki) {
      const bool constant = phi.clock().constant_rate().has_value();
      // The same estimate on an independent cloud twice the size.
      BirkhoffOptions doubled = config.sampling;
      doubled.count *= 2;
      const std::vector<SuspensionPoint> cloud2 = suspension_samples(
          psi, birkhoff_samples(map, doubled, stream(config.seed, kDoubledCloud), W), stream(config.seed, kDoubledCloud).split(1));
      const DensityReport K2 = pushforward_density(field, cloud2);
      const double drift = K2.diverged ? kInf : std::abs(K2.value - K.value) / K.value;
      const TotokiReport t = totoki_from_estimates(phi_est, *psi_est, K.value, K.std_error);
      json j = to_json(t);
      j["K_doubled"] = K2.diverged ? json(nullptr) : json(K2.value);
      j["K_drift"] = drift;
      out.write_json("entropy_totoki.json", j);
      summary["totoki"] = j;
      checks["totoki_ratio"] = within(t.ratio, 1.0, constant ? 0.05 : 0.25);
      checks["K_stable_under_doubling"] = drift < 0.05;
      manifest.timings.emplace_back("totoki", sw.lap());
    }
  }

  write_summary(out, "entropy", summary);
  out.finalize();
  return summary;
}

// --- recurrence ---------------------------------------------------------------

json run_recurrence(const ExperimentConfig& config, const RunOptions& options) {
  RunManifest manifest = start_manifest("recurrence", config);
  OutputDir out(options.out_dir, manifest);
  Stopwatch sw;
  const BaseMap map = config.base_map.build();
  const RecurrenceSection& sec = config.recurrence;
  RecurrenceOptions ro;
  ro.grid_resolution = sec.grid_resolution;
  ro.horizon = sec.horizon;

  std::vector<TorusPoint> starts;
  if (!map.is_isometry()) {
    BirkhoffOptions bo;
    bo.count = static_cast<std::size_t>(config.profile.recurrence_starts);
    starts = birkhoff_samples(map, bo, stream(config.seed, kRecurrenceStarts));
  }
  std::vector<RecurrenceReport> reports(sec.eps_values.size());
  parallel_for(reports.size(), options.workers, [&](std::size_t i) {
    const double eps = sec.eps_values[i];
    reports[i] = map.is_isometry() ? recurrence_constant(map, eps, ro) : empirical_recurrence(map, eps, starts, ro);
  });
  manifest.timings.emplace_back("recurrence", sw.lap());

  json summary;
  json& checks = summary["checks"];
  // The grid certificate checks radius 3 eps / 4, so it bounds the exact
  // gap-oracle value from above.
  CsvTable table({"eps", "L", "certified", "gap_oracle_L", "equals_oracle", "grid_resolution"});
  bool oracle_ok = true;
  bool any_oracle = false;
  bool certified = true;
  json rows = json::array();
  for (const auto& r : reports) {
    table.cell(r.epsilon).cell(r.L).cell(r.is_certified ? "certified" : "uncertified");
    if (r.gap_oracle_L) {
      table.cell(*r.gap_oracle_L).cell(*r.gap_oracle_L == r.L);
      any_oracle = true;
      oracle_ok = oracle_ok && r.L >= *r.gap_oracle_L;
    } else {
      table.cell("").cell("");
    }
    table.cell(r.witness_grid_resolution).end_row();
    certified = certified && r.is_certified;
    rows.push_back({{"eps", r.epsilon},
                    {"L", r.L},
                    {"certified", r.is_certified},
                    {"gap_oracle_L", r.gap_oracle_L ? json(*r.gap_oracle_L) : json(nullptr)}});
  }
  out.write("recurrence.csv", table.str());
  summary["rows"] = rows;
  if (any_oracle) checks["bounded_below_by_gap_oracle"] = oracle_ok;
  if (!certified) {
    manifest.warn("uncertified recurrence: L(eps) was measured along " + std::to_string(starts.size()) +
                  " typical orbits of " + map.describe() + ", not certified for every starting point");
  }

  // Smaller balls take at least as long to reach.
  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return reports[a].epsilon < reports[b].epsilon; });
  bool monotone = true;
  for (std::size_t i = 1; i < order.size(); ++i) monotone = monotone && reports[order[i - 1]].L >= reports[order[i]].L;
  checks["monotone_in_eps"] = monotone;

  if (certified) {
    const auto centers = uniform_torus_samples(map.dim(), static_cast<std::size_t>(sec.centers),
                                               stream(config.seed, kBallMeasure));
    const TorusPoint start = uniform_torus_samples(map.dim(), 1, stream(config.seed, kBallMeasure).split(1))[0];
    std::vector<BallMeasureCheck> balls(reports.size());
    parallel_for(reports.size(), options.workers, [&](std::size_t i) {
      balls[i] = ball_measure_bound_check(map, reports[i].epsilon, reports[i], centers, start, sec.orbit_length);
    });
    CsvTable bt({"eps", "center", "frequency", "bound", "pass"});
    bool balls_ok = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      balls_ok = balls_ok && balls[i].pass;
      for (std::size_t c = 0; c < balls[i].frequency.size(); ++c) {
        bt.cell(reports[i].epsilon).cell(c).cell(balls[i].frequency[c]).cell(balls[i].bound).cell(balls[i].pass);
        bt.end_row();
      }
    }
    out.write("recurrence_ball_measure.csv", bt.str());
    checks["ball_measure_bound"] = balls_ok;
    manifest.timings.emplace_back("ball_measure", sw.lap());
  }

  write_summary(out, "recurrence", summary);
  out.finalize();
  return summary;
}

// --- timechange ---------------------------------------------------------------

json run_timechange(const ExperimentConfig& config, const RunOptions& options) {
  RunManifest manifest = start_manifest("timechange", config);
  OutputDir out(options.out_dir, manifest);
  Stopwatch sw;
  const BaseMap map = config.base_map.build();
  const SuspensionFlow psi(map);
  const TimeChangeSection& sec = config.timechange;

  std::optional<FlatProfile> profile;
  if (sec.field.kind == "flat") profile = configured_profile(config.profile, map, config.seed, manifest);
  const SpeedField field = build_field(sec.field, psi, profile ? &*profile : nullptr);
  const AdditiveClock clock = AdditiveClock::from_speed(field);
  const TimeChangedFlow phi(clock, sec.inversion_tol);

  struct Check {
    SuspensionPoint q;
    double s = 0.0, t = 0.0;
    double theta_s = 0.0, theta_t = 0.0, theta_st = 0.0;
    double residual = 0.0, scaled = 0.0, round_trip = 0.0;
    bool skipped = false;
  };
  std::vector<Check> rows(static_cast<std::size_t>(sec.checks));
  const CounterRng checks_rng = stream(config.seed, kClockChecks);
  parallel_for(rows.size(), options.workers, [&](std::size_t i) {
    CounterRng rng = checks_rng.split(i);
    Check& c = rows[i];
    c.q.base = TorusPoint(map.dim());
    for (int d = 0; d < map.dim(); ++d) c.q.base(d) = rng.uniform();
    c.q.height = rng.uniform();
    c.s = sec.max_time * rng.uniform();
    c.t = sec.max_time * rng.uniform();
    try {
      c.theta_s = theta(clock, c.q, c.s);
      c.theta_t = theta(clock, psi.advance(c.q, c.s), c.t);
      c.theta_st = theta(clock, c.q, c.s + c.t);
      c.residual = std::abs(c.theta_st - c.theta_s - c.theta_t);
      c.scaled = c.residual / std::max(1.0, c.theta_st);
      c.round_trip = std::abs(tau(phi, c.q, c.theta_st) - (c.s + c.t));
    } catch (const Error& e) {
      if (!e.is_divergence()) throw;
      c.skipped = true;  // the orbit runs into the stopped point
    }
  });
  manifest.timings.emplace_back("cocycle_checks", sw.lap());

  json summary;
  json& checks = summary["checks"];
  CsvTable table({"index", "s", "t", "theta_s", "theta_t_shifted", "theta_s_plus_t", "residual", "scaled_residual",
                  "round_trip_error", "skipped"});
  double worst = 0.0;
  double worst_trip = 0.0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Check& c = rows[i];
    table.cell(i).cell(c.s).cell(c.t).cell(c.theta_s).cell(c.theta_t).cell(c.theta_st).cell(c.residual);
    table.cell(c.scaled).cell(c.round_trip).cell(c.skipped).end_row();
    if (c.skipped) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, c.scaled);
    worst_trip = std::max(worst_trip, c.round_trip);
  }
  out.write("timechange_checks.csv", table.str());
  if (skipped > 0) manifest.warn("skipped " + std::to_string(skipped) + " checks whose orbit reaches the stopped point");

  // Histogram of log10 scaled residuals over [-18, -8]; the end bins are open.
  const int bins = sec.histogram_bins;
  const double lo = -18.0;
  const double hi = -8.0;
  std::vector<long long> hist(static_cast<std::size_t>(bins), 0);
  for (const Check& c : rows) {
    if (c.skipped) continue;
    const double x = c.scaled > 0.0 ? std::log10(c.scaled) : lo;
    const int b = std::clamp(static_cast<int>(std::floor((x - lo) / (hi - lo) * bins)), 0, bins - 1);
    ++hist[static_cast<std::size_t>(b)];
  }
  CsvTable ht({"log10_low", "log10_high", "count"});
  for (int b = 0; b < bins; ++b) {
    ht.cell(lo + (hi - lo) * b / bins).cell(lo + (hi - lo) * (b + 1) / bins).cell(hist[static_cast<std::size_t>(b)]);
    ht.end_row();
  }
  out.write("timechange_residual_histogram.csv", ht.str());
  summary["max_scaled_residual"] = worst;
  summary["max_round_trip_error"] = worst_trip;
  summary["skipped"] = skipped;
  checks["cocycle_residual"] = worst < 1e-9;
  checks["round_trip"] = worst_trip < 1e-8;

  // Constant clock a = c: theta = c t, tau = t / c, phi_t = psi_{t/c}.
  const double c = sec.constant_rate;
  const TimeChangedFlow constant(AdditiveClock::constant(psi, c), sec.inversion_tol);
  const SuspensionPoint q0 = rows.empty() ? SuspensionPoint{TorusPoint::Constant(map.dim(), 0.25), 0.25} : rows[0].q;
  CsvTable ct({"c", "t", "theta", "tau", "tau_over_t", "expected_tau_over_t", "phi_psi_distance", "pass"});
  bool constant_ok = true;
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    const double th = theta(constant.clock(), q0, t);
    const double ta = tau(constant, q0, t);
    const double dist = dist_susp(psi, phi_advance(constant, q0, t), psi.advance(q0, t / c));
    const double tol = std::max(sec.inversion_tol, 4.0 * std::numeric_limits<double>::epsilon() * t * c);
    const bool pass = std::abs(th - c * t) <= tol && std::abs(ta - t / c) <= tol && dist <= tol;
    constant_ok = constant_ok && pass;
    ct.cell(c).cell(t).cell(th).cell(ta).cell(ta / t).cell(1.0 / c).cell(dist).cell(pass).end_row();
  }
  out.write("timechange_constant.csv", ct.str());
  checks["constant_clock_laws"] = constant_ok;
  manifest.timings.emplace_back("constant_clock", sw.lap());

  write_summary(out, "timechange", summary);
  out.finalize();
  return summary;
}

// --- dichotomy ----------------------------------------------------------------

namespace {

json estimate_row(const std::string& flow, int depth, const EntropyEstimate& est) {
  return {{"flow", flow},
          {"depth", depth},
          {"estimate", est.extrapolated},
          {"error", est.extrapolated_error},
          {"dropped_points", est.dropped_points}};
}

struct DichotomyRun {
  const ExperimentConfig& config;
  const RunOptions& options;
  RunManifest manifest;
  OutputDir out;
  Stopwatch sw;
  json report;

  DichotomyRun(const ExperimentConfig& c, const RunOptions& o)
      : config(c), options(o), manifest(start_manifest("dichotomy", c)), out(o.out_dir, manifest) {
    report["checks"] = json::object();
    report["stages_completed"] = json::array();
  }

  void finish_stage(const std::string& name) {
    manifest.timings.emplace_back(name, sw.lap());
    report["stages_completed"].push_back(name);
    out.write_json("dichotomy_report.json", report);
  }

  void run();
};

void DichotomyRun::run() {
  const int W = options.workers;
  const DichotomySection& sec = config.dichotomy;
  const BaseMap map = config.base_map.build();
  if (map.kind() != BaseMapKind::ToralAutomorphism) {
    throw Error(ErrorCode::Config, "/base_map: dichotomy needs a toral automorphism");
  }
  const SuspensionFlow psi(map);
  const SuspensionPoint p = stopped_point(sec.p, map.dim());
  json& checks = report["checks"];

  const FlatProfile profile = configured_profile(config.profile, map, config.seed, manifest);
  const std::vector<TorusPoint> base = birkhoff_samples(map, config.sampling, stream(config.seed, kCloud), W);
  const std::vector<SuspensionPoint> cloud = suspension_samples(psi, base, stream(config.seed, kHeights));
  finish_stage("setup");

  // (a) entropy of psi, of the quadratic time change and of the flat ones.
  CsvTable entropy({"flow", "depth", "estimate", "error", "dropped_points", "K", "totoki_prediction", "status"});
  const EntropyEstimate psi_est = entropy_estimate_flow(psi, cloud, config.grid, W);
  merge_warnings(manifest, psi_est, "psi");
  out.write("dichotomy_psi_grid.csv", grid_csv(psi_est.grid));
  entropy.cell("psi").cell(0).cell(psi_est.extrapolated).cell(psi_est.extrapolated_error).cell(0).cell(1.0);
  entropy.cell(psi_est.extrapolated).cell("ok").end_row();
  report["psi"] = estimate_row("psi", 0, psi_est);
  finish_stage("psi");

  const SpeedField quad = SpeedField::quadratic(psi, p, sec.chart_radius);
  const TimeChangedFlow phi_hat(AdditiveClock::from_speed(quad));
  const EntropyEstimate hat_est = entropy_estimate_flow(phi_hat, cloud, config.grid, W);
  merge_warnings(manifest, hat_est, "quadratic");
  out.write("dichotomy_quadratic_grid.csv", grid_csv(hat_est.grid));
  const DensityReport K = pushforward_density(quad, cloud);
  if (K.diverged) throw Error(ErrorCode::DivergedMeasure, "mu_hat(Omega) diverges for the quadratic field");
  const TotokiReport totoki = totoki_from_estimates(hat_est, psi_est, K.value, K.std_error);
  entropy.cell("quadratic").cell(0).cell(hat_est.extrapolated).cell(hat_est.extrapolated_error);
  entropy.cell(hat_est.dropped_points).cell(K.value).cell(psi_est.extrapolated / K.value).cell("ok").end_row();
  report["quadratic"] = estimate_row("quadratic", 0, hat_est);
  report["totoki"] = to_json(totoki);
  out.write_json("dichotomy_totoki.json", to_json(totoki));
  checks["quadratic_keeps_half_of_psi"] = hat_est.extrapolated >= 0.5 * psi_est.extrapolated;
  finish_stage("quadratic");

  json flat_rows = json::array();
  std::vector<double> flat_values;
  bool flat_failed = false;
  for (int depth : sec.flat_depths) {
    const SpeedField field = SpeedField::flat(psi, profile.with_floor_depth(depth), p, sec.chart_radius);
    const TimeChangedFlow phi(AdditiveClock::from_speed(field));
    try {
      const EntropyEstimate est = entropy_estimate_flow(phi, cloud, config.grid, W);
      merge_warnings(manifest, est, "flat depth " + std::to_string(depth));
      out.write("dichotomy_flat_" + std::to_string(depth) + "_grid.csv", grid_csv(est.grid));
      const DensityReport KI = pushforward_density(field, cloud);
      const double predicted = KI.diverged ? 0.0 : psi_est.extrapolated / KI.value;
      entropy.cell("flat").cell(depth).cell(est.extrapolated).cell(est.extrapolated_error).cell(est.dropped_points);
      entropy.cell(KI.diverged ? kInf : KI.value).cell(predicted).cell("ok").end_row();
      json row = estimate_row("flat", depth, est);
      row["K"] = KI.diverged ? json(nullptr) : json(KI.value);
      row["totoki_prediction"] = predicted;
      flat_rows.push_back(row);
      flat_values.push_back(est.extrapolated);
    } catch (const Error& e) {
      // A failed depth is reported and breaks the sequence.
      entropy.cell("flat").cell(depth).cell(kInf).cell(kInf).cell(0).cell(kInf).cell(kInf).cell(to_string(e.code()));
      entropy.end_row();
      flat_rows.push_back({{"flow", "flat"}, {"depth", depth}, {"error", e.what()}});
      flat_failed = true;
    }
    report["flat"] = flat_rows;
    out.write("dichotomy_entropy.csv", entropy.str());
    finish_stage("flat_depth_" + std::to_string(depth));
  }
  bool flat_ok = !flat_failed && !flat_values.empty();
  for (std::size_t i = 1; i < flat_values.size(); ++i) flat_ok = flat_ok && flat_values[i] <= flat_values[i - 1];
  if (flat_ok) flat_ok = flat_values.back() < 0.1;
  checks["flat_decreases_below_0_1"] = flat_ok;

  // (b) expected return time: flat depths, the unfloored flat profile, and
  // the quadratic field at two sample sizes.
  const BaseMap gmap = sec.gamma_base_map ? sec.gamma_base_map->build() : map;
  const SuspensionFlow gpsi(gmap);
  const SuspensionPoint gp = stopped_point(sec.p, gmap.dim());
  const FlatProfile gprofile = sec.gamma_base_map
                                   ? configured_profile(config.profile, gmap, config.seed, manifest, "gamma_profile")
                                   : profile;
  BirkhoffOptions gopt = config.sampling;
  gopt.count = sec.gamma_samples;
  const std::vector<TorusPoint> gsamples = birkhoff_samples(gmap, gopt, stream(config.seed, kGammaSamples), W);
  CsvTable gamma_table({"field", "depth", "samples", "expected_gamma", "diverged", "diverged_samples"});
  json gamma_rows = json::array();
  auto gamma_row = [&](const std::string& name, int depth, const SpeedField& f, const std::vector<TorusPoint>& xs) {
    const ExpectedGammaReport r = expected_gamma(f, xs, 1e12, W);
    const double v = r.diverged ? kInf : r.value;
    gamma_table.cell(name).cell(depth).cell(xs.size()).cell(v).cell(r.diverged).cell(r.diverged_samples).end_row();
    gamma_rows.push_back({{"field", name},
                          {"depth", depth},
                          {"samples", xs.size()},
                          {"expected_gamma", r.diverged ? json(nullptr) : json(r.value)},
                          {"diverged", r.diverged}});
    return v;
  };
  std::vector<double> flat_gamma;
  for (int depth : sec.flat_depths) {
    flat_gamma.push_back(gamma_row("flat", depth, SpeedField::flat(gpsi, gprofile.with_floor_depth(depth), gp, sec.chart_radius), gsamples));
  }
  const double unfloored = gamma_row("flat", 0, SpeedField::flat(gpsi, gprofile, gp, sec.chart_radius), gsamples);
  const SpeedField gquad = SpeedField::quadratic(gpsi, gp, sec.chart_radius);
  const double q1 = gamma_row("quadratic", 0, gquad, gsamples);
  gopt.count = 2 * sec.gamma_samples;
  const double q2 = gamma_row("quadratic", 0, gquad, birkhoff_samples(gmap, gopt, stream(config.seed, kDoubledGamma), W));
  out.write("dichotomy_gamma.csv", gamma_table.str());

  // Diverged counts as +inf: each depth at least doubles the previous one,
  // and once diverged the trace stays diverged.
  bool growth = !flat_gamma.empty() && std::isinf(flat_gamma.back()) && std::isinf(unfloored);
  for (std::size_t i = 1; i < flat_gamma.size(); ++i) {
    growth = growth && (std::isinf(flat_gamma[i]) || (!std::isinf(flat_gamma[i - 1]) && flat_gamma[i] >= 2.0 * flat_gamma[i - 1]));
  }
  checks["flat_gamma_diverges"] = growth;
  const double drift = std::isfinite(q1) && std::isfinite(q2) ? std::abs(q2 - q1) / q1 : kInf;
  checks["quadratic_gamma_stable"] = drift < 0.05;

  // Forced two-dimensional analogue: the quadratic field over a circle base.
  const SuspensionFlow circle(BaseMap::golden_rotation());
  const SpeedField forced =
      SpeedField::quadratic(circle, SuspensionPoint{TorusPoint::Constant(1, 0.5), 0.5}, sec.chart_radius);
  const TailProfile tail2 = density_tail_profile(forced, 12, 4000, stream(config.seed, kTailProfile));
  const TailProfile tail3 = density_tail_profile(gquad, 12, 4000, stream(config.seed, kTailProfile).split(1));
  CsvTable tails({"analogue", "shell", "inner_radius", "contribution", "cumulative"});
  auto tail_rows = [&](const char* name, const TailProfile& t) {
    for (std::size_t k = 0; k < t.contribution.size(); ++k) {
      tails.cell(name).cell(k).cell(t.inner_radius[k]).cell(t.contribution[k]).cell(t.cumulative[k]).end_row();
    }
  };
  tail_rows("forced_2d", tail2);
  tail_rows("base_dim_plus_1", tail3);
  out.write("dichotomy_density_tail.csv", tails.str());
  report["gamma"] = gamma_rows;
  report["quadratic_gamma_drift"] = drift;
  report["tail"] = {{"forced_2d", {{"tail_ratio", tail2.tail_ratio}, {"diverged", tail2.diverged}}},
                    {"base_dim_plus_1", {{"tail_ratio", tail3.tail_ratio}, {"diverged", tail3.diverged}}}};
  checks["forced_2d_diverges"] = tail2.diverged;
  finish_stage("gamma");

  // (c) K and the Totoki ratio for the quadratic field, with K re-estimated
  // on an independent cloud twice the size.
  BirkhoffOptions doubled = config.sampling;
  doubled.count *= 2;
  const DensityReport K2 = pushforward_density(
      quad, suspension_samples(psi, birkhoff_samples(map, doubled, stream(config.seed, kDoubledCloud), W),
                               stream(config.seed, kDoubledCloud).split(1)));
  const double K_drift = K2.diverged ? kInf : std::abs(K2.value - K.value) / K.value;
  report["K"] = {{"value", K.value}, {"std_error", K.std_error}, {"doubled", K2.value}, {"drift", K_drift}};
  checks["K_stable_under_doubling"] = K_drift < 0.05;
  checks["totoki_ratio"] = within(totoki.ratio, 1.0, 0.25);
  finish_stage("totoki");

  // (d) the identity sends phi-hat orbits to phi orbits, preserving time.
  const SpeedField flat_field = SpeedField::flat(psi, profile, p, sec.chart_radius);
  const TimeChangedFlow phi_flat(AdditiveClock::from_speed(flat_field));
  const CounterRng wrng = stream(config.seed, kWitness);
  struct Witness {
    SuspensionPoint q;
    std::vector<EquivalenceRow> rows;
    std::string error;
  };
  std::vector<Witness> witnesses(static_cast<std::size_t>(sec.witness_points));
  parallel_for(witnesses.size(), W, [&](std::size_t i) {
    CounterRng rng = wrng.split(i);
    Witness& w = witnesses[i];
    w.q.base = TorusPoint(map.dim());
    for (int d = 0; d < map.dim(); ++d) w.q.base(d) = rng.uniform();
    w.q.height = rng.uniform();
    try {
      w.rows = orbit_equivalence_check(phi_flat, phi_hat, w.q, sec.witness_horizon, sec.witness_rows, sec.witness_tol);
    } catch (const Error& e) {
      w.error = e.what();
    }
  });
  CsvTable wt({"point", "row", "s", "t", "psi_time", "distance"});
  json wsum = json::array();
  bool witnesses_ok = true;
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    const Witness& w = witnesses[i];
    bool monotone = w.error.empty();
    for (std::size_t r = 0; r < w.rows.size(); ++r) {
      const EquivalenceRow& row = w.rows[r];
      wt.cell(i).cell(r).cell(row.s).cell(row.t).cell(row.psi_time).cell(row.distance).end_row();
      if (r > 0) monotone = monotone && row.t > w.rows[r - 1].t;
    }
    witnesses_ok = witnesses_ok && monotone;
    wsum.push_back({{"point", i}, {"monotone", monotone}, {"error", w.error.empty() ? json(nullptr) : json(w.error)}});
  }
  out.write("dichotomy_witness.csv", wt.str());
  report["witness"] = wsum;
  checks["witness_monotone"] = witnesses_ok;
  finish_stage("witness");
}

}  // namespace

json run_dichotomy(const ExperimentConfig& config, const RunOptions& options) {
  DichotomyRun run(config, options);
  try {
    run.run();
  } catch (const Error& e) {
    run.report["failed"] = e.what();
    run.out.write_json("dichotomy_report.json", run.report);
    run.out.finalize();
    throw;
  }
  write_summary(run.out, "dichotomy", run.report);
  run.out.finalize();
  return run.report;
}

// --- dispatch -----------------------------------------------------------------

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"flatfn", "entropy", "recurrence", "timechange", "dichotomy"};
  return names;
}

json run_command(const std::string& name, const ExperimentConfig& config, const RunOptions& options) {
  if (name == "flatfn") return run_flatfn(config, options);
  if (name == "entropy") return run_entropy(config, options);
  if (name == "recurrence") return run_recurrence(config, options);
  if (name == "timechange") return run_timechange(config, options);
  if (name == "dichotomy") return run_dichotomy(config, options);
  throw Error(ErrorCode::Config, "unknown command " + name);
}

}  // namespace flowlab::lab
