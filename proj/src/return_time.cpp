#include "flowlab/return_time.hpp"

#include <cmath>
#include <limits>

#include "flowlab/errors.hpp"
#include "flowlab/parallel.hpp"

namespace flowlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fiber_panel(const SpeedField& field) {
  return field.has_singularity() ? std::min(0.01, field.chart_radius() / 16.0) : 0.05;
}

}  // namespace

bool fiber_hits_singularity(const SpeedField& field, const TorusPoint& x, double tol) {
  if (!field.has_singularity()) return false;
  const SuspensionFlow& flow = field.flow();
  const SuspensionPoint& p = field.stopped_point();
  if (dist_susp(flow, SuspensionPoint{x, p.height}, p) < tol) return true;
  if (p.height == 0.0 && dist_base(flow.base_map().apply(x, 1), p.base) < tol) return true;
  return false;
}

ReturnTimeReport gamma(const SpeedField& field, const TorusPoint& x, double quadrature_cap) {
  ReturnTimeReport report;
  report.quadrature_cap = quadrature_cap;
  if (x.size() != field.flow().base_dim()) throw Error(ErrorCode::InvalidArgument, "gamma: dimension mismatch");
  if (const auto* c = std::get_if<ConstantSpeed>(&field.kind())) {
    report.value = 1.0 / c->value;
    return report;
  }
  if (fiber_hits_singularity(field, x)) {
    report.diverged = true;
    report.value = kInf;
    return report;
  }
  const TorusPoint top = field.flow().base_map().apply(x, 1);
  SuspensionPoint scratch{x, 0.0};
  SuspensionPoint roof{top, 0.0};
  auto integrand = [&](double u) {
    if (u >= 1.0) return 1.0 / field(roof);
    scratch.height = u;
    return 1.0 / field(scratch);
  };
  QuadratureOptions opt;
  opt.abs_tol = 1e-10;
  opt.rel_tol = 1e-10;
  opt.max_panel = fiber_panel(field);
  opt.cap = quadrature_cap;
  const QuadratureResult r = integrate_nonnegative(integrand, 0.0, 1.0, opt);
  report.diverged = r.capped;
  report.value = r.capped ? kInf : r.value;
  return report;
}

ExpectedGammaReport expected_gamma(const SpeedField& field, const std::vector<TorusPoint>& samples,
                                   double quadrature_cap, int workers) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "expected_gamma needs at least one sample");
  ExpectedGammaReport out;
  out.per_sample.assign(samples.size(), 0.0);
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const ReturnTimeReport r = gamma(field, samples[i], quadrature_cap);
    out.per_sample[i] = r.diverged ? kInf : r.value;
  });
  out.running_mean.reserve(samples.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double g = out.per_sample[i];
    if (!std::isfinite(g)) ++out.diverged_samples;
    sum += g;
    const double mean = sum / static_cast<double>(i + 1);
    out.running_mean.push_back(mean);
    if (!(mean <= quadrature_cap)) out.diverged = true;
  }
  out.value = out.diverged ? kInf : sum / static_cast<double>(samples.size());
  return out;
}

double push_measure_gamma(const SpeedField& field, const std::vector<TorusPoint>& samples,
                          const std::function<double(const SuspensionPoint&)>& xi, int workers,
                          double quadrature_cap) {
  const ExpectedGammaReport denom = expected_gamma(field, samples, quadrature_cap, workers);
  if (denom.diverged) throw Error(ErrorCode::DivergedDenominator, "E_mu(gamma) diverges on the sample set");

  const TimeChangedFlow flow(AdditiveClock::from_speed(field, 1e-12, quadrature_cap));
  std::vector<double> numer(samples.size(), 0.0);
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const double g = denom.per_sample[i];
    // composite Simpson in phi-time on an even grid of spacing <= 0.01
    long steps = 2 * static_cast<long>(std::ceil(g / 0.02));
    steps = std::clamp(steps, 64L, 200000L);
    const double dt = g / static_cast<double>(steps);
    ClockWalker walker(flow, SuspensionPoint{samples[i], 0.0});
    double acc = 0.0;
    for (long k = 0; k <= steps; ++k) {
      const double w = (k == 0 || k == steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      // stay on the fiber over x: the last node is the left limit at height 1,
      // not the wrapped point (f(x), 0)
      const double s = std::min(walker.psi_time_at(dt * static_cast<double>(k)), 1.0);
      acc += w * xi(SuspensionPoint{samples[i], s});
    }
    numer[i] = acc * dt / 3.0;
  });
  double num = 0.0;
  for (double v : numer) num += v;
  return (num / static_cast<double>(samples.size())) / denom.value;
}

DensityReport pushforward_density(const SpeedField& field_hat, const std::vector<SuspensionPoint>& samples,
                                  const std::function<bool(const SuspensionPoint&)>& region, double quadrature_cap) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "pushforward_density needs samples");
  DensityReport out;
  out.count = samples.size();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& q : samples) {
    if (region && !region(q)) continue;
    const double w = 1.0 / field_hat(q);
    sum += w;
    sum_sq += w * w;
  }
  const double n = static_cast<double>(samples.size());
  out.value = sum / n;
  out.diverged = !(out.value <= quadrature_cap);
  if (out.diverged) {
    out.value = kInf;
    out.std_error = kInf;
  } else {
    const double var = std::max(0.0, sum_sq / n - out.value * out.value);
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

TailProfile density_tail_profile(const SpeedField& field, int shells, std::size_t samples_per_shell,
                                 const CounterRng& rng) {
  if (!field.has_singularity()) throw Error(ErrorCode::InvalidArgument, "tail profile needs a stopped point");
  if (shells < 2 || samples_per_shell == 0) throw Error(ErrorCode::InvalidArgument, "tail profile needs >= 2 shells");
  const SuspensionFlow& flow = field.flow();
  const SuspensionPoint& p = field.stopped_point();
  const int m = flow.base_dim();
  const int n = m + 1;
  const double half_r = field.chart_radius() / 2.0;

  TailProfile out;
  for (int k = 0; k < shells; ++k) {
    // max-norm shell [a, 2a) of the chart, a = 2^{-k}
    const double a = std::ldexp(1.0, -k);
    const double b = 2.0 * a;
    CounterRng local = rng.split(static_cast<std::uint64_t>(k));
    double sum = 0.0;
    std::size_t drawn = 0;
    Eigen::VectorXd xi(n);
    while (drawn < samples_per_shell) {
      for (int i = 0; i < n; ++i) xi(i) = b * (2.0 * local.uniform() - 1.0);
      if (xi.cwiseAbs().maxCoeff() < a) continue;
      TorusPoint base(m);
      for (int i = 0; i < m; ++i) base(i) = p.base(i) + half_r * xi(i);
      const SuspensionPoint q = flow.canonical(base, p.height + half_r * xi(m));
      sum += 1.0 / field(q) - 1.0;
      ++drawn;
    }
    const double volume = (std::pow(2.0 * b, n) - std::pow(2.0 * a, n)) * std::pow(half_r, n);
    out.inner_radius.push_back(a);
    out.contribution.push_back(volume * sum / static_cast<double>(samples_per_shell));
  }
  double acc = 0.0;
  for (double c : out.contribution) {
    acc += c;
    out.cumulative.push_back(acc);
  }
  double ratio_sum = 0.0;
  int ratio_count = 0;
  bool infinite = false;
  for (int k = std::max(1, shells / 2); k < shells; ++k) {
    const double prev = out.contribution[k - 1];
    const double cur = out.contribution[k];
    if (!std::isfinite(cur) || !std::isfinite(prev)) {
      infinite = true;
      continue;
    }
    if (prev > 0.0) {
      ratio_sum += cur / prev;
      ++ratio_count;
    }
  }
  out.tail_ratio = infinite ? kInf : (ratio_count > 0 ? ratio_sum / ratio_count : 0.0);
  out.diverged = infinite || out.tail_ratio >= 0.75;
  return out;
}

std::vector<EquivalenceRow> orbit_equivalence_check(const TimeChangedFlow& flow_a, const TimeChangedFlow& flow_b,
                                                    const SuspensionPoint& q, double horizon, int rows, double tol) {
  if (!(horizon > 0.0) || rows < 1) throw Error(ErrorCode::InvalidArgument, "equivalence check needs horizon > 0");
  for (const TimeChangedFlow* f : {&flow_a, &flow_b}) {
    const SpeedField* field = f->clock().speed_field();
    if (field && field->has_singularity() &&
        dist_susp(f->flow(), q, field->stopped_point()) < kSingularHitTol) {
      throw Error(ErrorCode::InvalidArgument, "equivalence check requires q != p");
    }
  }
  std::vector<EquivalenceRow> out;
  out.push_back(EquivalenceRow{0.0, 0.0, 0.0, 0.0});
  for (int j = 1; j <= rows; ++j) {
    EquivalenceRow row;
    row.s = horizon * j / rows;
    ClockWalker walker_b(flow_b, q);
    row.psi_time = walker_b.psi_time_at(row.s);
    if (walker_b.stuck()) throw Error(ErrorCode::WitnessNotFound, "orbit of flow b runs into its singular point");
    ClockWalker walker_a(flow_a.clock(), q, flow_a.inversion_tol(), flow_a.horizon());
    row.t = walker_a.theta_at(row.psi_time);
    if (!std::isfinite(row.t)) throw Error(ErrorCode::WitnessNotFound, "clock of flow a diverges along the orbit");
    const SuspensionPoint pa = phi_advance(flow_a, q, row.t);
    const SuspensionPoint pb = phi_advance(flow_b, q, row.s);
    row.distance = dist_susp(flow_a.flow(), pa, pb);
    if (!(row.distance < tol)) {
      throw Error(ErrorCode::WitnessNotFound, "matched points " + std::to_string(row.distance) + " apart at s = " +
                                                  std::to_string(row.s));
    }
    if (!(row.t > out.back().t)) throw Error(ErrorCode::WitnessNotFound, "matched times not strictly increasing");
    out.push_back(row);
  }
  return out;
}

}  // namespace flowlab
