#include "flowlab/time_change.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowlab/errors.hpp"

namespace flowlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Stretches shorter than this are integrated rather than skipped.
constexpr double kMinReach = 1e-9;

}  // namespace

AdditiveClock::AdditiveClock(SuspensionFlow flow, Integrand integrand, double quad_step, double quad_tol,
                             double quadrature_cap)
    : flow_(std::move(flow)),
      integrand_(std::move(integrand)),
      quad_step_(quad_step),
      quad_tol_(quad_tol),
      cap_(quadrature_cap) {
  if (!integrand_) throw Error(ErrorCode::InvalidArgument, "clock integrand is empty");
  if (!(quad_step_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "quad_step must be positive");
  if (!(quad_tol_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "quad_tol must be positive");
  if (!(cap_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadrature_cap must be positive");
}

AdditiveClock AdditiveClock::from_speed(const SpeedField& field, double quad_tol, double quadrature_cap) {
  auto shared = std::make_shared<const SpeedField>(field);
  const double step = field.has_singularity() ? std::min(0.01, field.chart_radius() / 16.0) : 0.05;
  AdditiveClock clock(
      field.flow(), [shared](const SuspensionPoint& q) { return 1.0 / (*shared)(q); }, step, quad_tol,
      quadrature_cap);
  clock.field_ = shared;
  if (const auto* c = std::get_if<ConstantSpeed>(&field.kind())) clock.constant_rate_ = 1.0 / c->value;
  return clock;
}

AdditiveClock AdditiveClock::constant(const SuspensionFlow& flow, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "constant clock rate must be positive");
  AdditiveClock clock(flow, [c](const SuspensionPoint&) { return c; }, 0.05);
  clock.constant_rate_ = c;
  return clock;
}

AdditiveClock AdditiveClock::with_tolerances(double quad_tol, double rel_tol) const {
  if (!(quad_tol > 0.0) || !(rel_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  AdditiveClock c = *this;
  c.quad_tol_ = quad_tol;
  c.rel_tol_ = rel_tol;
  return c;
}

QuadratureOptions AdditiveClock::quadrature_options() const {
  QuadratureOptions opt;
  opt.abs_tol = quad_tol_;
  opt.rel_tol = rel_tol_;
  opt.max_panel = quad_step_;
  opt.cap = cap_;
  return opt;
}

double AdditiveClock::unit_rate_reach(const SuspensionPoint& q) const {
  if (constant_rate_) return *constant_rate_ == 1.0 ? kInf : 0.0;
  if (!field_ || !field_->has_singularity()) return 0.0;
  // In p's sheet only the height coordinate of the chart moves, at rate 2/r;
  // the sheet can change only once the height gap reaches 1/2.
  const Eigen::VectorXd xi = field_->chart(q);
  const double norm = xi.cwiseAbs().maxCoeff();
  if (norm <= 2.0) return 0.0;
  const double r = field_->chart_radius();
  const double to_switch = 0.5 - xi(xi.size() - 1) * r / 2.0;
  return std::min((norm - 2.0) * r / 2.0, to_switch);
}

std::optional<double> AdditiveClock::exact_increment(const SuspensionPoint& q, double len) const {
  if (constant_rate_) return *constant_rate_ * len;
  if (len <= unit_rate_reach(q)) return len;
  return std::nullopt;
}

// --- walker ------------------------------------------------------------------

ClockWalker::ClockWalker(const AdditiveClock& clock, const SuspensionPoint& q, double inversion_tol, double horizon)
    : clock_(clock), q_(q), inversion_tol_(inversion_tol), horizon_(horizon) {
  if (q.base.size() != clock.flow().base_dim()) throw Error(ErrorCode::InvalidArgument, "point dimension mismatch");
  if (!(q.height >= 0.0 && q.height < 1.0)) throw Error(ErrorCode::InvalidArgument, "height not in [0,1)");
  if (!(inversion_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "inversion_tol must be positive");
  scratch_ = q_;
}

const SuspensionPoint& ClockWalker::scratch_at(double s) {
  const double total = q_.height + s;
  long long k = static_cast<long long>(std::floor(total));
  double height = total - static_cast<double>(k);
  if (height >= 1.0) {
    height = 0.0;
    ++k;
  }
  if (k != cached_k_) {
    scratch_.base = k == 0 ? q_.base : clock_.flow().base_map().apply(q_.base, k);
    cached_k_ = k;
  }
  scratch_.height = height;
  return scratch_;
}

SuspensionPoint ClockWalker::point_at(double s) { return scratch_at(s); }

QuadratureResult ClockWalker::integrate(double a, double b) {
  QuadratureOptions opt = clock_.quadrature_options();
  opt.abs_tol = clock_.quad_tol() * std::max(b - a, 1e-300);
  return integrate_nonnegative([this](double s) { return rate_at(s); }, a, b, opt);
}

QuadratureResult ClockWalker::increment(double len) {
  if (auto exact = clock_.exact_increment(scratch_at(s_), len)) {
    QuadratureResult r;
    r.value = *exact;
    return r;
  }
  return integrate(s_, s_ + len);
}

double ClockWalker::theta_at(double s) {
  if (s < s_ - 1e-12) throw Error(ErrorCode::InvalidArgument, "theta_at requires nondecreasing psi-times");
  while (s_ < s) {
    if (stuck_) return kInf;
    const double len = s - s_;
    if (auto c = clock_.constant_rate()) {
      theta_ += *c * len;
      s_ = s;
      break;
    }
    const double reach = clock_.unit_rate_reach(scratch_at(s_));
    if (reach > kMinReach) {
      const double step = std::min(reach, len);
      theta_ += step;
      s_ = step == len ? s : s_ + step;
      continue;
    }
    const double step = std::min(clock_.quad_step(), len);
    const QuadratureResult seg = integrate(s_, s_ + step);
    if (seg.capped) {
      stuck_ = true;
      return kInf;
    }
    theta_ += seg.value;
    s_ = step == len ? s : s_ + step;
  }
  return stuck_ ? kInf : theta_;
}

double ClockWalker::psi_time_at(double target) {
  if (!(target >= 0.0)) throw Error(ErrorCode::InvalidArgument, "clock target must be nonnegative");
  while (true) {
    if (stuck_) return s_;
    const double need = target - theta_;
    if (need <= 0.0) return s_;
    if (s_ > horizon_) {
      throw Error(ErrorCode::NotInvertible, "clock stays below " + std::to_string(target) + " up to psi-time " +
                                                std::to_string(horizon_));
    }
    if (auto c = clock_.constant_rate()) {
      s_ += need / *c;
      theta_ = target;
      return s_;
    }
    const double reach = clock_.unit_rate_reach(scratch_at(s_));
    if (reach > kMinReach) {
      if (need <= reach) {
        s_ += need;
        theta_ = target;
        return s_;
      }
      s_ += reach;
      theta_ += reach;
      continue;
    }

    // Trial step sized from the local rate, so that orbits crawling past the
    // singular point do not integrate a full quad_step per target.
    double h = clock_.quad_step();
    const double a_now = rate_at(s_);
    if (std::isfinite(a_now) && a_now > 0.0) h = std::clamp(2.0 * need / a_now, 4.0 * inversion_tol_, h);
    const QuadratureResult seg = integrate(s_, s_ + h);
    if (!seg.capped && theta_ + seg.value < target) {
      s_ += h;
      theta_ += seg.value;
      continue;
    }

    // The target is reached inside [s_, s_ + h], or the orbit runs into the
    // singular point there. Safeguarded Newton on theta(x) - target, using
    // theta' = a.
    double lo = s_;
    double hi = s_ + h;
    double theta_lo = theta_;
    bool hi_capped = seg.capped;
    const double a_lo = rate_at(lo);
    double x = (std::isfinite(a_lo) && a_lo > 0.0) ? lo + need / a_lo : 0.5 * (lo + hi);
    bool converged = false;
    for (int iter = 0; iter < 300 && hi - lo > inversion_tol_; ++iter) {
      if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
      const QuadratureResult part = integrate(lo, x);
      if (part.capped) {
        hi = x;
        hi_capped = true;
        x = 0.5 * (lo + hi);
        continue;
      }
      const double val = theta_lo + part.value;
      const double diff = val - target;
      if (diff < 0.0) {
        lo = x;
        theta_lo = val;
      } else {
        hi = x;
        hi_capped = false;
      }
      const double a_x = rate_at(x);
      const double dx = diff / a_x;
      if (std::isfinite(dx) && std::abs(dx) <= 0.1 * inversion_tol_) {
        s_ = x;
        theta_ = target;
        converged = true;
        break;
      }
      x = std::isfinite(dx) ? x - dx : 0.5 * (lo + hi);
    }
    if (converged) return s_;
    if (hi_capped) {
      // theta jumps past every finite target: tau stays at the singular time.
      s_ = lo;
      theta_ = theta_lo;
      stuck_ = true;
      return s_;
    }
    s_ = 0.5 * (lo + hi);
    theta_ = target;
    return s_;
  }
}

// --- free functions ----------------------------------------------------------

double theta(const AdditiveClock& clock, const SuspensionPoint& q, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "theta requires t >= 0");
  ClockWalker walker(clock, q, 1e-11, kInf);
  const double value = walker.theta_at(t);
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::IntegrandUnbounded, "clock integral exceeds the quadrature cap along the orbit");
  }
  return value;
}

double tau(const TimeChangedFlow& flow, const SuspensionPoint& q, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tau requires t >= 0");
  ClockWalker walker(flow, q);
  return walker.psi_time_at(t);
}

SuspensionPoint phi_advance(const TimeChangedFlow& flow, const SuspensionPoint& q, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "phi_advance requires t >= 0");
  ClockWalker walker(flow, q);
  return walker.point_at(walker.psi_time_at(t));
}

std::vector<SuspensionPoint> phi_trajectory(const TimeChangedFlow& flow, const SuspensionPoint& q, double dt,
                                            int count) {
  if (!(dt > 0.0) || count < 0) throw Error(ErrorCode::InvalidArgument, "phi_trajectory needs dt > 0, count >= 0");
  ClockWalker walker(flow, q);
  std::vector<SuspensionPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(walker.point_at(walker.psi_time_at(dt * k)));
  return out;
}

}  // namespace flowlab
