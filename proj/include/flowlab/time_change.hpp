// Additive clocks theta(t, q) = int_0^t a(psi_s q) ds, their inverses tau, and
// the time-changed flow phi_t q = psi_{tau(t, q)} q.
//
// A speed field alpha generates the flow of alpha X; its clock integrand is
// a = 1 / alpha, so that d tau / dt = alpha(psi_tau q).
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "flowlab/quadrature.hpp"
#include "flowlab/speed_field.hpp"
#include "flowlab/suspension.hpp"

namespace flowlab {

class AdditiveClock {
 public:
  using Integrand = std::function<double(const SuspensionPoint&)>;

  AdditiveClock(SuspensionFlow flow, Integrand integrand, double quad_step = 0.01, double quad_tol = 1e-12,
                double quadrature_cap = 1e12);

  /// a = 1 / alpha for the flow of alpha X.
  static AdditiveClock from_speed(const SpeedField& field, double quad_tol = 1e-12, double quadrature_cap = 1e12);
  /// a = c.
  static AdditiveClock constant(const SuspensionFlow& flow, double c);

  const SuspensionFlow& flow() const { return flow_; }
  double rate(const SuspensionPoint& q) const { return integrand_(q); }
  double quad_step() const { return quad_step_; }
  double quad_tol() const { return quad_tol_; }
  double quadrature_cap() const { return cap_; }
  double quad_rel_tol() const { return rel_tol_; }
  /// Copy with other quadrature tolerances; the per-unit-length absolute
  /// tolerance and the relative one.
  AdditiveClock with_tolerances(double quad_tol, double rel_tol) const;
  /// The speed field this clock was built from, if any.
  const SpeedField* speed_field() const { return field_.get(); }
  /// Set for a constant integrand a = c.
  std::optional<double> constant_rate() const { return constant_rate_; }

  /// Exact value of the clock increment over [s, s + len] started at q, when it
  /// is known without quadrature (constant clocks, or speed-field clocks on
  /// stretches that stay outside the chart ball where a = 1).
  std::optional<double> exact_increment(const SuspensionPoint& q, double len) const;
  /// psi-time for which q is guaranteed to stay where a = 1 (0 if unknown).
  double unit_rate_reach(const SuspensionPoint& q) const;

  QuadratureOptions quadrature_options() const;

 private:
  SuspensionFlow flow_;
  Integrand integrand_;
  double quad_step_;
  double quad_tol_;
  double cap_;
  double rel_tol_ = 1e-12;
  std::shared_ptr<const SpeedField> field_;
  std::optional<double> constant_rate_;
};

/// int_0^t a(psi_s q) ds for t >= 0. Throws IntegrandUnbounded when the
/// integral passes the quadrature cap (the orbit runs into the singular point).
double theta(const AdditiveClock& clock, const SuspensionPoint& q, double t);

class TimeChangedFlow {
 public:
  explicit TimeChangedFlow(AdditiveClock clock, double inversion_tol = 1e-11, double horizon = 1e6)
      : clock_(std::move(clock)), inversion_tol_(inversion_tol), horizon_(horizon) {}

  const AdditiveClock& clock() const { return clock_; }
  const SuspensionFlow& flow() const { return clock_.flow(); }
  double inversion_tol() const { return inversion_tol_; }
  double horizon() const { return horizon_; }

 private:
  AdditiveClock clock_;
  double inversion_tol_;
  double horizon_;
};

/// sup{s : theta(s, q) <= t}. Throws NotInvertible when theta stays below t up
/// to the horizon.
double tau(const TimeChangedFlow& flow, const SuspensionPoint& q, double t);

SuspensionPoint phi_advance(const TimeChangedFlow& flow, const SuspensionPoint& q, double t);

/// phi_{k dt} q for k = 0..count-1, computed by one monotone sweep of the clock.
std::vector<SuspensionPoint> phi_trajectory(const TimeChangedFlow& flow, const SuspensionPoint& q, double dt,
                                            int count);

/// Walks the psi-orbit of q accumulating the clock; targets must be requested in
/// nondecreasing order.
class ClockWalker {
 public:
  ClockWalker(const AdditiveClock& clock, const SuspensionPoint& q, double inversion_tol = 1e-11,
              double horizon = 1e6);
  ClockWalker(const TimeChangedFlow& flow, const SuspensionPoint& q)
      : ClockWalker(flow.clock(), q, flow.inversion_tol(), flow.horizon()) {}

  /// psi-time s with theta(s) = target (the sup when theta jumps past target).
  double psi_time_at(double target);
  /// theta(s) for nondecreasing s; +inf past a singular point.
  double theta_at(double s);

  double psi_time() const { return s_; }
  double clock_value() const { return theta_; }
  /// True once the orbit has run into the singular point.
  bool stuck() const { return stuck_; }

  /// psi_s q for s >= 0, sharing the cached base iterate.
  SuspensionPoint point_at(double s);

 private:
  const SuspensionPoint& scratch_at(double s);
  double rate_at(double s) { return clock_.rate(scratch_at(s)); }
  /// int_a^b of the clock integrand; capped when it passes the cap.
  QuadratureResult integrate(double a, double b);
  /// Clock increment over [s_, s_ + len]; exact when possible.
  QuadratureResult increment(double len);

  const AdditiveClock& clock_;
  SuspensionPoint q_;
  double inversion_tol_;
  double horizon_;
  double s_ = 0.0;
  double theta_ = 0.0;
  bool stuck_ = false;  // theta is infinite beyond s_
  long long cached_k_ = 0;
  SuspensionPoint scratch_;
};

}  // namespace flowlab
