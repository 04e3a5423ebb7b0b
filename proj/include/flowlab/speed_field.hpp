// Speed functions alpha: Omega -> [0,1] vanishing only at a stopped point p
// and equal to 1 away from a chart neighbourhood of p.
#pragma once

#include <Eigen/Core>
#include <variant>

#include "flowlab/flat_profile.hpp"
#include "flowlab/suspension.hpp"
#include "json.hpp"

namespace flowlab {

struct ConstantSpeed {
  double value = 1.0;
};
struct FlatSpeed {
  FlatProfile profile;
};
struct QuadraticSpeed {};

using SpeedKind = std::variant<ConstantSpeed, FlatSpeed, QuadraticSpeed>;

/// The chart xi maps q to (2 / chart_radius) times its displacement from p in
/// p's sheet, so B_Omega(p, chart_radius) lands in the radius-2 ball.
class SpeedField {
 public:
  static SpeedField constant(const SuspensionFlow& flow, double value);
  static SpeedField flat(const SuspensionFlow& flow, FlatProfile profile, SuspensionPoint p, double chart_radius);
  static SpeedField quadratic(const SuspensionFlow& flow, SuspensionPoint p, double chart_radius);

  const SuspensionFlow& flow() const { return flow_; }
  const SpeedKind& kind() const { return kind_; }
  const SuspensionPoint& stopped_point() const { return p_; }
  double chart_radius() const { return chart_radius_; }
  bool has_singularity() const { return !std::holds_alternative<ConstantSpeed>(kind_); }

  /// xi(q) in R^{m+1}.
  Eigen::VectorXd chart(const SuspensionPoint& q) const;

  double operator()(const SuspensionPoint& q) const;

  /// Max-norm of xi(q); the radial variable of the flat kind.
  double chart_max_norm(const SuspensionPoint& q) const;

 private:
  SpeedField(SuspensionFlow flow, SpeedKind kind, SuspensionPoint p, double r)
      : flow_(std::move(flow)), kind_(std::move(kind)), p_(std::move(p)), chart_radius_(r) {}

  void chart_into(const SuspensionPoint& q, double* out) const;

  SuspensionFlow flow_;
  SpeedKind kind_;
  SuspensionPoint p_;
  double chart_radius_ = 0.0;
};

inline double speed_at(const SpeedField& field, const SuspensionPoint& q) { return field(q); }

/// omega(x) for the quadratic kind as a function of the Euclidean chart norm:
/// rho^2 for rho <= 1/2, a smooth monotone blend to 1 on (1/2, 1), 1 beyond.
double quadratic_profile(double rho);

nlohmann::json to_json(const SpeedField& field);

}  // namespace flowlab
