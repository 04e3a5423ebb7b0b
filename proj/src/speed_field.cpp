#include "flowlab/speed_field.hpp"

#include <cmath>
#include <limits>

#include "flowlab/errors.hpp"

namespace flowlab {

namespace {

void check_chart(const SuspensionFlow& flow, const SuspensionPoint& p, double r) {
  if (!(r > 0.0 && r < 0.5)) throw Error(ErrorCode::InvalidArgument, "chart_radius must lie in (0, 1/2)");
  if (p.base.size() != flow.base_dim()) throw Error(ErrorCode::InvalidArgument, "stopped point dimension mismatch");
  if (!(p.height >= 0.0 && p.height < 1.0)) throw Error(ErrorCode::InvalidArgument, "stopped point height not in [0,1)");
}

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = mollifier_h(u);
  const double b = mollifier_h(1.0 - u);
  return a / (a + b);
}

// Values that underflow off the singular point are reported as the smallest
// positive double so that positivity away from p survives.
double keep_positive(double v, bool at_p) {
  if (at_p) return 0.0;
  return v > 0.0 ? v : std::numeric_limits<double>::denorm_min();
}

}  // namespace

SpeedField SpeedField::constant(const SuspensionFlow& flow, double value) {
  if (!(value > 0.0)) throw Error(ErrorCode::InvalidArgument, "constant speed must be positive");
  SuspensionPoint p{TorusPoint::Zero(flow.base_dim()), 0.0};
  return SpeedField(flow, ConstantSpeed{value}, p, 0.25);
}

SpeedField SpeedField::flat(const SuspensionFlow& flow, FlatProfile profile, SuspensionPoint p, double chart_radius) {
  check_chart(flow, p, chart_radius);
  if (profile.betas.empty()) throw Error(ErrorCode::InvalidArgument, "flat profile has no betas");
  return SpeedField(flow, FlatSpeed{std::move(profile)}, std::move(p), chart_radius);
}

SpeedField SpeedField::quadratic(const SuspensionFlow& flow, SuspensionPoint p, double chart_radius) {
  check_chart(flow, p, chart_radius);
  return SpeedField(flow, QuadraticSpeed{}, std::move(p), chart_radius);
}

void SpeedField::chart_into(const SuspensionPoint& q, double* out) const {
  const BaseMap& f = flow_.base_map();
  const int m = f.dim();
  const double gap = q.height - p_.height;
  int k = 0;
  if (std::abs(gap - 1.0) < std::abs(gap)) {
    k = 1;
  } else if (std::abs(gap + 1.0) < std::abs(gap)) {
    k = -1;
  }
  double buf[kMaxTorusDim];
  if (k == 1) {
    f.step(q.base.data(), buf);
  } else if (k == -1) {
    f.step_inverse(q.base.data(), buf);
  } else {
    for (int i = 0; i < m; ++i) buf[i] = q.base(i);
  }
  const double scale = 2.0 / chart_radius_;
  for (int i = 0; i < m; ++i) out[i] = scale * wrap_signed(buf[i] - p_.base(i));
  out[m] = scale * (gap - k);
}

Eigen::VectorXd SpeedField::chart(const SuspensionPoint& q) const {
  Eigen::VectorXd out(flow_.base_dim() + 1);
  chart_into(q, out.data());
  return out;
}

double SpeedField::chart_max_norm(const SuspensionPoint& q) const {
  double buf[kMaxTorusDim + 1];
  chart_into(q, buf);
  double n = 0.0;
  for (int i = 0; i <= flow_.base_dim(); ++i) n = std::max(n, std::abs(buf[i]));
  return n;
}

double SpeedField::operator()(const SuspensionPoint& q) const {
  if (const auto* c = std::get_if<ConstantSpeed>(&kind_)) return c->value;

  double xi[kMaxTorusDim + 1];
  chart_into(q, xi);
  const int n = flow_.base_dim() + 1;
  double max_norm = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    max_norm = std::max(max_norm, std::abs(xi[i]));
    sq += xi[i] * xi[i];
  }
  const bool at_p = max_norm == 0.0;
  if (max_norm >= 2.0) return 1.0;

  if (const auto* flat = std::get_if<FlatSpeed>(&kind_)) {
    return keep_positive(eta_eval(flat->profile, max_norm), at_p);
  }
  return keep_positive(quadratic_profile(std::sqrt(sq)), at_p);
}

double quadratic_profile(double rho) {
  if (rho <= 0.5) return rho * rho;
  if (rho >= 1.0) return 1.0;
  const double s = smooth_step((rho - 0.5) / 0.5);
  return (1.0 - s) * rho * rho + s;
}

nlohmann::json to_json(const SpeedField& field) {
  nlohmann::json j;
  if (const auto* c = std::get_if<ConstantSpeed>(&field.kind())) {
    j["kind"] = "constant";
    j["value"] = c->value;
    return j;
  }
  if (const auto* flat = std::get_if<FlatSpeed>(&field.kind())) {
    j["kind"] = "flat";
    j["profile"] = to_json(flat->profile);
  } else {
    j["kind"] = "quadratic";
  }
  const auto& p = field.stopped_point();
  j["p"] = {{"base", std::vector<double>(p.base.data(), p.base.data() + p.base.size())}, {"height", p.height}};
  j["chart_radius"] = field.chart_radius();
  return j;
}

}  // namespace flowlab
