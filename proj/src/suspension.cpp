#include "flowlab/suspension.hpp"

#include <cmath>

#include "flowlab/errors.hpp"

namespace flowlab {

SuspensionPoint SuspensionFlow::canonical(const TorusPoint& base, double height) const {
  const double k = std::floor(height);
  SuspensionPoint out;
  out.height = height - k;
  long long crossings = static_cast<long long>(k);
  if (out.height >= 1.0) {  // rounding of height - floor(height)
    out.height = 0.0;
    ++crossings;
  }
  out.base = crossings == 0 ? wrap_point(base) : base_map_.apply(base, crossings);
  return out;
}

SuspensionPoint SuspensionFlow::advance(const SuspensionPoint& q, double t) const {
  if (q.base.size() != base_map_.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in advance");
  if (t == 0.0) return q;
  return canonical(q.base, q.height + t);
}

double dist_susp(const SuspensionFlow& flow, const SuspensionPoint& q, const SuspensionPoint& w) {
  const BaseMap& f = flow.base_map();
  const int m = f.dim();
  double best = dist_base(q.base, w.base);
  best = std::max(best, std::abs(q.height - w.height));

  // Lift k = +1: w sits at height s_w + 1 above q's sheet, i.e. (f^{-1} x_w, s_w + 1),
  // or equivalently q drops to (f x_q, s_q - 1) in w's sheet.
  double buf[kMaxTorusDim];
  for (int k : {1, -1}) {
    const double dh = std::abs(q.height - w.height - k);
    if (dh >= best) continue;
    double d1, d2;
    if (k == 1) {
      f.step_inverse(w.base.data(), buf);
      d1 = 0.0;
      for (int i = 0; i < m; ++i) d1 = std::max(d1, circle_distance(q.base(i), buf[i]));
      f.step(q.base.data(), buf);
      d2 = 0.0;
      for (int i = 0; i < m; ++i) d2 = std::max(d2, circle_distance(buf[i], w.base(i)));
    } else {
      f.step(w.base.data(), buf);
      d1 = 0.0;
      for (int i = 0; i < m; ++i) d1 = std::max(d1, circle_distance(q.base(i), buf[i]));
      f.step_inverse(q.base.data(), buf);
      d2 = 0.0;
      for (int i = 0; i < m; ++i) d2 = std::max(d2, circle_distance(buf[i], w.base(i)));
    }
    best = std::min(best, std::max(dh, std::min(d1, d2)));
  }
  return best;
}

Eigen::VectorXd sheet_displacement(const SuspensionFlow& flow, const SuspensionPoint& q,
                                   const SuspensionPoint& p) {
  const BaseMap& f = flow.base_map();
  const int m = f.dim();
  int k = 0;
  double gap = q.height - p.height;
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
  Eigen::VectorXd out(m + 1);
  for (int i = 0; i < m; ++i) out(i) = wrap_signed(buf[i] - p.base(i));
  out(m) = gap - k;
  return out;
}

}  // namespace flowlab
