// The standard suspension of a base map under the constant roof 1:
// Omega = T^m x [0,1] / (y,1)~(f(y),0) with psi_t(y,s) = (y, s+t).
#pragma once

#include <Eigen/Core>

#include "flowlab/base_map.hpp"

namespace flowlab {

/// A point (x, s) of Omega. Heights are kept in [0, 1); height 1 is always
/// stored as (f(x), 0).
struct SuspensionPoint {
  TorusPoint base;
  double height = 0.0;
};

class SuspensionFlow {
 public:
  explicit SuspensionFlow(BaseMap base_map) : base_map_(std::move(base_map)) {}

  const BaseMap& base_map() const { return base_map_; }
  int base_dim() const { return base_map_.dim(); }
  /// Sup norm of the generating field; the fiber speed is 1.
  double field_norm() const { return 1.0; }

  /// psi_t(q); crossings of height 1 apply f (f^{-1} for t < 0).
  SuspensionPoint advance(const SuspensionPoint& q, double t) const;

  /// Canonical representative with height in [0, 1).
  SuspensionPoint canonical(const TorusPoint& base, double height) const;

 private:
  BaseMap base_map_;
};

inline SuspensionPoint suspension_advance(const SuspensionFlow& flow, const SuspensionPoint& q, double t) {
  return flow.advance(q, t);
}

/// min over lifts k in {-1,0,1} of max(|s_q - s_w - k|, base distance), where
/// the base distance of a lifted pair is the smaller of the comparisons made in
/// either point's sheet. Symmetric; identified representatives are at distance 0.
double dist_susp(const SuspensionFlow& flow, const SuspensionPoint& q, const SuspensionPoint& w);

/// Coordinates of q in the sheet of the reference point p: the representative
/// (f^k(x_q), s_q - k) with k in {-1,0,1} chosen to minimise the height gap,
/// returned as the (m+1)-vector (wrapped base displacement, height displacement).
Eigen::VectorXd sheet_displacement(const SuspensionFlow& flow, const SuspensionPoint& q,
                                   const SuspensionPoint& p);

}  // namespace flowlab
