// The flat-at-zero profile eta built from a decreasing sequence of shell
// bounds beta_i and shell radii alpha_i = 1/(i+1):
//
//   eta(t) = sum_{i>=1} 2^{-i-1} beta_{i-1} h(t - alpha_i),   h(t) = exp(-1/t) (t > 0)
//
// smoothly extended to 1 on [1, 2]. All derivatives of eta vanish at 0+.
#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"

namespace flowlab {

/// h(t) = e^{-1/t} for t > 0, 0 otherwise.
double mollifier_h(double t);

/// Coefficients of the polynomial P_k with h^{(k)}(t) = P_k(1/t) e^{-1/t};
/// P_0 = 1, P_{k+1}(u) = u^2 (P_k(u) - P_k'(u)).
Eigen::VectorXd mollifier_polynomial(int k);

/// h^{(k)}(t) by the exact recurrence; 0 for t <= 0.
double mollifier_derivative(double t, int k);

struct FlatProfile {
  /// betas[j] = beta_{j-1}; betas[0] = 1.
  std::vector<double> betas;
  double truncation_tol = 1e-14;
  /// beta_{j} for j past the stored range: last stored value times tail_ratio^(excess).
  double tail_ratio = 0.5;
  /// Recipe indices whose raw value was replaced by a running minimum.
  std::vector<int> regularized;
  /// Depth I > 0 replaces eta on [0, alpha_I) by eta(alpha_I) (t / alpha_I)^2.
  /// Such a profile vanishes quadratically, not flatly, at 0.
  int floor_depth = 0;

  /// beta_i for i >= -1.
  double beta(int i) const;
  static double alpha(int i) { return 1.0 / (i + 1.0); }

  /// eta(alpha_I) / alpha_I^2 for the floor; filled in by with_floor_depth.
  double floor_coefficient = 0.0;

  FlatProfile with_floor_depth(int depth) const;
};

/// A profile from an explicit strictly decreasing sequence beta_{-1}=1 > beta_0 > ... > 0.
FlatProfile make_flat_profile(std::vector<double> betas, double truncation_tol = 1e-14);

/// Shell recipe: beta_{-1} = 1, beta_{i-1} = l_{i0+i} / (i0+i) * delta(i0+i) for
/// i = 1..count, delta(i) = 1 / L(1/i). Non-monotone raw values are replaced by
/// running minima (scaled just below the previous value) and recorded.
FlatProfile build_flat_profile(const std::function<long long(int)>& recurrence_L,
                               const std::function<double(int)>& shell_l, int i0, int count = 64,
                               double truncation_tol = 1e-14);

/// Default l_i = 1 / (4 i).
double default_shell_l(int i);

/// The raw series, defined for all real t (0 for t <= 0).
double eta_series(const FlatProfile& profile, double t);

/// The extended profile on [-1, 2]; throws InvalidArgument outside.
double eta_eval(const FlatProfile& profile, double t);

/// k-th derivative (1 <= k <= 4) of the extended profile by term-wise
/// differentiation of the series; t in [-1, 2].
double eta_derivative(const FlatProfile& profile, double t, int k);

/// Central finite-difference derivative of eta_eval of any order; the route for k > 4.
double eta_derivative_fd(const FlatProfile& profile, double t, int k, double step);

nlohmann::json to_json(const FlatProfile& profile);

}  // namespace flowlab
