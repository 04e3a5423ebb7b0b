// Adaptive Simpson quadrature with a divergence cap.
#pragma once

#include <functional>

namespace flowlab {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  /// Panels are also accepted once the local error is below rel_tol * |panel value|;
  /// needed for integrands spanning many orders of magnitude near a singularity.
  double rel_tol = 1e-12;
  /// Initial panels are no wider than this.
  double max_panel = 0.05;
  /// The integral is abandoned (capped = true) once it exceeds this value.
  double cap = 1e12;
  int max_depth = 60;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool capped = false;
  long evaluations = 0;
};

/// Integral of a nonnegative integrand over [a, b] (a <= b).
QuadratureResult integrate_nonnegative(const std::function<double(double)>& f, double a, double b,
                                       const QuadratureOptions& options);

}  // namespace flowlab
