// Discrete base systems f: T^m -> T^m.
#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "flowlab/torus.hpp"

namespace flowlab {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kMaxTorusDim = 16;

enum class BaseMapKind { ToralAutomorphism, Rotation };

/// A toral automorphism x -> A x mod 1 (A integer, |det A| = 1) or a rotation
/// x -> x + angle mod 1. Immutable after construction.
class BaseMap {
 public:
  static BaseMap toral_automorphism(const IntMatrix& matrix);
  static BaseMap rotation(const Eigen::VectorXd& angles);
  /// The identity map on T^m, stored as the rotation by 0.
  static BaseMap identity(int dim);
  /// Arnold's cat map [[2,1],[1,1]].
  static BaseMap cat_map();
  /// Rotation of the circle by the fractional part of the golden ratio.
  static BaseMap golden_rotation();

  BaseMapKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const IntMatrix& matrix() const { return matrix_; }
  /// Exact inverse, adjugate / determinant.
  const IntMatrix& inverse_matrix() const { return inverse_; }
  const Eigen::VectorXd& angles() const { return angles_; }
  bool is_isometry() const { return kind_ == BaseMapKind::Rotation; }

  /// Sum of ln|lambda| over eigenvalues outside the unit circle for
  /// automorphisms (entropy w.r.t. Lebesgue measure), 0 for rotations.
  std::optional<double> known_entropy() const { return known_entropy_; }

  /// f^n(x) for any signed n.
  TorusPoint apply(const TorusPoint& x, long long n = 1) const;

  /// One forward step written into out; out may alias x.
  void step(const double* x, double* out) const;
  void step_inverse(const double* x, double* out) const;

  std::string describe() const;

 private:
  BaseMap() = default;

  BaseMapKind kind_ = BaseMapKind::Rotation;
  int dim_ = 0;
  IntMatrix matrix_;
  IntMatrix inverse_;
  Eigen::VectorXd angles_;
  std::optional<double> known_entropy_;
};

/// Integer determinant by fraction-free elimination (Bareiss).
long long integer_determinant(const IntMatrix& m);

/// Adjugate of an integer matrix; adj(A) A = det(A) I.
IntMatrix integer_adjugate(const IntMatrix& m);

}  // namespace flowlab
