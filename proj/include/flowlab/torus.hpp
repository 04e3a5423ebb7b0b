// Points on the flat m-torus R^m / Z^m and the max-of-circle-distances metric.
#pragma once

#include <Eigen/Core>
#include <cmath>

namespace flowlab {

template <typename Scalar>
using TorusPointT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using TorusPoint = TorusPointT<double>;

/// Representative of v in [0, 1).
template <typename Scalar>
inline Scalar wrap_unit(Scalar v) {
  Scalar r = v - std::floor(v);
  // floor can round v - floor(v) up to exactly 1 for tiny negative v
  if (r >= Scalar(1)) r = Scalar(0);
  return r;
}

/// Representative of v in [-1/2, 1/2).
template <typename Scalar>
inline Scalar wrap_signed(Scalar v) {
  Scalar r = wrap_unit(v + Scalar(0.5)) - Scalar(0.5);
  return r;
}

template <typename Scalar>
inline Scalar circle_distance(Scalar a, Scalar b) {
  Scalar d = std::abs(wrap_signed(a - b));
  return d;
}

/// Reduces every coordinate of x mod 1.
template <typename Derived>
TorusPointT<typename Derived::Scalar> wrap_point(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return wrap_unit(v); });
}

/// Componentwise signed displacement x - y, each coordinate in [-1/2, 1/2).
template <typename DerivedA, typename DerivedB>
TorusPointT<typename DerivedA::Scalar> torus_displacement(const Eigen::MatrixBase<DerivedA>& x,
                                                          const Eigen::MatrixBase<DerivedB>& y) {
  using Scalar = typename DerivedA::Scalar;
  return (x - y).unaryExpr([](Scalar v) { return wrap_signed(v); });
}

/// max_i min(|x_i - y_i|, 1 - |x_i - y_i|)
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dist_base(const Eigen::MatrixBase<DerivedA>& x,
                                    const Eigen::MatrixBase<DerivedB>& y) {
  using Scalar = typename DerivedA::Scalar;
  Scalar d = Scalar(0);
  for (Eigen::Index i = 0; i < x.size(); ++i) d = std::max(d, circle_distance(x(i), y(i)));
  return d;
}

}  // namespace flowlab
