// Truncated Taylor series ("jets") for forward-mode derivatives up to order N.
#pragma once

#include <array>
#include <cmath>

namespace flowlab {

/// c[j] = f^{(j)}(t0) / j!
template <int N>
struct Jet {
  std::array<double, N + 1> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }

  /// From derivative values d[j] = f^{(j)}(t0).
  static Jet from_derivatives(const std::array<double, N + 1>& d) {
    Jet j;
    double fact = 1.0;
    for (int k = 0; k <= N; ++k) {
      if (k > 0) fact *= k;
      j.c[k] = d[k] / fact;
    }
    return j;
  }

  double derivative(int k) const {
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return c[k] * fact;
  }

  /// Jet of t -> f(a t + b) given this jet of f at a t0 + b.
  Jet scaled(double a) const {
    Jet j;
    double p = 1.0;
    for (int k = 0; k <= N; ++k) {
      j.c[k] = c[k] * p;
      p *= a;
    }
    return j;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k <= N; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

template <int N>
Jet<N> operator+(Jet<N> a, const Jet<N>& b) {
  return a += b;
}

template <int N>
Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  for (int k = 0; k <= N; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

template <int N>
Jet<N> operator*(double s, Jet<N> a) {
  return a *= s;
}

template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  for (int k = 0; k <= N; ++k) {
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) acc += a.c[i] * b.c[k - i];
    r.c[k] = acc;
  }
  return r;
}

template <int N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  for (int k = 0; k <= N; ++k) {
    double acc = a.c[k];
    for (int i = 1; i <= k; ++i) acc -= b.c[i] * r.c[k - i];
    r.c[k] = acc / b.c[0];
  }
  return r;
}

}  // namespace flowlab
