#include "flowlab/flat_profile.hpp"

#include <algorithm>
#include <cmath>

#include "flowlab/errors.hpp"
#include "flowlab/jet.hpp"

namespace flowlab {

namespace {

constexpr int kMaxSeriesOrder = 4;

const std::array<Eigen::VectorXd, kMaxSeriesOrder + 1>& cached_polynomials() {
  static const std::array<Eigen::VectorXd, kMaxSeriesOrder + 1> polys = [] {
    std::array<Eigen::VectorXd, kMaxSeriesOrder + 1> p;
    for (int k = 0; k <= kMaxSeriesOrder; ++k) p[k] = mollifier_polynomial(k);
    return p;
  }();
  return polys;
}

double horner(const Eigen::VectorXd& coeffs, double u) {
  double acc = 0.0;
  for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) acc = acc * u + coeffs(i);
  return acc;
}

template <int N>
Jet<N> mollifier_jet(double u) {
  Jet<N> j;
  if (u <= 0.0) return j;
  const double inv = 1.0 / u;
  const double e = std::exp(-inv);
  if (e == 0.0) return j;
  const auto& polys = cached_polynomials();
  std::array<double, N + 1> d{};
  for (int k = 0; k <= N; ++k) d[k] = horner(polys[k], inv) * e;
  return Jet<N>::from_derivatives(d);
}

// Running maximum over (0, u] of max_{k<=4} |h^{(k)}|, tabulated on a grid of (0, 2].
class DerivativeEnvelope {
 public:
  DerivativeEnvelope() {
    table_.resize(kCells + 1);
    double running = 0.0;
    table_[0] = 0.0;
    for (int c = 1; c <= kCells; ++c) {
      // sample densely inside each cell so the running max is conservative
      const double lo = 2.0 * (c - 1) / kCells;
      const double hi = 2.0 * c / kCells;
      for (int s = 0; s <= 8; ++s) {
        const double u = lo + (hi - lo) * s / 8.0;
        for (int k = 0; k <= kMaxSeriesOrder; ++k) running = std::max(running, std::abs(mollifier_derivative(u, k)));
      }
      table_[c] = running * 1.05;
    }
  }

  double bound(double u) const {
    if (u <= 0.0) return 0.0;
    const int c = std::min(kCells, static_cast<int>(std::ceil(u / 2.0 * kCells)));
    return table_[c];
  }

 private:
  static constexpr int kCells = 2048;
  std::vector<double> table_;
};

const DerivativeEnvelope& envelope() {
  static const DerivativeEnvelope env;
  return env;
}

template <int N>
Jet<N> series_jet(const FlatProfile& profile, double t) {
  Jet<N> acc;
  if (t <= 0.0) return acc;
  // first index with alpha_i < t
  const double first = std::floor(1.0 / t - 1.0) + 1.0;
  if (first > 1e6) return acc;
  const int i_min = std::max(1, static_cast<int>(first));
  const double bound = envelope().bound(std::min(t, 2.0));
  double weight = std::ldexp(1.0, -i_min - 1);
  double beta_prev = profile.beta(i_min - 1);
  for (int i = i_min;; ++i, weight *= 0.5) {
    // past the stored range beta decays geometrically
    const double beta_next = static_cast<std::size_t>(i + 1) < profile.betas.size()
                                 ? profile.betas[static_cast<std::size_t>(i + 1)]
                                 : (static_cast<std::size_t>(i) < profile.betas.size() ? profile.beta(i)
                                                                                         : beta_prev * profile.tail_ratio);
    const double u = t - FlatProfile::alpha(i);
    if (u > 0.0) {
      if constexpr (N == 0) {
        acc.c[0] += weight * beta_prev * std::exp(-1.0 / u);
      } else {
        Jet<N> term = mollifier_jet<N>(u);
        term *= weight * beta_prev;
        acc += term;
      }
    }
    const double tail = weight * beta_next * bound;
    if (tail <= profile.truncation_tol * std::abs(acc.c[0])) break;
    if (acc.c[0] == 0.0 && i > i_min + 64) break;
    if (weight == 0.0) break;
    beta_prev = beta_next;
  }
  return acc;
}

// Smooth step on [0,1]: h(u) / (h(u) + h(1-u)).
template <int N>
Jet<N> smooth_step_jet(double u) {
  if (u <= 0.0) return Jet<N>();
  if (u >= 1.0) return Jet<N>::constant(1.0);
  const Jet<N> a = mollifier_jet<N>(u);
  const Jet<N> b = mollifier_jet<N>(1.0 - u).scaled(-1.0);
  return a / (a + b);
}

constexpr double kBlendStart = 0.5;

template <int N>
Jet<N> unfloored_eta_jet(const FlatProfile& profile, double t) {
  if (t <= 0.0) return Jet<N>();
  if (t >= 1.0) return Jet<N>::constant(1.0);
  const Jet<N> s = series_jet<N>(profile, t);
  if (t <= kBlendStart) return s;
  const double u = (t - kBlendStart) / (1.0 - kBlendStart);
  const Jet<N> sigma = smooth_step_jet<N>(u).scaled(1.0 / (1.0 - kBlendStart));
  return s + (Jet<N>::constant(1.0) - s) * sigma;
}

template <int N>
Jet<N> eta_jet(const FlatProfile& profile, double t) {
  if (profile.floor_depth > 0) {
    const double edge = FlatProfile::alpha(profile.floor_depth);
    if (t > 0.0 && t < edge) {
      const double c = profile.floor_coefficient > 0.0 ? profile.floor_coefficient
                                                       : unfloored_eta_jet<0>(profile, edge).c[0] / (edge * edge);
      Jet<N> j;
      j.c[0] = c * t * t;
      if constexpr (N >= 1) j.c[1] = 2.0 * c * t;
      if constexpr (N >= 2) j.c[2] = c;
      return j;
    }
  }
  return unfloored_eta_jet<N>(profile, t);
}

}  // namespace

FlatProfile FlatProfile::with_floor_depth(int depth) const {
  if (depth < 0) throw Error(ErrorCode::InvalidArgument, "floor depth must be nonnegative");
  FlatProfile p = *this;
  p.floor_depth = depth;
  p.floor_coefficient = 0.0;
  if (depth > 0) {
    const double edge = alpha(depth);
    p.floor_coefficient = unfloored_eta_jet<0>(p, edge).c[0] / (edge * edge);
  }
  return p;
}

double mollifier_h(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

Eigen::VectorXd mollifier_polynomial(int k) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "negative derivative order");
  Eigen::VectorXd p = Eigen::VectorXd::Ones(1);
  for (int step = 0; step < k; ++step) {
    // q(u) = u^2 (p(u) - p'(u))
    Eigen::VectorXd diff = p;
    for (Eigen::Index i = 1; i < p.size(); ++i) diff(i - 1) -= i * p(i);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(p.size() + 2);
    next.tail(p.size()) = diff;
    p = next;
  }
  return p;
}

double mollifier_derivative(double t, int k) {
  if (t <= 0.0) return 0.0;
  const double inv = 1.0 / t;
  const double e = std::exp(-inv);
  if (e == 0.0) return 0.0;
  const Eigen::VectorXd p = k <= kMaxSeriesOrder ? cached_polynomials()[k] : mollifier_polynomial(k);
  return horner(p, inv) * e;
}

double FlatProfile::beta(int i) const {
  if (i < -1) throw Error(ErrorCode::InvalidArgument, "beta index below -1");
  const std::size_t j = static_cast<std::size_t>(i + 1);
  if (j < betas.size()) return betas[j];
  return betas.back() * std::pow(tail_ratio, static_cast<double>(j - betas.size() + 1));
}

FlatProfile make_flat_profile(std::vector<double> betas, double truncation_tol) {
  if (betas.empty()) throw Error(ErrorCode::InvalidArgument, "empty beta sequence");
  if (betas.front() != 1.0) throw Error(ErrorCode::InvalidArgument, "beta_{-1} must equal 1");
  for (std::size_t j = 1; j < betas.size(); ++j) {
    if (!(betas[j] > 0.0) || !(betas[j] < betas[j - 1])) {
      throw Error(ErrorCode::InvalidArgument, "betas must be positive and strictly decreasing");
    }
  }
  if (!(truncation_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "truncation_tol must be positive");
  FlatProfile p;
  p.betas = std::move(betas);
  p.truncation_tol = truncation_tol;
  return p;
}

double default_shell_l(int i) { return 1.0 / (4.0 * i); }

FlatProfile build_flat_profile(const std::function<long long(int)>& recurrence_L,
                               const std::function<double(int)>& shell_l, int i0, int count,
                               double truncation_tol) {
  if (!recurrence_L || !shell_l) throw Error(ErrorCode::InvalidArgument, "missing L or l sequence");
  if (i0 < 0 || count < 1) throw Error(ErrorCode::InvalidArgument, "need i0 >= 0 and count >= 1");
  FlatProfile p;
  p.truncation_tol = truncation_tol;
  p.betas.push_back(1.0);
  for (int i = 1; i <= count; ++i) {
    const int idx = i0 + i;
    const long long L = recurrence_L(idx);
    const double l = shell_l(idx);
    if (L < 1) throw Error(ErrorCode::InvalidArgument, "L(1/i) must be a positive integer");
    if (!(l > 0.0 && l < 1.0)) throw Error(ErrorCode::InvalidArgument, "l_i must lie in (0,1)");
    const double delta = 1.0 / static_cast<double>(L);
    double beta = l / idx * delta;
    const double prev = p.betas.back();
    if (!(beta < prev)) {
      beta = prev * (1.0 - 1.0 / 1024.0);
      p.regularized.push_back(i - 1);
    }
    p.betas.push_back(beta);
  }
  return p;
}

double eta_series(const FlatProfile& profile, double t) { return series_jet<0>(profile, t).c[0]; }

double eta_eval(const FlatProfile& profile, double t) {
  if (!(t >= -1.0 && t <= 2.0)) throw Error(ErrorCode::InvalidArgument, "eta_eval needs t in [-1, 2]");
  return eta_jet<0>(profile, t).c[0];
}

double eta_derivative(const FlatProfile& profile, double t, int k) {
  if (k < 1 || k > kMaxSeriesOrder) {
    throw Error(ErrorCode::InvalidArgument, "series derivative supports orders 1..4; use eta_derivative_fd");
  }
  if (!(t >= -1.0 && t <= 2.0)) throw Error(ErrorCode::InvalidArgument, "eta_derivative needs t in [-1, 2]");
  return eta_jet<kMaxSeriesOrder>(profile, t).derivative(k);
}

double eta_derivative_fd(const FlatProfile& profile, double t, int k, double step) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "derivative order must be positive");
  double acc = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    const double x = std::clamp(t + (0.5 * k - j) * step, -1.0, 2.0);
    acc += (j % 2 == 0 ? 1.0 : -1.0) * binom * eta_eval(profile, x);
    binom = binom * (k - j) / (j + 1);
  }
  return acc / std::pow(step, k);
}

nlohmann::json to_json(const FlatProfile& profile) {
  nlohmann::json j;
  j["betas"] = profile.betas;
  std::vector<double> alphas;
  for (std::size_t i = 0; i < profile.betas.size(); ++i) alphas.push_back(FlatProfile::alpha(static_cast<int>(i)));
  j["alphas"] = alphas;
  j["truncation_tol"] = profile.truncation_tol;
  j["tail_ratio"] = profile.tail_ratio;
  j["regularized_indices"] = profile.regularized;
  j["floor_depth"] = profile.floor_depth;
  return j;
}

}  // namespace flowlab
