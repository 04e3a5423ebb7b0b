// Return times of the slowed flow and the measures it carries: gamma(x), its
// mu-average, the transfer of observables onto phi-fibers, the density 1/alpha
// against the suspension measure, and the equivalence witness between two
// time changes of the same flow.
#pragma once

#include <functional>
#include <vector>

#include "flowlab/sampling.hpp"
#include "flowlab/speed_field.hpp"
#include "flowlab/time_change.hpp"

namespace flowlab {

/// gamma(x) = int_0^1 du / alpha(x, u): the time the alpha X flow needs to go
/// from (x, 0) to (f(x), 0).
struct ReturnTimeReport {
  double value = 0.0;
  bool diverged = false;
  double quadrature_cap = 1e12;
};

/// Default distance below which an orbit or fiber counts as hitting p.
inline constexpr double kSingularHitTol = 1e-9;

/// True when the fiber {(x, u) : 0 <= u <= 1} passes within tol of p.
bool fiber_hits_singularity(const SpeedField& field, const TorusPoint& x, double tol = kSingularHitTol);

ReturnTimeReport gamma(const SpeedField& field, const TorusPoint& x, double quadrature_cap = 1e12);

struct ExpectedGammaReport {
  double value = 0.0;  // meaningless when diverged
  bool diverged = false;
  std::size_t diverged_samples = 0;
  std::vector<double> per_sample;  // +inf for diverged samples
  std::vector<double> running_mean;
};

/// Monte Carlo mean of gamma over samples of mu. Diverged when any sample
/// diverges or the running mean passes the cap. Throws EmptySamples.
ExpectedGammaReport expected_gamma(const SpeedField& field, const std::vector<TorusPoint>& samples,
                                   double quadrature_cap = 1e12, int workers = 1);

/// E_mu( int_0^{gamma(x)} xi(phi_t(x, 0)) dt ) / E_mu(gamma), the integrals taken
/// along phi-fibers by composite Simpson in phi-time. Throws
/// DivergedDenominator when E_mu(gamma) diverges.
double push_measure_gamma(const SpeedField& field, const std::vector<TorusPoint>& samples,
                          const std::function<double(const SuspensionPoint&)>& xi, int workers = 1,
                          double quadrature_cap = 1e12);

struct DensityReport {
  double value = 0.0;
  double std_error = 0.0;
  bool diverged = false;
  std::size_t count = 0;
};

/// Monte Carlo estimate of int_B (1 / alpha_hat) d mu_bar from mu_bar samples.
/// With the default region (all of Omega) this estimates K = mu_hat(Omega).
DensityReport pushforward_density(const SpeedField& field_hat, const std::vector<SuspensionPoint>& samples,
                                  const std::function<bool(const SuspensionPoint&)>& region = {},
                                  double quadrature_cap = 1e12);

/// int (1/alpha - 1) d mu_bar over dyadic chart shells 2^{-k-1} <= |xi| < 2^{-k}
/// (Euclidean chart norm), estimated by stratified sampling in each shell;
/// assumes mu_bar is Lebesgue. A non-summable shell sequence shows up as
/// contributions that stop shrinking.
struct TailProfile {
  std::vector<double> inner_radius;   // chart-norm lower edge of each shell
  std::vector<double> contribution;   // shell integral
  std::vector<double> cumulative;     // sum of contributions down to this shell
  /// Mean ratio of consecutive contributions over the innermost half of the
  /// shells; >= 0.75 is reported as divergence.
  double tail_ratio = 0.0;
  bool diverged = false;
};

TailProfile density_tail_profile(const SpeedField& field, int shells, std::size_t samples_per_shell,
                                 const CounterRng& rng);

struct EquivalenceRow {
  double s = 0.0;         // time of flow b
  double t = 0.0;         // matched time of flow a
  double psi_time = 0.0;  // common psi-time of the two points
  double distance = 0.0;  // dist_susp(phi^a_t q, phi^b_s q), recomputed independently
};

/// Witness that the identity sends phi^b-orbits to phi^a-orbits preserving
/// time orientation: for s_j = horizon * j / rows, t_j = theta_a(tau_b(s_j)).
/// Throws WitnessNotFound when the distances exceed tol or t_j is not
/// strictly increasing.
std::vector<EquivalenceRow> orbit_equivalence_check(const TimeChangedFlow& flow_a, const TimeChangedFlow& flow_b,
                                                    const SuspensionPoint& q, double horizon, int rows = 20,
                                                    double tol = 1e-6);

}  // namespace flowlab
