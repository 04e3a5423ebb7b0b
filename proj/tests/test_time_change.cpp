#include <cmath>

#include "doctest.h"
#include "flowlab/errors.hpp"
#include "flowlab/quadrature.hpp"
#include "flowlab/recurrence.hpp"
#include "flowlab/return_time.hpp"
#include "flowlab/time_change.hpp"
#include "helpers.hpp"

using namespace flowlab;
using testing::point;

namespace {

const SuspensionFlow& cat_flow() {
  static const SuspensionFlow psi(BaseMap::cat_map());
  return psi;
}

SuspensionPoint stopped() { return {point({0.3, 0.3}), 0.5}; }

FlatProfile golden_profile() {
  const BaseMap f = BaseMap::golden_rotation();
  return build_flat_profile([&](int i) { return recurrence_constant(f, 1.0 / i).L; }, default_shell_l, 2, 12);
}

}  // namespace

TEST_CASE("adaptive simpson on a smooth integrand") {
  QuadratureOptions opt;
  const QuadratureResult r = integrate_nonnegative([](double x) { return std::exp(x); }, 0.0, 1.0, opt);
  CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK_FALSE(r.capped);
  opt.cap = 10.0;
  CHECK(integrate_nonnegative([](double x) { return 1.0 / (x * x); }, 0.0, 1.0, opt).capped);
}

TEST_CASE("constant clocks") {
  const SuspensionPoint q{point({0.2, 0.9}), 0.4};
  CHECK(theta(AdditiveClock::constant(cat_flow(), 1.0), q, 3.5) == doctest::Approx(3.5));
  CHECK(theta(AdditiveClock::constant(cat_flow(), 2.0), q, 3.5) == doctest::Approx(7.0));
  const TimeChangedFlow two(AdditiveClock::constant(cat_flow(), 2.0));
  CHECK(tau(two, q, 3.0) == doctest::Approx(1.5));
  CHECK(tau(two, q, 0.0) == 0.0);
  CHECK(dist_susp(cat_flow(), phi_advance(two, q, 1.0), cat_flow().advance(q, 0.5)) < 1e-12);
  const TimeChangedFlow one(AdditiveClock::constant(cat_flow(), 1.0));
  CHECK(dist_susp(cat_flow(), phi_advance(one, q, 2.7), cat_flow().advance(q, 2.7)) < 1e-12);
}

TEST_CASE("the stopped point is fixed by the flat time change") {
  const SpeedField flat = SpeedField::flat(cat_flow(), golden_profile(), stopped(), 0.2);
  const TimeChangedFlow phi(AdditiveClock::from_speed(flat));
  for (double t : {0.5, 3.0, 10.0}) CHECK(dist_susp(cat_flow(), phi_advance(phi, stopped(), t), stopped()) < 1e-12);
}

TEST_CASE("property: cocycle, round trip, monotone tau, flow property") {
  const SpeedField quad = SpeedField::quadratic(cat_flow(), stopped(), 0.2);
  const AdditiveClock clock = AdditiveClock::from_speed(quad);
  const TimeChangedFlow phi(clock);
  CounterRng rng(31);
  for (int k = 0; k < 60; ++k) {
    const SuspensionPoint q = testing::random_susp(rng, 2);
    const double s = 10.0 * rng.uniform();
    const double t = 10.0 * rng.uniform();
    const double st = theta(clock, q, s + t);
    const double residual = std::abs(st - theta(clock, q, s) - theta(clock, cat_flow().advance(q, s), t));
    CHECK(residual < 1e-9 * std::max(1.0, st));
    CHECK(std::abs(tau(phi, q, st) - (s + t)) < 1e-8);

    double prev = 0.0;
    for (int j = 1; j <= 10; ++j) {
      const double v = tau(phi, q, 0.5 * j);
      CHECK(v >= prev);
      prev = v;
    }
    const SuspensionPoint a = phi_advance(phi, q, s + t);
    const SuspensionPoint b = phi_advance(phi, phi_advance(phi, q, s), t);
    CHECK(dist_susp(cat_flow(), a, b) < 1e-6 * (1.0 + s + t));
  }
}

TEST_CASE("gamma for constant and unit speed") {
  const TorusPoint x = point({0.7, 0.1});
  CHECK(gamma(SpeedField::constant(cat_flow(), 1.0), x).value == doctest::Approx(1.0));
  CHECK(gamma(SpeedField::constant(cat_flow(), 0.25), x).value == doctest::Approx(4.0));
  std::vector<TorusPoint> xs(50, x);
  CHECK(expected_gamma(SpeedField::constant(cat_flow(), 1.0), xs).value == 1.0);
  CHECK_THROWS_AS(expected_gamma(SpeedField::constant(cat_flow(), 1.0), {}), Error);
}

TEST_CASE("gamma equals the clock over one roof") {
  const SpeedField quad = SpeedField::quadratic(cat_flow(), stopped(), 0.2);
  const AdditiveClock clock = AdditiveClock::from_speed(quad);
  CounterRng rng(32);
  for (int k = 0; k < 30; ++k) {
    const TorusPoint x = testing::random_point(rng, 2);
    const double g = gamma(quad, x).value;
    CHECK(theta(clock, {x, 0.0}, 1.0) == doctest::Approx(g).epsilon(1e-8));
  }
}

TEST_CASE("flat gamma blows up near the stopped fiber") {
  // Orbits through B(p, ...) with the fiber passing right by p crawl.
  const SpeedField flat = SpeedField::flat(cat_flow(), golden_profile(), stopped(), 0.2);
  const TorusPoint near = point({0.3 + 1e-4, 0.3});
  const TorusPoint far = point({0.8, 0.8});
  CHECK(gamma(flat, far).value == doctest::Approx(1.0));
  const ReturnTimeReport r = gamma(flat, near);
  CHECK((r.diverged || r.value > 1e3));
}

TEST_CASE("push measure and density") {
  const SpeedField unit = SpeedField::constant(cat_flow(), 1.0);
  CounterRng rng(33);
  std::vector<TorusPoint> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(testing::random_point(rng, 2));
  CHECK(push_measure_gamma(unit, xs, [](const SuspensionPoint&) { return 1.0; }) == doctest::Approx(1.0));
  // int_0^1 s^2 ds = 1/3
  CHECK(push_measure_gamma(unit, xs, [](const SuspensionPoint& q) { return q.height * q.height; }) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  std::vector<SuspensionPoint> qs;
  for (int i = 0; i < 200; ++i) qs.push_back(testing::random_susp(rng, 2));
  CHECK(pushforward_density(SpeedField::constant(cat_flow(), 0.5), qs).value == doctest::Approx(2.0));
}

TEST_CASE("quadratic field: finite K in dimension 3, divergent tail in dimension 2") {
  const TailProfile three =
      density_tail_profile(SpeedField::quadratic(cat_flow(), stopped(), 0.2), 10, 1000, CounterRng(34));
  CHECK_FALSE(three.diverged);
  const SuspensionFlow circle(BaseMap::golden_rotation());
  const TailProfile two = density_tail_profile(
      SpeedField::quadratic(circle, {point({0.5}), 0.5}, 0.2), 10, 1000, CounterRng(35));
  CHECK(two.diverged);
}

TEST_CASE("orbit equivalence witnesses") {
  const SuspensionPoint q{point({0.71, 0.13}), 0.2};
  const TimeChangedFlow one(AdditiveClock::constant(cat_flow(), 1.0));
  const TimeChangedFlow two(AdditiveClock::constant(cat_flow(), 2.0));
  for (const auto& row : orbit_equivalence_check(one, one, q, 5.0, 10)) CHECK(row.t == doctest::Approx(row.s));
  for (const auto& row : orbit_equivalence_check(one, two, q, 5.0, 10)) CHECK(row.t == doctest::Approx(row.s / 2));

  const TimeChangedFlow flat(AdditiveClock::from_speed(SpeedField::flat(cat_flow(), golden_profile(), stopped(), 0.2)));
  const TimeChangedFlow quad(AdditiveClock::from_speed(SpeedField::quadratic(cat_flow(), stopped(), 0.2)));
  const auto rows = orbit_equivalence_check(flat, quad, q, 20.0, 20);
  for (std::size_t j = 1; j < rows.size(); ++j) CHECK(rows[j].t > rows[j - 1].t);
}
