#include <cmath>

#include "doctest.h"
#include "flowlab/errors.hpp"
#include "flowlab/flat_profile.hpp"
#include "flowlab/recurrence.hpp"
#include "flowlab/speed_field.hpp"
#include "helpers.hpp"

using namespace flowlab;

namespace {

FlatProfile golden_profile() {
  const BaseMap f = BaseMap::golden_rotation();
  return build_flat_profile([&](int i) { return recurrence_constant(f, 1.0 / i).L; }, default_shell_l, 2, 12);
}

}  // namespace

TEST_CASE("mollifier values") {
  CHECK(mollifier_h(1.0) == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK(mollifier_h(0.0) == 0.0);
  CHECK(mollifier_h(-0.5) == 0.0);
}

TEST_CASE("mollifier derivative polynomials match finite differences") {
  for (int k = 1; k <= 3; ++k) {
    const double t = 0.4;
    const double h = 1e-5;
    const double fd = (mollifier_derivative(t + h, k - 1) - mollifier_derivative(t - h, k - 1)) / (2 * h);
    CHECK(mollifier_derivative(t, k) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("eta vanishes on [-1, 0] and equals 1 on [1, 2]") {
  const FlatProfile p = golden_profile();
  CHECK(eta_eval(p, -0.3) == 0.0);
  CHECK(eta_eval(p, 0.0) == 0.0);
  CHECK(eta_eval(p, 1.5) == 1.0);
  CHECK(eta_derivative(p, -0.5, 1) == 0.0);
  CHECK_THROWS_AS(eta_eval(p, 2.5), Error);
}

TEST_CASE("series obeys the shell bound below alpha_k") {
  const FlatProfile p = golden_profile();
  for (int k = 0; k <= 10; ++k) {
    const double bound = p.beta(k) * mollifier_h(1.0) / std::ldexp(1.0, k);
    for (int j = 1; j <= 50; ++j) CHECK(eta_series(p, FlatProfile::alpha(k) * j / 51.0) < bound);
  }
}

TEST_CASE("first derivative heads to zero and matches central differences") {
  const FlatProfile p = golden_profile();
  const double a = eta_derivative(p, 0.1, 1);
  const double b = eta_derivative(p, 0.05, 1);
  const double c = eta_derivative(p, 0.025, 1);
  CHECK(a > b);
  CHECK(b > c);
  CHECK(c >= 0.0);
  for (double t : {0.55, 0.7, 0.9}) {
    const double h = 1e-6;
    const double fd = (eta_eval(p, t + h) - eta_eval(p, t - h)) / (2 * h);
    CHECK(eta_derivative(p, t, 1) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("property: eta nondecreasing on a dense grid") {
  const FlatProfile p = golden_profile();
  double prev = eta_eval(p, -1.0);
  for (int i = 1; i <= 6000; ++i) {
    const double v = eta_eval(p, -1.0 + 3.0 * i / 6000.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("profile recipe") {
  const FlatProfile p = build_flat_profile([](int) { return 1LL; }, [](int) { return 0.5; }, 1, 1);
  CHECK(p.betas.size() == 2);
  CHECK(p.betas[0] == 1.0);
  CHECK(p.betas[1] == doctest::Approx(0.25));

  // L(1/i) = 7 gives delta = 1/7
  const FlatProfile q = build_flat_profile([](int) { return 7LL; }, [](int) { return 0.5; }, 1, 1);
  CHECK(q.betas[1] == doctest::Approx(0.5 / 2.0 / 7.0));

  const FlatProfile g = golden_profile();
  for (std::size_t i = 1; i < g.betas.size(); ++i) {
    CHECK(g.betas[i] > 0.0);
    CHECK(g.betas[i] < g.betas[i - 1]);
  }
}

TEST_CASE("explicit betas must decrease from 1") {
  CHECK_NOTHROW(make_flat_profile({1.0, 0.5, 0.1}));
  CHECK_THROWS_AS(make_flat_profile({1.0, 0.5, 0.6}), Error);
  CHECK_THROWS_AS(make_flat_profile({0.9, 0.5}), Error);
}

TEST_CASE("speed fields satisfy condition (H)") {
  const SuspensionFlow psi(BaseMap::cat_map());
  const SuspensionPoint p{testing::point({0.3, 0.3}), 0.5};
  const double r = 0.2;
  const SpeedField flat = SpeedField::flat(psi, golden_profile(), p, r);
  const SpeedField quad = SpeedField::quadratic(psi, p, r);
  CHECK(flat(p) == 0.0);
  CHECK(quad(p) == 0.0);

  // |xi| = 0.25 in the height direction: displacement r / 8
  const SuspensionPoint q{p.base, p.height + r / 8.0};
  CHECK(quad.chart(q).norm() == doctest::Approx(0.25));
  CHECK(quad(q) == doctest::Approx(0.0625));

  CounterRng rng(21);
  for (int k = 0; k < 2000; ++k) {
    const SuspensionPoint w = testing::random_susp(rng, 2);
    const double d = dist_susp(psi, w, p);
    for (const SpeedField* f : {&flat, &quad}) {
      const double v = (*f)(w);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (d >= r) CHECK(v == 1.0);
      if (d > 1e-9) CHECK(v > 0.0);
    }
  }
}

TEST_CASE("quadratic annulus stays within (1/4, 2)") {
  for (int i = 0; i <= 100; ++i) {
    const double rho = 0.5 + 0.5 * i / 100.0;
    const double v = quadratic_profile(rho);
    CHECK(v > 0.25 - 1e-15);
    CHECK(v < 2.0);
  }
  CHECK(quadratic_profile(0.25) == doctest::Approx(0.0625));
  CHECK(quadratic_profile(1.5) == 1.0);
}

TEST_CASE("property: flat field obeys the shell norm bound") {
  const SuspensionFlow psi(BaseMap::cat_map());
  const SuspensionPoint p{testing::point({0.3, 0.3}), 0.5};
  const FlatProfile prof = golden_profile();
  const SpeedField flat = SpeedField::flat(psi, prof, p, 0.2);
  CounterRng rng(22);
  for (int k = 0; k < 2000; ++k) {
    SuspensionPoint q = p;
    const double scale = std::pow(10.0, -3.0 * rng.uniform()) * 0.1;
    q.base(0) += scale * (2 * rng.uniform() - 1);
    q.base(1) += scale * (2 * rng.uniform() - 1);
    q.height += scale * (2 * rng.uniform() - 1);
    const double norm = flat.chart_max_norm(q);
    // chart norm below alpha_i (the eta argument) bounds the value by beta_{i-1}
    for (int i = 0; i < 10; ++i) {
      if (norm < FlatProfile::alpha(i)) CHECK(flat(q) <= prof.beta(i - 1));
    }
  }
}
