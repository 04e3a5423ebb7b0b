#include <cmath>

#include "doctest.h"
#include "flowlab/base_map.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/sampling.hpp"
#include "flowlab/suspension.hpp"
#include "helpers.hpp"

using namespace flowlab;
using testing::point;

TEST_CASE("cat map fixes the origin") {
  const BaseMap f = BaseMap::cat_map();
  CHECK(f.apply(point({0.0, 0.0}), 5).isZero());
}

TEST_CASE("cat map sends (1/2, 1/2) to (1/2, 0)") {
  const TorusPoint y = BaseMap::cat_map().apply(point({0.5, 0.5}));
  CHECK(y(0) == doctest::Approx(0.5));
  CHECK(y(1) == doctest::Approx(0.0));
}

TEST_CASE("golden rotation twice from 0") {
  const TorusPoint y = BaseMap::golden_rotation().apply(point({0.0}), 2);
  CHECK(y(0) == doctest::Approx(0.2360679775).epsilon(1e-10));
}

TEST_CASE("automorphisms need an integer matrix with unit determinant") {
  IntMatrix m(2, 2);
  m << 2, 0, 0, 1;
  CHECK_THROWS_AS(BaseMap::toral_automorphism(m), Error);
  m << 2, 1, 1, 1;
  CHECK(integer_determinant(m) == 1);
  CHECK((integer_adjugate(m) * m).isIdentity());
}

TEST_CASE("entropy oracle of the cat map is ln of its golden eigenvalue") {
  const double lambda = (3.0 + std::sqrt(5.0)) / 2.0;
  CHECK(*BaseMap::cat_map().known_entropy() == doctest::Approx(std::log(lambda)).epsilon(1e-12));
  CHECK(*BaseMap::golden_rotation().known_entropy() == 0.0);
}

TEST_CASE("suspension advances heights and crosses the roof through f") {
  const SuspensionFlow psi(BaseMap::cat_map());
  const TorusPoint x = point({0.1, 0.7});
  const SuspensionPoint a = psi.advance({x, 0.3}, 0.4);
  CHECK(a.base.isApprox(x));
  CHECK(a.height == doctest::Approx(0.7));
  const SuspensionPoint b = psi.advance({x, 0.3}, 0.0);
  CHECK(b.height == 0.3);
  const SuspensionPoint c = psi.advance({x, 0.5}, 0.5);
  CHECK(c.height == doctest::Approx(0.0));
  CHECK(dist_base(c.base, psi.base_map().apply(x)) < 1e-12);
}

TEST_CASE("circle and suspension distances") {
  CHECK(dist_base(point({0.1}), point({0.9})) == doctest::Approx(0.2));
  const TorusPoint x = point({0.3, 0.6});
  CHECK(dist_base(x, x) == 0.0);
  const SuspensionFlow psi(BaseMap::cat_map());
  const SuspensionPoint q{x, 0.95};
  const SuspensionPoint w{psi.base_map().apply(x), 0.05};
  CHECK(dist_susp(psi, q, w) == doctest::Approx(0.1));
  // path-length oracle: the flow joins the two points in time 0.1
  CHECK(dist_susp(psi, psi.advance(q, 0.1), w) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("property: flow composition, map inversion, seam invariance") {
  CounterRng rng(11);
  const SuspensionFlow psi(BaseMap::cat_map());
  for (int k = 0; k < 500; ++k) {
    const SuspensionPoint q = testing::random_susp(rng, 2);
    const double s = 4.0 * rng.uniform() - 2.0;
    const double t = 4.0 * rng.uniform() - 2.0;
    const SuspensionPoint one = psi.advance(q, s + t);
    const SuspensionPoint two = psi.advance(psi.advance(q, s), t);
    CHECK(dist_susp(psi, one, two) < 1e-12 * (1.0 + std::abs(s) + std::abs(t)) * 64);

    const auto n = static_cast<long long>(rng.uniform() * 20) - 10;
    CHECK(dist_base(psi.base_map().apply(psi.base_map().apply(q.base, n), -n), q.base) < 1e-12 * 1e4);

    // (x, 1) and (f(x), 0) are the same point
    const SuspensionPoint top{q.base, 1.0 - 1e-15};
    const SuspensionPoint bottom{psi.base_map().apply(q.base), 0.0};
    CHECK(dist_susp(psi, top, bottom) < 1e-12);
  }
}

TEST_CASE("property: canonical heights stay in [0, 1)") {
  CounterRng rng(12);
  const SuspensionFlow psi(BaseMap::golden_rotation());
  for (int k = 0; k < 1000; ++k) {
    const SuspensionPoint q = psi.advance(testing::random_susp(rng, 1), 20.0 * rng.uniform() - 10.0);
    CHECK(q.height >= 0.0);
    CHECK(q.height < 1.0);
    CHECK(q.base(0) >= 0.0);
    CHECK(q.base(0) < 1.0);
  }
}

TEST_CASE("counter rng streams do not depend on draw order elsewhere") {
  const CounterRng root(5);
  CounterRng a = root.split(3);
  CounterRng b = root.split(3);
  CounterRng other = root.split(4);
  other.uniform();
  CHECK(a.next_u64() == b.next_u64());
  CHECK(root.split(3).next_u64() != root.split(4).next_u64());
  BirkhoffOptions opt;
  opt.count = 64;
  const auto one = birkhoff_samples(BaseMap::cat_map(), opt, root, 1);
  const auto many = birkhoff_samples(BaseMap::cat_map(), opt, root, 4);
  REQUIRE(one.size() == many.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == many[i]);
}
