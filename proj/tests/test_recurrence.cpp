#include "doctest.h"
#include "flowlab/errors.hpp"
#include "flowlab/recurrence.hpp"
#include "helpers.hpp"

using namespace flowlab;
using testing::point;

TEST_CASE("golden rotation at eps 0.1 agrees with the gap oracle") {
  const RecurrenceReport r = recurrence_constant(BaseMap::golden_rotation(), 0.1);
  REQUIRE(r.gap_oracle_L);
  CHECK(*r.gap_oracle_L == 7);
  CHECK(r.L == 7);
  CHECK(r.is_certified);
}

TEST_CASE("gap oracle by brute force") {
  // max gap of {k theta mod 1 : k <= L} first drops below 0.2 at L = 7
  CHECK(rotation_gap_L(0.6180339887498949, 0.1) == 7);
}

TEST_CASE("balls of radius 1/2 cover the torus at once") {
  CHECK(recurrence_constant(BaseMap::golden_rotation(), 0.5).L == 0);
  CHECK(recurrence_constant(BaseMap::cat_map(), 0.5).L == 0);
}

TEST_CASE("the cat map's fixed point never recurs") {
  CHECK_THROWS_AS(recurrence_constant(BaseMap::cat_map(), 0.05), Error);
}

TEST_CASE("ball measure bound for the golden rotation") {
  const BaseMap f = BaseMap::golden_rotation();
  const RecurrenceReport r = recurrence_constant(f, 0.1);
  const BallMeasureCheck c = ball_measure_bound_check(f, 0.1, r, {point({0.2}), point({0.77})}, point({0.0}));
  CHECK(c.pass);
  CHECK(c.bound == doctest::Approx(1.0 / 7.0));
  for (double freq : c.frequency) CHECK(freq == doctest::Approx(0.2).epsilon(0.01));
}

TEST_CASE("uncertified reports cannot certify ball measures") {
  const BaseMap f = BaseMap::cat_map();
  const RecurrenceReport r = empirical_recurrence(f, 0.2, {point({0.1234, 0.5678})});
  CHECK_FALSE(r.is_certified);
  CHECK_THROWS_AS(ball_measure_bound_check(f, 0.2, r, {point({0.5, 0.5})}, point({0.1, 0.2})), Error);
}

TEST_CASE("property: L is monotone and translation invariant") {
  const BaseMap f = BaseMap::golden_rotation();
  long long prev = 0;
  for (double eps : {0.3, 0.2, 0.15, 0.1, 0.05, 0.02}) {
    const RecurrenceReport r = recurrence_constant(f, eps);
    CHECK(r.L >= prev);
    prev = r.L;
    RecurrenceOptions shifted;
    shifted.grid_offset = 0.37;
    CHECK(recurrence_constant(f, eps, shifted).L == r.L);
    CHECK(r.L >= *r.gap_oracle_L);
  }
}
