#include <cmath>

#include "doctest.h"
#include "flowlab/entropy.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/sampling.hpp"
#include "helpers.hpp"

using namespace flowlab;
using testing::point;

namespace {

std::vector<TorusPoint> cloud(const BaseMap& f, std::size_t n, std::uint64_t seed = 41) {
  BirkhoffOptions opt;
  opt.count = n;
  return birkhoff_samples(f, opt, CounterRng(seed));
}

EntropyGridSpec grid(int n_max, std::vector<double> eps) {
  EntropyGridSpec s;
  for (int n = 1; n <= n_max; ++n) s.n_values.push_back(n);
  s.eps_values = std::move(eps);
  return s;
}

}  // namespace

TEST_CASE("bowen distance") {
  const TorusPoint x = point({0.2, 0.3});
  CHECK(bowen_distance(BaseMap::cat_map(), x, x, 10) == 0.0);
  const TorusPoint y = point({0.25, 0.9});
  CHECK(bowen_distance(BaseMap::golden_rotation(), point({0.1}), point({0.9}), 7) == doctest::Approx(0.2));
  (void)y;
  // a small displacement along the unstable eigenvector grows by lambda per step
  const double lambda = (3.0 + std::sqrt(5.0)) / 2.0;
  Eigen::Vector2d v(1.0, (std::sqrt(5.0) - 1.0) / 2.0);
  v *= 1e-6 / v.cwiseAbs().maxCoeff();
  const TorusPoint z = wrap_point(TorusPoint(x + v));
  for (int n = 2; n <= 6; ++n) {
    CHECK(bowen_distance(BaseMap::cat_map(), x, z, n) == doctest::Approx(1e-6 * std::pow(lambda, n - 1)).epsilon(1e-6));
  }
}

TEST_CASE("box factor is the smallest integer above 1/eps") {
  CHECK(box_factor(0.5) == 3);
  CHECK(box_factor(0.3) == 4);
  CHECK(box_factor(0.1) == 11);
}

TEST_CASE("trivial counts") {
  const auto xs = cloud(BaseMap::identity(2), 500);
  CHECK(katok_count(BaseMap::identity(2), xs, 0.1, 3, 0.5) == 1);
  CHECK_THROWS_AS(katok_count(BaseMap::identity(2), {}, 0.1, 3, 0.5), Error);
}

TEST_CASE("rotation counts do not depend on n") {
  const BaseMap f = BaseMap::golden_rotation();
  const auto xs = cloud(f, 2000);
  const long long r1 = katok_count(f, xs, 0.1, 1, 0.05);
  for (int n : {2, 5, 10}) CHECK(katok_count(f, xs, 0.1, n, 0.05) == r1);
}

TEST_CASE("property: separated <= greedy <= separated at eps / 2") {
  const BaseMap f = BaseMap::cat_map();
  const auto xs = cloud(f, 3000);
  for (int n : {1, 3, 5}) {
    for (double eps : {0.2, 0.1}) {
      const long long sep = katok_count(f, xs, 0.1, n, eps, CountMethod::MaxSeparated);
      const long long greedy = katok_count(f, xs, 0.1, n, eps, CountMethod::GreedyCover);
      const long long sep_half = katok_count(f, xs, 0.1, n, eps / 2, CountMethod::MaxSeparated);
      CHECK(sep <= greedy);
      CHECK(greedy <= sep_half);
    }
  }
}

TEST_CASE("box-count sandwich, and the identity's k(eps) law") {
  const BaseMap f = BaseMap::cat_map();
  const auto xs = cloud(f, 4000);
  const TrajectoryCloud traj = map_trajectories(f, xs, 6);
  const auto qs = suspension_samples(SuspensionFlow(f), xs, CounterRng(42));
  std::vector<double> heights;
  for (const auto& q : qs) heights.push_back(q.height);
  for (int n : {1, 3, 6}) {
    for (double eps : {0.2, 0.1}) {
      const long long r = katok_count(traj, 0.1, n, eps, CountMethod::GreedyCover);
      const long long box = suspension_box_count(traj, heights, 0.1, n, eps);
      CHECK(r <= box);
      CHECK(box <= box_factor(eps) * r);
    }
  }
  // eps 0.3: heights fill all floor(1/0.3) + 1 = 4 bands under every identity ball
  const BaseMap id = BaseMap::identity(2);
  const TrajectoryCloud still = map_trajectories(id, cloud(id, 4000), 2);
  CHECK(box_factor(0.3) == 4);
  CHECK(suspension_box_count(still, heights, 0.1, 2, 0.3) == 4 * katok_count(still, 0.1, 2, 0.3, CountMethod::GreedyCover));
}

TEST_CASE("entropy oracles at test scale") {
  const EntropyGridSpec spec = grid(10, {0.2, 0.1});
  const double h = *BaseMap::cat_map().known_entropy();
  const EntropyEstimate cat = entropy_estimate_map(BaseMap::cat_map(), cloud(BaseMap::cat_map(), 20000), spec);
  CHECK(cat.extrapolated == doctest::Approx(h).epsilon(0.15));
  CHECK(entropy_estimate_map(BaseMap::golden_rotation(), cloud(BaseMap::golden_rotation(), 5000), spec).extrapolated < 0.02);
  CHECK(entropy_estimate_map(BaseMap::identity(2), cloud(BaseMap::identity(2), 5000), spec).extrapolated < 0.02);
}

TEST_CASE("property: regularised counts are monotone in n and in eps") {
  const BaseMap f = BaseMap::cat_map();
  const EntropyEstimate est = entropy_estimate_map(f, cloud(f, 5000), grid(8, {0.2, 0.1, 0.05}));
  const auto& c = est.grid.counts;
  for (std::size_t e = 0; e < c.size(); ++e) {
    for (std::size_t j = 0; j < c[e].size(); ++j) {
      CHECK(c[e][j] >= 1);
      if (j > 0) CHECK(c[e][j] >= c[e][j - 1]);
      if (e > 0) CHECK(c[e][j] >= c[e - 1][j]);
    }
  }
  CHECK(est.grid.worst_violation < 0.05);
}

TEST_CASE("grid validation and saturation") {
  EntropyGridSpec bad = grid(4, {0.1, 0.2});
  CHECK_THROWS_AS(validate(bad), Error);
  // a tiny cloud saturates every cell
  const BaseMap f = BaseMap::cat_map();
  CHECK_THROWS_AS(entropy_estimate_map(f, cloud(f, 50), grid(6, {0.05})), Error);
}

TEST_CASE("flow estimates: suspension matches the map, a = 2 halves it") {
  const BaseMap f = BaseMap::cat_map();
  const SuspensionFlow psi(f);
  const auto xs = cloud(f, 10000);
  const auto qs = suspension_samples(psi, xs, CounterRng(43));
  EntropyGridSpec spec = grid(6, {0.2, 0.1});
  const EntropyEstimate map_est = entropy_estimate_map(f, xs, spec);
  const EntropyEstimate flow_est = entropy_estimate_flow(psi, qs, spec);
  CHECK(flow_est.extrapolated == doctest::Approx(map_est.extrapolated).epsilon(0.15));

  // t = 0: no dynamics, the count is a spatial covering number
  EntropyGridSpec zero = spec;
  zero.n_values = {0, 1};
  const EntropyGrid g0 = katok_grid(flow_trajectories(psi, qs, 0.05, 1), zero, {1, 1});
  CHECK(g0.raw_counts[0][0] == g0.raw_counts[0][1]);

  const TimeChangedFlow two(AdditiveClock::constant(psi, 2.0));
  EntropyGridSpec slow = spec;
  for (int& n : slow.n_values) n *= 2;
  const EntropyEstimate phi_est = entropy_estimate_flow(two, qs, slow);
  CHECK(phi_est.extrapolated == doctest::Approx(flow_est.extrapolated / 2).epsilon(0.05));
  const TotokiReport t = totoki_from_estimates(phi_est, flow_est, 2.0, 0.0);
  CHECK(t.ratio == doctest::Approx(1.0).epsilon(0.05));

  const TimeChangedFlow same(AdditiveClock::constant(psi, 1.0));
  const TotokiReport identity = totoki_check(same, qs, spec);
  CHECK(identity.ratio == 1.0);
}

TEST_CASE("estimates are independent of the worker count") {
  const BaseMap f = BaseMap::cat_map();
  const auto xs = cloud(f, 4000);
  const EntropyGridSpec spec = grid(6, {0.2, 0.1});
  const EntropyEstimate a = entropy_estimate_map(f, xs, spec, 1);
  const EntropyEstimate b = entropy_estimate_map(f, xs, spec, 4);
  CHECK(a.grid.raw_counts == b.grid.raw_counts);
  CHECK(a.extrapolated == b.extrapolated);
  CHECK(grid_csv(a.grid) == grid_csv(b.grid));
}
