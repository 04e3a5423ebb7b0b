// Small utilities shared by the unit tests.
#pragma once

#include <Eigen/Core>

#include "flowlab/sampling.hpp"
#include "flowlab/suspension.hpp"

namespace testing {

inline flowlab::TorusPoint point(std::initializer_list<double> xs) {
  flowlab::TorusPoint p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p(i++) = x;
  return p;
}

inline flowlab::TorusPoint random_point(flowlab::CounterRng& rng, int dim) {
  flowlab::TorusPoint p(dim);
  for (int i = 0; i < dim; ++i) p(i) = rng.uniform();
  return p;
}

inline flowlab::SuspensionPoint random_susp(flowlab::CounterRng& rng, int dim) {
  flowlab::SuspensionPoint q;
  q.base = random_point(rng, dim);
  q.height = rng.uniform();
  return q;
}

}  // namespace testing
