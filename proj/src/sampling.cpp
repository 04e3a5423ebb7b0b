#include "flowlab/sampling.hpp"

#include <cmath>
#include <numbers>

#include "flowlab/errors.hpp"
#include "flowlab/parallel.hpp"

namespace flowlab {

double CounterRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<TorusPoint> birkhoff_samples(const BaseMap& map, const BirkhoffOptions& options, const CounterRng& rng,
                                         int workers) {
  if (options.count == 0) return {};
  if (options.stride == 0) throw Error(ErrorCode::InvalidArgument, "Birkhoff stride must be positive");
  const std::size_t chains = options.chains == 0 ? options.count : std::min(options.chains, options.count);
  const std::size_t per_chain = options.count / chains;
  const std::size_t extra = options.count % chains;
  std::vector<std::size_t> offset(chains + 1, 0);
  for (std::size_t c = 0; c < chains; ++c) offset[c + 1] = offset[c] + per_chain + (c < extra ? 1 : 0);

  const int m = map.dim();
  std::vector<TorusPoint> out(options.count, TorusPoint(m));
  parallel_for(chains, workers, [&](std::size_t c) {
    CounterRng local = rng.split(c);
    TorusPoint x(m);
    for (int i = 0; i < m; ++i) x(i) = local.uniform();
    for (std::size_t k = 0; k < options.burn_in; ++k) map.step(x.data(), x.data());
    for (std::size_t j = offset[c]; j < offset[c + 1]; ++j) {
      out[j] = x;
      for (std::size_t k = 0; k < options.stride; ++k) map.step(x.data(), x.data());
    }
  });
  return out;
}

std::vector<SuspensionPoint> suspension_samples(const SuspensionFlow& flow, const std::vector<TorusPoint>& base,
                                                const CounterRng& rng) {
  std::vector<SuspensionPoint> out;
  out.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CounterRng local = rng.split(i);
    out.push_back(flow.canonical(base[i], local.uniform()));
  }
  return out;
}

std::vector<TorusPoint> uniform_torus_samples(int dim, std::size_t count, const CounterRng& rng) {
  std::vector<TorusPoint> out(count, TorusPoint(dim));
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng local = rng.split(i);
    for (int k = 0; k < dim; ++k) out[i](k) = local.uniform();
  }
  return out;
}

}  // namespace flowlab
