#pragma once

// Tiny exactly solvable systems expressed as engine catalogs.

#include <cmath>

#include "compare.hpp"
#include "scd/network.hpp"
#include "scd/rates.hpp"
#include "scd/ssa.hpp"

namespace scd::toys {

/// He1 inserted at rate lambda and absorbed at rate mu per atom: an M/M/inf
/// queue with stationary law Poisson(lambda/mu).
inline Model birth_death(double lambda, double mu, double volume) {
  Model m;
  m.materials.mobile[kHe1] = {1.0, 0.0};
  m.materials.capture_radius_override_m = 0.0;
  m.sinks.sinks.push_back({"sink", mu, 1.0, {}});
  m.source.beams.push_back({"He", lambda / volume, 0.0, {{kHe1, 1}}});
  return m;
}

/// Immobile V1 and mobile I1 with no sinks or emission; every unlike pair
/// rate constant over V is kappa (like pairs of I1 get 2 kappa).
inline Model annihilation(double kappa, double volume) {
  Model m;
  m.materials.mobile[kI1] = {1.0, 0.0};
  m.materials.capture_radius_override_m = kappa * volume / (4.0 * kPi);
  return m;
}

/// Direct SSA with sweeps until the next event would pass t_end.
inline void run_direct_until(ReactionNetwork& net, RngStream& rng, double t_end) {
  double t = 0.0;
  for (;;) {
    const auto ev = direct_step(net, rng, t_end - t);
    if (!ev || !ev->applied) return;
    t += ev->dt;
    net.sweep();
  }
}

/// Total-variation distance between replica end states and the dense CME
/// solution of the annihilation toy at time t.
struct TvResult {
  double tv = 0.0;
  std::size_t states = 0;
  std::int64_t outside = 0;  // replicas landing outside the enumerated space
};

inline TvResult annihilation_tv(int replicas, double t, std::uint64_t seed) {
  const double volume = 1e-20;
  const Model m = annihilation(0.25, volume);
  const oracle::State initial{{kV1, 4}, {kI1, 4}};
  const oracle::DenseCME cme(m, volume, initial);
  const Eigen::VectorXd p = cme.integrate(t);
  std::vector<double> counts(cme.size(), 0.0);
  TvResult res;
  res.states = cme.size();
  for (int r = 0; r < replicas; ++r) {
    ReactionNetwork net(m, volume);
    for (const auto& [c, x] : initial) net.adjust_population(c, x);
    net.sweep();
    RngStream rng(seed, std::uint64_t(r));
    run_direct_until(net, rng, t);
    const long idx = cme.index_of(oracle::state_of(net));
    if (idx < 0) {
      ++res.outside;
      continue;
    }
    counts[std::size_t(idx)] += 1.0;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) res.tv += std::fabs(counts[i] / replicas - p(Eigen::Index(i)));
  res.tv = 0.5 * (res.tv + double(res.outside) / replicas);
  return res;
}

struct BirthDeathResult {
  double time_mean = 0.0;
  double expected = 0.0;
  double sigma = 0.0;  // standard error of the time average
  double elapsed = 0.0;
};

/// Time-weighted mean population over `steps` direct steps after a short
/// burn-in.
inline BirthDeathResult birth_death_mean(double lambda, double mu, std::int64_t steps, std::uint64_t seed) {
  const double volume = 1e-20;
  const Model m = birth_death(lambda, mu, volume);
  ReactionNetwork net(m, volume);
  net.sweep();
  RngStream rng(seed, 0);
  const SpeciesKey he = canonical_key(kHe1);
  for (int i = 0; i < 1000; ++i) {
    direct_step(net, rng);
    net.sweep();
  }
  double area = 0.0, elapsed = 0.0;
  for (std::int64_t i = 0; i < steps; ++i) {
    const double x = double(net.population(he));
    const auto ev = direct_step(net, rng);
    area += x * ev->dt;
    elapsed += ev->dt;
    net.sweep();
  }
  BirthDeathResult res;
  res.time_mean = area / elapsed;
  res.expected = lambda / mu;
  // Integrated autocorrelation time of an M/M/inf occupancy is 1/mu.
  res.sigma = std::sqrt(2.0 * (lambda / mu) / (mu * elapsed));
  res.elapsed = elapsed;
  return res;
}

}  // namespace scd::toys
