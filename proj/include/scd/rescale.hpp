#pragma once

// Volume rescaling: mobile-species loss rates, diffusion lengths, the
// rescale trigger and binomial thinning of every population.

#include <cstdint>
#include <vector>

#include "scd/network.hpp"
#include "scd/rng.hpp"

namespace scd {

struct RescaleConfig {
  double gamma = 0.9999;
  double margin = 1.0;
  std::int64_t cooldown_events = 1000;
  std::int64_t suppress_after_insertion_events = 100;

  void validate() const;
};

struct SpeciesLoss {
  Composition composition;
  double loss_rate = 0.0;  // 1/s
  double length = 0.0;     // m; +inf when loss_rate == 0
};

struct DiffusionLengthReport {
  std::vector<SpeciesLoss> species;  // one per configured mobile species
  double l_max = 0.0;                // over species with a positive loss rate
  bool defined = false;              // some species has a positive loss rate
};

/// D * sum Z rho + total dissociation rate + sum_j k_ij X_j / V over the
/// current species j that can react with `mobile`.
double loss_rate(const Composition& mobile, const ReactionNetwork& net);

/// Loss rates and diffusion lengths over the catalog's mobile species list.
DiffusionLengthReport diffusion_lengths(const ReactionNetwork& net);

bool should_rescale(const DiffusionLengthReport& report, double volume_m3, const RescaleConfig& cfg,
                    std::int64_t events_since_rescale, std::int64_t events_since_insertion);

struct RescaleOutcome {
  double old_volume = 0.0;
  double new_volume = 0.0;
  std::int64_t units_removed = 0;
  std::vector<std::pair<Composition, std::int64_t>> removed;  // per species, dense order
};

/// X -> Binomial(X, gamma) for every species, V -> gamma V, then a sweep and
/// an exact rate resync. The returned report of the sweep is full, so the
/// noncritical registries must be rebuilt by the caller.
RescaleOutcome rescale(ReactionNetwork& net, double gamma, RngStream& rng);

}  // namespace scd
