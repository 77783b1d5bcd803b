#pragma once

// Direct-method SSA: exponential waiting times and linear-scan selection over
// the network's dense reaction order.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "scd/network.hpp"
#include "scd/rng.hpp"

namespace scd {

/// ln(1/r1) / R_tot for a uniform r1 in (0, 1].
double waiting_time(double total_rate, double r1);
/// Exponential waiting time; +inf when total_rate <= 0 (frozen system).
double sample_dt(double total_rate, RngStream& rng);

struct Selection {
  std::size_t index = 0;
  bool drift = false;  // cumulative sum never exceeded the threshold
};

/// First index whose running cumulative rate strictly exceeds `threshold`.
/// If rounding leaves the sum short of the threshold, the last positive-rate
/// entry is returned with drift = true. Requires at least one positive rate.
Selection select_channel(std::span<const double> rates, double threshold);

struct EventOutcome {
  std::size_t index = 0;
  ReactionEntry entry;
  double dt = 0.0;
  ReactionProducts products;
  bool drift = false;
  bool applied = true;  // false when dt overshot the horizon
};

/// Samples dt, selects a channel, applies its state change. Does not sweep.
/// nullopt (and no state change) when every rate is zero. When dt exceeds
/// `horizon` nothing is selected or applied and `applied` is false.
std::optional<EventOutcome> direct_step(ReactionNetwork& net, RngStream& rng,
                                        double horizon = std::numeric_limits<double>::infinity());

}  // namespace scd
