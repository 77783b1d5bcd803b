#include "scd/ssa.hpp"

#include <cmath>
#include <limits>

#include "scd/errors.hpp"

namespace scd {

double waiting_time(double total_rate, double r1) { return std::log(1.0 / r1) / total_rate; }

double sample_dt(double total_rate, RngStream& rng) {
  if (!(total_rate > 0.0)) return std::numeric_limits<double>::infinity();
  // uniform_open never returns 0 or 1, so dt is finite and strictly positive.
  return waiting_time(total_rate, rng.uniform_open());
}

Selection select_channel(std::span<const double> rates, double threshold) {
  double cumulative = 0.0;
  std::size_t last_positive = rates.size();
  for (std::size_t i = 0; i < rates.size(); ++i) {
    cumulative += rates[i];
    if (rates[i] > 0.0) last_positive = i;
    if (cumulative > threshold) return {i, false};
  }
  if (last_positive == rates.size()) throw InvariantViolation("channel selection over an all-zero rate table");
  return {last_positive, true};
}

std::optional<EventOutcome> direct_step(ReactionNetwork& net, RngStream& rng, double horizon) {
  const double r_tot = net.total_rate();
  if (!(r_tot > 0.0)) return std::nullopt;
  EventOutcome out;
  out.dt = sample_dt(r_tot, rng);
  if (out.dt > horizon) {
    out.applied = false;
    return out;
  }
  const Selection sel = select_channel(net.rates(), rng.uniform() * r_tot);
  if (sel.drift) net.recompute_total();
  out.index = sel.index;
  out.drift = sel.drift;
  out.entry = net.entries()[sel.index];
  out.products = net.products_of(out.entry);
  net.apply_state_change(out.products, 1);
  return out;
}

}  // namespace scd
