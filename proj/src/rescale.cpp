#include "scd/rescale.hpp"

#include <cmath>
#include <limits>

#include "scd/errors.hpp"

namespace scd {

void RescaleConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(margin > 0.0)) throw ConfigError("rescale margin must be positive");
  if (cooldown_events < 0) throw ConfigError("rescale cooldown must be non-negative");
  if (suppress_after_insertion_events < 0) throw ConfigError("insertion suppression window must be non-negative");
}

double loss_rate(const Composition& mobile, const ReactionNetwork& net) {
  const Model& model = net.model();
  const SpeciesRecord s = make_record(mobile, 1, model.materials);
  double loss = s.diffusivity * model.sinks.total_strength(mobile);
  loss += total_emission_frequency(s, model.materials);
  double partners = 0.0;
  for (const SpeciesRecord& other : net.species()) {
    if (other.population == 0 || !binary_products(mobile, other.composition)) continue;
    partners += binary_rate_constant(s, other, model.materials) * double(other.population);
  }
  return loss + partners / net.volume();
}

DiffusionLengthReport diffusion_lengths(const ReactionNetwork& net) {
  DiffusionLengthReport report;
  for (const auto& [comp, params] : net.model().materials.mobile) {
    SpeciesLoss sl;
    sl.composition = comp;
    sl.loss_rate = loss_rate(comp, net);
    const double d = net.model().materials.diffusivity(comp);
    if (sl.loss_rate > 0.0) {
      sl.length = std::sqrt(d / sl.loss_rate);
      report.l_max = report.defined ? std::max(report.l_max, sl.length) : sl.length;
      report.defined = true;
    } else {
      sl.length = std::numeric_limits<double>::infinity();
    }
    report.species.push_back(sl);
  }
  return report;
}

bool should_rescale(const DiffusionLengthReport& report, double volume_m3, const RescaleConfig& cfg,
                    std::int64_t events_since_rescale, std::int64_t events_since_insertion) {
  if (!report.defined) return false;
  if (events_since_rescale < cfg.cooldown_events) return false;
  if (events_since_insertion < cfg.suppress_after_insertion_events) return false;
  const double l3 = report.l_max * report.l_max * report.l_max;
  return cfg.margin * l3 <= cfg.gamma * volume_m3;
}

RescaleOutcome rescale(ReactionNetwork& net, double gamma, RngStream& rng) {
  RescaleOutcome out;
  out.old_volume = net.volume();
  if (!net.affected().empty()) throw InvariantViolation("rescale requested between an event and its sweep");
  const auto species = net.species();
  std::vector<std::pair<Composition, std::int64_t>> deltas;
  deltas.reserve(species.size());
  for (const SpeciesRecord& s : species) {
    const std::int64_t kept = rng.binomial(s.population, gamma);
    deltas.emplace_back(s.composition, kept - s.population);
  }
  for (const auto& [c, d] : deltas) {
    if (d == 0) continue;
    net.adjust_population(c, d);
    out.units_removed -= d;
    out.removed.emplace_back(c, -d);
  }
  net.set_volume(gamma * out.old_volume);
  out.new_volume = net.volume();
  net.sweep();
  net.resync();
  return out;
}

}  // namespace scd
