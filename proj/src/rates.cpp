#include "scd/rates.hpp"

#include <cmath>
#include <limits>

#include "scd/errors.hpp"

namespace scd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cluster_radius(const Composition& c, double atomic_volume) {
  const double n = std::max<double>(c.point_defect_count(), 1.0);
  return std::cbrt(3.0 * n * atomic_volume / (4.0 * kPi));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::optional<double> BindingLaw::at(std::int64_t n) const {
  if (n <= 1) return single_eV;
  const double shape = (std::pow(double(n), 2.0 / 3.0) - std::pow(double(n - 1), 2.0 / 3.0)) /
                       (std::pow(2.0, 2.0 / 3.0) - 1.0);
  return formation_eV + (dimer_binding_eV - formation_eV) * shape;
}

double MaterialsCatalog::diffusivity(const Composition& c) const {
  const auto it = mobile.find(c);
  if (it == mobile.end()) return 0.0;
  return it->second.prefactor_m2_per_s * std::exp(-it->second.migration_eV / thermal_energy_eV());
}

double MaterialsCatalog::binding_energy(const Composition& comp, Constituent c) const {
  if (const auto it = binding_overrides.find({comp, c}); it != binding_overrides.end()) {
    return it->second;
  }
  const auto& law = emission_laws[static_cast<int>(c)];
  if (law) {
    if (auto e = law->at(count_of(comp, c))) return *e;
  }
  throw ConfigError("no binding energy for emission of " + std::string(to_string(c)) + " from " +
                    to_string(comp));
}

void MaterialsCatalog::validate() const {
  require(temperature_K > 0.0 && std::isfinite(temperature_K), "temperature must be positive");
  require(atomic_volume_m3 > 0.0, "atomic volume must be positive");
  require(attempt_frequency_per_s >= 0.0, "attempt frequency must be non-negative");
  require(capture_offset_m >= 0.0, "capture offset must be non-negative");
  if (capture_radius_override_m) require(*capture_radius_override_m >= 0.0, "capture radius must be non-negative");
  for (const auto& [comp, params] : mobile) {
    require(is_valid(comp), "mobile species " + to_string(comp) + " is not admissible");
    require(std::isfinite(params.migration_eV), "migration energy of " + to_string(comp) + " must be finite");
    require(diffusivity(comp) > 0.0, "mobile species " + to_string(comp) + " has D(T) = 0");
  }
  for (Constituent c : kAllConstituents) {
    if (!emits(c)) continue;
    require(mobile.contains(monomer_of(c)),
            "emission of " + std::string(to_string(c)) + " is enabled but its monomer is not mobile");
    const auto& law = *emission_laws[static_cast<int>(c)];
    require(std::isfinite(law.formation_eV) && std::isfinite(law.dimer_binding_eV),
            "binding law energies must be finite");
  }
  for (const auto& [k, e] : binding_overrides) require(std::isfinite(e), "binding override must be finite");
}

double Sink::strength_for(const Composition& c) const {
  if (const auto it = strength_overrides.find(c); it != strength_overrides.end()) return it->second;
  return strength;
}

double SinkCatalog::total_strength(const Composition& c) const {
  double sum = 0.0;
  for (const auto& s : sinks) sum += s.strength_for(c) * s.density_per_m2;
  return sum;
}

void SinkCatalog::validate() const {
  for (const auto& s : sinks) {
    require(s.density_per_m2 >= 0.0, "sink '" + s.name + "' has negative density");
    require(s.strength >= 0.0, "sink '" + s.name + "' has negative strength");
    for (const auto& [c, z] : s.strength_overrides) require(z >= 0.0, "sink '" + s.name + "' has negative strength");
  }
}

void SourceTerm::validate() const {
  for (const auto& b : beams) {
    require(b.event_rate_per_m3_s >= 0.0, "beam '" + b.name + "' has a negative event rate");
    require(b.displacements_per_event >= 0.0, "beam '" + b.name + "' has negative displacements");
    require(!b.inserts.empty(), "beam '" + b.name + "' inserts nothing");
    for (const auto& t : b.inserts) {
      require(t.count >= 1, "beam '" + b.name + "' has a non-positive insert count");
      require(is_valid(t.composition), "beam '" + b.name + "' inserts an inadmissible species");
    }
  }
}

void Model::validate() const {
  materials.validate();
  sinks.validate();
  source.validate();
  for (const auto& b : source.beams) {
    for (const auto& t : b.inserts) check_limits(t.composition, materials.limits);
  }
}

SpeciesRecord make_record(const Composition& c, std::int64_t population, const MaterialsCatalog& catalog) {
  SpeciesRecord r;
  r.key = canonical_key(c);
  r.composition = c;
  r.population = population;
  r.diffusivity = catalog.diffusivity(c);
  r.radius = cluster_radius(c, catalog.atomic_volume_m3);
  for (Constituent k : kAllConstituents) {
    const auto i = static_cast<int>(k);
    r.binding_eV[i] = kNaN;
    if (catalog.emits(k) && emission_products(c, k)) r.binding_eV[i] = catalog.binding_energy(c, k);
  }
  return r;
}

std::optional<RateValue> sink_absorption_rate(const SpeciesRecord& s, const SinkCatalog& sinks) {
  if (!s.mobile()) return std::nullopt;
  return RateValue{double(s.population) * s.diffusivity * sinks.total_strength(s.composition), 1, false};
}

double emission_frequency(const SpeciesRecord& s, Constituent emitted, const MaterialsCatalog& catalog) {
  const double eb = s.binding_eV[static_cast<int>(emitted)];
  if (std::isnan(eb)) {
    throw ConfigError("no binding energy for emission of " + std::string(to_string(emitted)) + " from " +
                      to_string(s.composition));
  }
  const auto it = catalog.mobile.find(monomer_of(emitted));
  const double em = it == catalog.mobile.end() ? 0.0 : it->second.migration_eV;
  return catalog.attempt_frequency_per_s * std::exp(-(eb + em) / catalog.thermal_energy_eV());
}

double total_emission_frequency(const SpeciesRecord& s, const MaterialsCatalog& catalog) {
  double sum = 0.0;
  for (Constituent k : kAllConstituents) {
    if (!std::isnan(s.binding_eV[static_cast<int>(k)])) sum += emission_frequency(s, k, catalog);
  }
  return sum;
}

RateValue emission_rate(const SpeciesRecord& s, Constituent emitted, const MaterialsCatalog& catalog) {
  return {double(s.population) * emission_frequency(s, emitted, catalog), 1, false};
}

double capture_radius(const SpeciesRecord& a, const SpeciesRecord& b, const MaterialsCatalog& catalog) {
  if (catalog.capture_radius_override_m) return *catalog.capture_radius_override_m;
  return a.radius + b.radius + catalog.capture_offset_m;
}

double binary_rate_constant(const SpeciesRecord& a, const SpeciesRecord& b, const MaterialsCatalog& catalog) {
  return 4.0 * kPi * capture_radius(a, b, catalog) * (a.diffusivity + b.diffusivity);
}

double diffusion_limited_propensity(double capture_radius_m, double d_a, double d_b, std::int64_t x_a,
                                    std::int64_t x_b, double volume_m3, bool like_pair) {
  const double k = 4.0 * kPi * capture_radius_m * (d_a + d_b);
  const double pairs = like_pair ? double(x_a) * double(x_a - 1) : double(x_a) * double(x_b);
  return k * pairs / volume_m3;
}

std::optional<RateValue> binary_rate(const SpeciesRecord& a, const SpeciesRecord& b, double volume_m3,
                                     const MaterialsCatalog& catalog) {
  if (!a.mobile() && !b.mobile()) return std::nullopt;
  const bool like = a.key == b.key;
  if (like && a.population < 2) return RateValue{0.0, 2, true};
  const double k = binary_rate_constant(a, b, catalog);
  const double pairs = like ? double(a.population) * double(a.population - 1)
                            : double(a.population) * double(b.population);
  return RateValue{k * pairs / volume_m3, 2, like};
}

RateValue insertion_rate(const Beam& beam, double volume_m3) {
  return {beam.event_rate_per_m3_s * volume_m3, 0, false};
}

}  // namespace scd
