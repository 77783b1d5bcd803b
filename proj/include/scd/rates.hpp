#pragma once

// Rate laws for 0th/1st/2nd-order channels and the materials/sink/source
// catalogs they draw on.
//
// Units: SI throughout (m, s, m^2/s, m^3) except energies in eV and the
// temperature in K. The functional forms below (thermally activated
// dissociation, diffusion-limited capture, capillary binding law) are the
// conventional cluster-dynamics choices; the default parameter files that
// ship with the project are representative, not authoritative.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scd/species.hpp"

namespace scd {

inline constexpr double kBoltzmann_eV_per_K = 8.617333e-5;
inline constexpr double kPi = 3.14159265358979323846;

struct MobilityParams {
  double prefactor_m2_per_s = 0.0;  // D0
  double migration_eV = 0.0;        // Em
};

/// Capillary binding law in the count n >= 2 of the emitted constituent:
///   Eb(n) = Ef + (Eb2 - Ef) (n^(2/3) - (n-1)^(2/3)) / (2^(2/3) - 1)
/// n == 1 (the last unit of a constituent in a complex cluster) has no
/// capillary value and needs `single_eV` or an explicit override.
struct BindingLaw {
  double formation_eV = 0.0;
  double dimer_binding_eV = 0.0;
  std::optional<double> single_eV;

  std::optional<double> at(std::int64_t n) const;
};

struct MaterialsCatalog {
  double temperature_K = 783.0;
  double atomic_volume_m3 = 1.18e-29;
  double attempt_frequency_per_s = 1e13;
  double capture_offset_m = 0.0;
  std::optional<double> capture_radius_override_m;
  CompositionLimits limits;

  /// The configured mobile species set S'_m.
  std::map<Composition, MobilityParams> mobile;
  /// Constituents that may be emitted, with their binding law. A constituent
  /// absent here never produces emission channels.
  std::array<std::optional<BindingLaw>, 4> emission_laws;
  std::map<std::pair<Composition, Constituent>, double> binding_overrides;

  double diffusivity(const Composition& c) const;
  bool emits(Constituent c) const { return emission_laws[static_cast<int>(c)].has_value(); }
  /// Throws ConfigError when emission of `c` is enabled but no energy is known.
  double binding_energy(const Composition& comp, Constituent c) const;
  double thermal_energy_eV() const { return kBoltzmann_eV_per_K * temperature_K; }
  /// Throws ConfigError for non-physical values.
  void validate() const;
};

struct Sink {
  std::string name;
  double density_per_m2 = 0.0;
  double strength = 1.0;  // default Z for every mobile species
  std::map<Composition, double> strength_overrides;

  double strength_for(const Composition& c) const;
};

struct SinkCatalog {
  std::vector<Sink> sinks;

  /// sum_l Z_il rho_l  [1/m^2]
  double total_strength(const Composition& c) const;
  void validate() const;
};

struct Beam {
  std::string name;
  /// Events per unit volume and time, so the channel rate scales with the
  /// (possibly rescaled) simulation volume.
  double event_rate_per_m3_s = 0.0;
  double displacements_per_event = 0.0;
  std::vector<StoichTerm> inserts;
};

struct SourceTerm {
  std::vector<Beam> beams;
  void validate() const;
};

/// Everything the rate laws need, bundled.
struct Model {
  MaterialsCatalog materials;
  SinkCatalog sinks;
  SourceTerm source;

  void validate() const;
};

struct RateValue {
  double rate = 0.0;  // 1/s, total channel propensity
  int order = 0;
  bool like_pair = false;
};

/// Species record with diffusivity, binding energies and capture radius
/// filled in from the catalog.
SpeciesRecord make_record(const Composition& c, std::int64_t population, const MaterialsCatalog& catalog);

/// X * D * sum_l Z_il rho_l; nullopt for immobile species.
std::optional<RateValue> sink_absorption_rate(const SpeciesRecord& s, const SinkCatalog& sinks);

/// Per-cluster dissociation frequency nu0 exp(-(Eb + Em)/kT) of emitting one
/// `emitted` monomer.
double emission_frequency(const SpeciesRecord& s, Constituent emitted, const MaterialsCatalog& catalog);
/// Total per-cluster dissociation rate over every admissible emission channel.
double total_emission_frequency(const SpeciesRecord& s, const MaterialsCatalog& catalog);
/// X * emission_frequency. Throws ConfigError if a binding energy is missing.
RateValue emission_rate(const SpeciesRecord& s, Constituent emitted, const MaterialsCatalog& catalog);

double capture_radius(const SpeciesRecord& a, const SpeciesRecord& b, const MaterialsCatalog& catalog);
/// k_ab = 4 pi r_cap (D_a + D_b)  [m^3/s]
double binary_rate_constant(const SpeciesRecord& a, const SpeciesRecord& b, const MaterialsCatalog& catalog);

/// k X_a X_b / V for unlike reactants, k X (X - 1) / V for like pairs.
double diffusion_limited_propensity(double capture_radius_m, double d_a, double d_b, std::int64_t x_a,
                                    std::int64_t x_b, double volume_m3, bool like_pair);

/// nullopt when both reactants are immobile.
std::optional<RateValue> binary_rate(const SpeciesRecord& a, const SpeciesRecord& b, double volume_m3,
                                     const MaterialsCatalog& catalog);

RateValue insertion_rate(const Beam& beam, double volume_m3);

}  // namespace scd
