#pragma once

// Defect-cluster species algebra: compositions, canonical keys and the product
// rules of every admitted reaction type.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scd {

/// Composition of a cluster V_iHe_jH_k (point_defect = i > 0) or
/// I_iHe_jH_k (point_defect = -i < 0). Gas-only species are restricted to the
/// He and H monomers.
struct Composition {
  std::int32_t point_defect = 0;
  std::int32_t he = 0;
  std::int32_t h = 0;

  constexpr auto operator<=>(const Composition&) const = default;

  constexpr bool is_vacancy_type() const { return point_defect > 0; }
  constexpr bool is_interstitial_type() const { return point_defect < 0; }
  constexpr std::int32_t point_defect_count() const {
    return point_defect < 0 ? -point_defect : point_defect;
  }
  constexpr std::int64_t size() const {
    return std::int64_t{point_defect_count()} + he + h;
  }
  constexpr bool is_monomer() const { return size() == 1; }
};

inline constexpr Composition kV1{1, 0, 0};
inline constexpr Composition kI1{-1, 0, 0};
inline constexpr Composition kHe1{0, 1, 0};
inline constexpr Composition kH1{0, 0, 1};

enum class Constituent : std::uint8_t { Vacancy = 0, Interstitial = 1, Helium = 2, Hydrogen = 3 };
inline constexpr std::array<Constituent, 4> kAllConstituents{
    Constituent::Vacancy, Constituent::Interstitial, Constituent::Helium, Constituent::Hydrogen};

std::string_view to_string(Constituent c);
Constituent parse_constituent(std::string_view text);
Composition monomer_of(Constituent c);
/// Number of units of `c` contained in `comp`.
std::int32_t count_of(const Composition& comp, Constituent c);

/// Configurable upper bounds on cluster composition. Exceeding them is a hard
/// CapacityError, never a silent truncation.
struct CompositionLimits {
  std::int32_t max_point_defects = (1 << 24) - 1;
  std::int32_t max_he = (1 << 16) - 1;
  std::int32_t max_h = (1 << 16) - 1;
};

bool is_valid(const Composition& c);
/// Throws CapacityError if `c` exceeds `limits`.
void check_limits(const Composition& c, const CompositionLimits& limits);

/// "V5He2H1", "I3", "He1", "H1". Zero components are omitted.
std::string to_string(const Composition& c);
/// Inverse of to_string; throws ConfigError on malformed or invalid input.
Composition parse_composition(std::string_view text);

// ---------------------------------------------------------------------------
// Keys
//
// Species key layout (64 bits):
//   bit 62      species tag (always 1, so species keys never collide with dummies)
//   bit 56      sign: 1 = interstitial character
//   bits 32..55 point-defect magnitude (24 bits)
//   bits 16..31 He count (16 bits)
//   bits  0..15 H count (16 bits)
// ---------------------------------------------------------------------------

using SpeciesKey = std::uint64_t;

inline constexpr SpeciesKey kSpeciesTag = SpeciesKey{1} << 62;

/// Dummy keys stand in for the missing reactants of 0th/1st-order channels.
namespace dummy {
inline constexpr SpeciesKey kInsertion = 1;
inline constexpr SpeciesKey kSink = 2;
inline constexpr SpeciesKey kEmitVacancy = 3;
inline constexpr SpeciesKey kEmitInterstitial = 4;
inline constexpr SpeciesKey kEmitHelium = 5;
inline constexpr SpeciesKey kEmitHydrogen = 6;
inline constexpr SpeciesKey kBeamBase = 16;
}  // namespace dummy

SpeciesKey emission_dummy(Constituent c);
SpeciesKey beam_dummy(std::size_t beam_index);

/// Injective over the key bit-field range; throws CapacityError outside it.
SpeciesKey canonical_key(const Composition& c);
Composition composition_from_key(SpeciesKey key);
constexpr bool is_species_key(SpeciesKey k) { return (k & kSpeciesTag) != 0; }

struct ReactionKey {
  SpeciesKey first = 0;   // larger key
  SpeciesKey second = 0;  // smaller key (a dummy for 0th/1st-order channels)

  constexpr auto operator<=>(const ReactionKey&) const = default;

  template <typename H>
  friend H AbslHashValue(H h, const ReactionKey& k) {
    return H::combine(std::move(h), k.first, k.second);
  }
};

/// Order-independent channel key: pair_key(a, b) == pair_key(b, a).
constexpr ReactionKey pair_key(SpeciesKey a, SpeciesKey b) {
  return a >= b ? ReactionKey{a, b} : ReactionKey{b, a};
}

/// A live species in the simulation volume.
struct SpeciesRecord {
  SpeciesKey key = 0;
  Composition composition;
  std::int64_t population = 0;
  double diffusivity = 0.0;  // m^2/s; > 0 iff mobile
  /// Binding energy (eV) of one monomer of each constituent to the cluster;
  /// NaN where no emission channel exists.
  std::array<double, 4> binding_eV{};
  double radius = 0.0;  // m, cached capture radius contribution

  // Sweep flags: population change since the last sweep and "created by the
  // last event(s)".
  std::int64_t f1 = 0;
  bool f2 = false;
  bool in_affected = false;

  bool mobile() const { return diffusivity > 0.0; }
};

// ---------------------------------------------------------------------------
// Product rules
// ---------------------------------------------------------------------------

struct StoichTerm {
  Composition composition;
  std::int64_t count = 0;
  bool operator==(const StoichTerm&) const = default;
};

struct ReactionProducts {
  std::vector<StoichTerm> consumed;
  std::vector<StoichTerm> produced;
  bool operator==(const ReactionProducts&) const = default;
};

/// Net point-defect content sum(point_defect * count) of a list of terms.
std::int64_t point_defect_balance(const std::vector<StoichTerm>& terms);

/// V-type + I-type collision. Throws std::invalid_argument for like-signed
/// reactants.
ReactionProducts annihilation_products(const Composition& v_cluster, const Composition& i_cluster);

/// Component-wise sum; nullopt when the combined cluster is not an admissible
/// species (gas-only clusters other than monomers) or the reactants have
/// opposite point-defect character.
std::optional<ReactionProducts> aggregation_products(const Composition& a, const Composition& b);

/// Any 2nd-order channel between a and b: annihilation for opposite character,
/// otherwise aggregation.
std::optional<ReactionProducts> binary_products(const Composition& a, const Composition& b);

/// Emission of one monomer of `emitted`; nullopt for monomers, absent
/// constituents and inadmissible remainders.
std::optional<ReactionProducts> emission_products(const Composition& c, Constituent emitted);

/// Sink absorption removes the cluster from the volume.
ReactionProducts sink_products(const Composition& c);

}  // namespace scd

template <>
struct std::hash<scd::ReactionKey> {
  std::size_t operator()(const scd::ReactionKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ull ^ k.second);
  }
};
