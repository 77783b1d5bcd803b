#pragma once

// Noncritical registries P (species) and J (reactions) with their leap-size
// accumulators, the safe leap time tau' and Poisson-batched leaps.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "scd/compensated_sum.hpp"
#include "scd/network.hpp"
#include "scd/rng.hpp"

namespace scd {

struct LeapControl {
  std::int64_t n_cr = 10;
  double epsilon = 0.03;
  double n_mult = 10.0;
  std::int64_t fallback_steps = 200;
  int max_halvings = 10;

  /// Throws ConfigError unless n_cr >= 1 and 0 < epsilon < 1.
  void validate() const;
};

struct NoncriticalSpecies {
  SpeciesKey key = 0;
  CompensatedSum mu;      // sum_j nu_ij R_j over J
  CompensatedSum sigma2;  // sum_j nu_ij^2 R_j over J
  std::int32_t o1 = 0;    // 1st-order channels in J
  std::int32_t o2 = 0;    // unlike 2nd-order channels in J
  std::int32_t o3 = 0;    // like-pair channels in J
};

struct NoncriticalReaction {
  ReactionKey key;
  double rate = 0.0;  // rate the accumulators currently hold for this channel
  SpeciesKey a = 0;
  SpeciesKey b = 0;
  std::uint8_t order = 1;
  bool like_pair = false;
  std::int64_t x_min = 0;
  std::int64_t k = 0;
};

/// 1 for 1st-order reactant roles only, 2 with an unlike pair, 2 + 1/(X-1)
/// with a like pair.
double g_factor(std::int32_t o2, std::int32_t o3, std::int64_t population);

/// min(max(eps X/g, 1)/|mu|, max(eps X/g, 1)^2/sigma2); a zero mu or sigma2
/// contributes no bound.
double species_tau_bound(std::int64_t population, double g, double mu, double sigma2, double epsilon);

enum class LeapStatus {
  Leaped,    // tau advanced, J fired in batch (and maybe one critical event)
  NoLeap,    // J empty: take a direct step instead
  Fallback,  // tau' too small or halving limit exceeded: run N_SSA direct steps
  Frozen,    // nothing can fire
};

struct LeapOutcome {
  LeapStatus status = LeapStatus::NoLeap;
  double tau = 0.0;
  double tau_prime = 0.0;
  int halvings = 0;
  std::int64_t firings = 0;  // noncritical firings executed
  std::optional<ReactionEntry> critical;
  std::vector<std::pair<ReactionEntry, std::int64_t>> fired;  // noncritical channels with k > 0
};

class LeapState {
 public:
  explicit LeapState(LeapControl control = {});

  const LeapControl& control() const { return control_; }

  bool classify(const ReactionEntry& e, const ReactionNetwork& net) const;

  /// Brings J and P in line with the entries a sweep touched or removed, and
  /// the noncritical flags of the network's entries in line with J.
  void sync(ReactionNetwork& net, const SweepReport& report);
  /// Scratch rebuild of P and J from the whole network.
  void rebuild(ReactionNetwork& net);

  std::span<const NoncriticalSpecies> species() const { return p_; }
  std::span<const NoncriticalReaction> reactions() const { return j_; }
  const NoncriticalSpecies* find_species(SpeciesKey key) const;
  const NoncriticalReaction* find_reaction(const ReactionKey& key) const;

  /// Safe leap time over P; +inf when P is empty.
  double tau_prime(const ReactionNetwork& net) const;

  /// Sum of the rates of every entry not in J.
  double critical_rate(const ReactionNetwork& net) const;

  /// One leap attempt over at most `time_left`. Leaves the network unswept.
  LeapOutcome attempt(ReactionNetwork& net, RngStream& rng, double time_left);

  // Checkpoint support: the registries in dense order.
  void restore(std::vector<NoncriticalSpecies> p, std::vector<NoncriticalReaction> j);

 private:
  void add_reaction(const ReactionEntry& e, double rate, const ReactionNetwork& net);
  void remove_reaction(const ReactionKey& key);
  void contribute(SpeciesKey s, int nu, double rate, int order_slot, int count_delta);
  NoncriticalSpecies& species_slot(SpeciesKey key);
  void erase_species(SpeciesKey key);
  std::int64_t x_min_of(const ReactionEntry& e, const ReactionNetwork& net) const;

  LeapControl control_;
  std::vector<NoncriticalSpecies> p_;
  absl::flat_hash_map<SpeciesKey, std::uint32_t> p_index_;
  std::vector<NoncriticalReaction> j_;
  absl::flat_hash_map<ReactionKey, std::uint32_t> j_index_;
  absl::flat_hash_map<SpeciesKey, std::int64_t> scratch_;
};

}  // namespace scd
