#pragma once

// The live reaction network: species registry S_all, mobile registry S_m,
// reaction registry R, the affected-species array and the running total rate.
//
// Registries are dense vectors indexed by a hash map. All iteration goes over
// the dense vectors, so trajectories never depend on hash iteration order;
// removal is swap-with-last.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "scd/compensated_sum.hpp"
#include "scd/rates.hpp"
#include "scd/species.hpp"

namespace scd {

enum class ReactionKind : std::uint8_t { Insertion, Sink, Emission, Annihilation, Aggregation };

std::string_view to_string(ReactionKind kind);

struct ReactionEntry {
  ReactionKey key;
  ReactionKind kind = ReactionKind::Insertion;
  std::uint8_t order = 0;
  bool like_pair = false;
  bool noncritical = false;  // membership in J, maintained by LeapState
  Constituent emitted = Constituent::Vacancy;
  std::uint32_t beam = 0;
  SpeciesKey a = 0;  // first reactant (0 for insertion)
  SpeciesKey b = 0;  // second reactant (== a for like pairs, 0 for 1st order)
  std::uint64_t stamp = 0;

  /// Units of `species` consumed by one firing.
  std::int64_t consumption_of(SpeciesKey species) const;
};

struct RemovedEntry {
  ReactionEntry entry;
  double rate = 0.0;
};

/// What a sweep changed, for the noncritical registries.
struct SweepReport {
  std::vector<ReactionKey> touched;  // inserted or rate-updated entries
  std::vector<RemovedEntry> removed;
  bool full = false;                 // every rate was recomputed
  std::size_t inserted = 0;
  std::size_t updated = 0;
};

class ReactionNetwork {
 public:
  ReactionNetwork(const Model& model, double volume_m3);

  const Model& model() const { return *model_; }
  double volume() const { return volume_; }
  double total_rate() const { return r_tot_.value(); }

  // --- species -------------------------------------------------------------
  std::span<const SpeciesRecord> species() const { return species_; }
  std::span<const SpeciesKey> mobile() const { return mobile_; }
  std::span<const SpeciesKey> affected() const { return affected_; }
  const SpeciesRecord* find_species(SpeciesKey key) const;
  std::int64_t population(SpeciesKey key) const;

  // --- reactions -----------------------------------------------------------
  std::size_t reaction_count() const { return entries_.size(); }
  std::span<const ReactionEntry> entries() const { return entries_; }
  std::span<const double> rates() const { return rates_; }
  std::optional<std::size_t> find_reaction(const ReactionKey& key) const;
  void set_noncritical(std::size_t index, bool value) { entries_[index].noncritical = value; }

  /// Stoichiometry of one firing of `entry` in the current species set.
  ReactionProducts products_of(const ReactionEntry& entry) const;

  /// X <- X + multiplicity * nu. Accumulates f1, creates new species with
  /// f2 = true, records every touched key in the affected array. Species that
  /// reach zero stay registered until the next sweep.
  /// Throws InvariantViolation if a population would go negative.
  void apply_state_change(const ReactionProducts& products, std::int64_t multiplicity);

  /// Adds `delta` to one population with the same bookkeeping as
  /// apply_state_change (used by volume thinning and initial conditions).
  void adjust_population(const Composition& c, std::int64_t delta);

  /// Incremental post-event update: purge channels of extinct species, update
  /// or create the channels of affected species (closed-form rate deltas for
  /// existing channels), reset the flags and clear the affected array.
  SweepReport sweep();

  /// Reference path: purge, then rebuild every channel from scratch and sum
  /// R_tot. Produces the same entry set as sweep().
  SweepReport rebuild();

  /// Recomputes every channel rate from the rate laws and R_tot exactly.
  SweepReport resync();

  /// Exact R_tot from the stored entry rates; also stores it.
  double recompute_total();

  /// Changes V. Callers must resync() afterwards.
  void set_volume(double volume_m3) { volume_ = volume_m3; }

  std::uint64_t sweeps() const { return sweep_stamp_; }

  // --- checkpoint support ---------------------------------------------------
  struct Snapshot {
    double volume = 0.0;
    double r_tot = 0.0;
    double r_tot_compensation = 0.0;
    double r_tot_peak = 0.0;
    std::uint64_t stamp = 0;
    std::vector<std::pair<Composition, std::int64_t>> species;  // dense order
    std::vector<SpeciesKey> mobile;
    std::vector<ReactionEntry> entries;
    std::vector<double> rates;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

  /// True when R_tot dropped far below its recent peak so that incremental
  /// rounding is no longer negligible relative to it.
  bool total_needs_recompute() const { return total_rate() < 1e-3 * r_tot_peak_; }

 private:
  SpeciesRecord* find_species_mut(SpeciesKey key);
  SpeciesRecord& ensure_species(const Composition& c);
  void erase_species(SpeciesKey key);
  void mark_affected(SpeciesRecord& rec);

  std::size_t insert_entry(const ReactionEntry& e, double rate);
  void remove_entry(std::size_t index, SweepReport& report);

  void purge_extinct(SweepReport& report);
  void remove_channels_of(const SpeciesRecord& rec, SweepReport& report);
  void create_first_order(const SpeciesRecord& s, SweepReport& report);
  void update_first_order(const SpeciesRecord& s, SweepReport& report);
  void visit_pair(const SpeciesRecord& a, const SpeciesRecord& b, SweepReport& report);
  void finish_sweep();
  void add_total(double delta);

  double fresh_rate(const ReactionEntry& e) const;
  std::optional<ReactionEntry> make_binary_entry(const SpeciesRecord& a, const SpeciesRecord& b) const;

  const Model* model_;
  double volume_;
  CompensatedSum r_tot_;
  double r_tot_peak_ = 0.0;
  std::uint64_t sweep_stamp_ = 0;

  std::vector<SpeciesRecord> species_;
  absl::flat_hash_map<SpeciesKey, std::uint32_t> species_index_;
  std::vector<SpeciesKey> mobile_;
  absl::flat_hash_map<SpeciesKey, std::uint32_t> mobile_index_;
  std::vector<SpeciesKey> affected_;

  std::vector<ReactionEntry> entries_;
  std::vector<double> rates_;
  absl::flat_hash_map<ReactionKey, std::uint32_t> entry_index_;
};

}  // namespace scd
