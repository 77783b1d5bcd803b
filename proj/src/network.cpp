#include "scd/network.hpp"

#include <algorithm>
#include <cmath>

#include "scd/errors.hpp"

namespace scd {

std::string_view to_string(ReactionKind kind) {
  switch (kind) {
    case ReactionKind::Insertion: return "insertion";
    case ReactionKind::Sink: return "sink";
    case ReactionKind::Emission: return "emission";
    case ReactionKind::Annihilation: return "annihilation";
    case ReactionKind::Aggregation: return "aggregation";
  }
  return "?";
}

std::int64_t ReactionEntry::consumption_of(SpeciesKey species) const {
  if (order == 0) return 0;
  if (like_pair) return species == a ? 2 : 0;
  return (species == a ? 1 : 0) + (order == 2 && species == b ? 1 : 0);
}

ReactionNetwork::ReactionNetwork(const Model& model, double volume_m3) : model_(&model), volume_(volume_m3) {
  if (!(volume_m3 > 0.0)) throw ConfigError("volume must be positive");
  const auto& beams = model.source.beams;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    ReactionEntry e;
    e.key = pair_key(beam_dummy(i), dummy::kInsertion);
    e.kind = ReactionKind::Insertion;
    e.order = 0;
    e.beam = static_cast<std::uint32_t>(i);
    insert_entry(e, insertion_rate(beams[i], volume_).rate);
  }
}

// --- species ---------------------------------------------------------------

const SpeciesRecord* ReactionNetwork::find_species(SpeciesKey key) const {
  const auto it = species_index_.find(key);
  return it == species_index_.end() ? nullptr : &species_[it->second];
}

SpeciesRecord* ReactionNetwork::find_species_mut(SpeciesKey key) {
  const auto it = species_index_.find(key);
  return it == species_index_.end() ? nullptr : &species_[it->second];
}

std::int64_t ReactionNetwork::population(SpeciesKey key) const {
  const auto* r = find_species(key);
  return r ? r->population : 0;
}

SpeciesRecord& ReactionNetwork::ensure_species(const Composition& c) {
  const SpeciesKey key = canonical_key(c);
  if (auto* r = find_species_mut(key)) return *r;
  check_limits(c, model_->materials.limits);
  SpeciesRecord rec = make_record(c, 0, model_->materials);
  rec.f2 = true;
  species_index_.emplace(key, static_cast<std::uint32_t>(species_.size()));
  species_.push_back(rec);
  if (rec.mobile()) {
    mobile_index_.emplace(key, static_cast<std::uint32_t>(mobile_.size()));
    mobile_.push_back(key);
  }
  return species_.back();
}

void ReactionNetwork::erase_species(SpeciesKey key) {
  const auto it = species_index_.find(key);
  if (it == species_index_.end()) return;
  const std::uint32_t idx = it->second;
  species_index_.erase(it);
  if (idx + 1 != species_.size()) {
    species_[idx] = species_.back();
    species_index_[species_[idx].key] = idx;
  }
  species_.pop_back();
  if (const auto m = mobile_index_.find(key); m != mobile_index_.end()) {
    const std::uint32_t mi = m->second;
    mobile_index_.erase(m);
    if (mi + 1 != mobile_.size()) {
      mobile_[mi] = mobile_.back();
      mobile_index_[mobile_[mi]] = mi;
    }
    mobile_.pop_back();
  }
}

void ReactionNetwork::mark_affected(SpeciesRecord& rec) {
  if (rec.in_affected) return;
  rec.in_affected = true;
  affected_.push_back(rec.key);
}

void ReactionNetwork::adjust_population(const Composition& c, std::int64_t delta) {
  if (delta == 0) return;
  SpeciesRecord* rec = delta > 0 ? &ensure_species(c) : find_species_mut(canonical_key(c));
  if (rec == nullptr || rec->population + delta < 0) {
    throw InvariantViolation("population of " + to_string(c) + " would become negative (" +
                             std::to_string(rec ? rec->population : 0) + " + " + std::to_string(delta) + ")");
  }
  rec->population += delta;
  rec->f1 += delta;
  mark_affected(*rec);
}

void ReactionNetwork::apply_state_change(const ReactionProducts& products, std::int64_t multiplicity) {
  if (multiplicity <= 0) return;
  for (const auto& t : products.consumed) adjust_population(t.composition, -t.count * multiplicity);
  for (const auto& t : products.produced) adjust_population(t.composition, t.count * multiplicity);
}

// --- reactions -------------------------------------------------------------

std::optional<std::size_t> ReactionNetwork::find_reaction(const ReactionKey& key) const {
  const auto it = entry_index_.find(key);
  if (it == entry_index_.end()) return std::nullopt;
  return it->second;
}

ReactionProducts ReactionNetwork::products_of(const ReactionEntry& e) const {
  switch (e.kind) {
    case ReactionKind::Insertion:
      return {{}, model_->source.beams[e.beam].inserts};
    case ReactionKind::Sink:
      return sink_products(composition_from_key(e.a));
    case ReactionKind::Emission:
      return *emission_products(composition_from_key(e.a), e.emitted);
    case ReactionKind::Annihilation:
    case ReactionKind::Aggregation:
      return *binary_products(composition_from_key(e.a), composition_from_key(e.b));
  }
  return {};
}

void ReactionNetwork::add_total(double delta) {
  r_tot_.add(delta);
  r_tot_peak_ = std::max(r_tot_peak_, total_rate());
}

std::size_t ReactionNetwork::insert_entry(const ReactionEntry& e, double rate) {
  const auto idx = static_cast<std::uint32_t>(entries_.size());
  entry_index_.emplace(e.key, idx);
  entries_.push_back(e);
  rates_.push_back(rate);
  add_total(rate);
  return idx;
}

void ReactionNetwork::remove_entry(std::size_t index, SweepReport& report) {
  report.removed.push_back({entries_[index], rates_[index]});
  add_total(-rates_[index]);
  entry_index_.erase(entries_[index].key);
  if (index + 1 != entries_.size()) {
    entries_[index] = entries_.back();
    rates_[index] = rates_.back();
    entry_index_[entries_[index].key] = static_cast<std::uint32_t>(index);
  }
  entries_.pop_back();
  rates_.pop_back();
}

double ReactionNetwork::fresh_rate(const ReactionEntry& e) const {
  const auto& cat = model_->materials;
  switch (e.kind) {
    case ReactionKind::Insertion:
      return insertion_rate(model_->source.beams[e.beam], volume_).rate;
    case ReactionKind::Sink:
      return sink_absorption_rate(*find_species(e.a), model_->sinks)->rate;
    case ReactionKind::Emission:
      return emission_rate(*find_species(e.a), e.emitted, cat).rate;
    case ReactionKind::Annihilation:
    case ReactionKind::Aggregation:
      return binary_rate(*find_species(e.a), *find_species(e.b), volume_, cat)->rate;
  }
  return 0.0;
}

std::optional<ReactionEntry> ReactionNetwork::make_binary_entry(const SpeciesRecord& a,
                                                                const SpeciesRecord& b) const {
  if (!a.mobile() && !b.mobile()) return std::nullopt;
  const bool like = a.key == b.key;
  if (like && a.population < 2) return std::nullopt;
  const Composition& ca = a.composition;
  const Composition& cb = b.composition;
  if (!binary_products(ca, cb)) return std::nullopt;
  ReactionEntry e;
  e.key = pair_key(a.key, b.key);
  e.order = 2;
  e.like_pair = like;
  e.kind = (ca.is_vacancy_type() && cb.is_interstitial_type()) || (ca.is_interstitial_type() && cb.is_vacancy_type())
               ? ReactionKind::Annihilation
               : ReactionKind::Aggregation;
  e.a = e.key.first;
  e.b = e.key.second;
  e.stamp = sweep_stamp_;
  return e;
}

// --- sweep -----------------------------------------------------------------

void ReactionNetwork::remove_channels_of(const SpeciesRecord& rec, SweepReport& report) {
  auto drop = [&](const ReactionKey& key) {
    if (const auto idx = find_reaction(key)) remove_entry(*idx, report);
  };
  drop(pair_key(rec.key, dummy::kSink));
  for (Constituent c : kAllConstituents) drop(pair_key(rec.key, emission_dummy(c)));
  if (rec.mobile()) {
    for (const auto& s : species_) drop(pair_key(rec.key, s.key));
  } else {
    for (SpeciesKey m : mobile_) drop(pair_key(rec.key, m));
  }
}

void ReactionNetwork::purge_extinct(SweepReport& report) {
  for (SpeciesKey key : affected_) {
    const SpeciesRecord* rec = find_species(key);
    if (rec == nullptr || rec->population != 0) continue;
    const SpeciesRecord copy = *rec;
    remove_channels_of(copy, report);
    erase_species(key);
  }
}

void ReactionNetwork::create_first_order(const SpeciesRecord& s, SweepReport& report) {
  const auto& cat = model_->materials;
  if (auto r = sink_absorption_rate(s, model_->sinks)) {
    ReactionEntry e;
    e.key = pair_key(s.key, dummy::kSink);
    e.kind = ReactionKind::Sink;
    e.order = 1;
    e.a = s.key;
    e.stamp = sweep_stamp_;
    insert_entry(e, r->rate);
    report.touched.push_back(e.key);
    ++report.inserted;
  }
  for (Constituent c : kAllConstituents) {
    if (std::isnan(s.binding_eV[static_cast<int>(c)])) continue;
    ReactionEntry e;
    e.key = pair_key(s.key, emission_dummy(c));
    e.kind = ReactionKind::Emission;
    e.emitted = c;
    e.order = 1;
    e.a = s.key;
    e.stamp = sweep_stamp_;
    insert_entry(e, emission_rate(s, c, cat).rate);
    report.touched.push_back(e.key);
    ++report.inserted;
  }
}

void ReactionNetwork::update_first_order(const SpeciesRecord& s, SweepReport& report) {
  const std::int64_t f = s.f1;
  const double x0 = double(s.population - f);
  auto update = [&](const ReactionKey& key) {
    const auto idx = find_reaction(key);
    if (!idx) return;
    ReactionEntry& e = entries_[*idx];
    if (e.stamp == sweep_stamp_) return;
    e.stamp = sweep_stamp_;
    const double r0 = rates_[*idx];
    rates_[*idx] = r0 * (1.0 + double(f) / x0);
    add_total(r0 * double(f) / x0);
    report.touched.push_back(key);
    ++report.updated;
  };
  if (s.mobile()) update(pair_key(s.key, dummy::kSink));
  for (Constituent c : kAllConstituents) {
    if (!std::isnan(s.binding_eV[static_cast<int>(c)])) update(pair_key(s.key, emission_dummy(c)));
  }
}

void ReactionNetwork::visit_pair(const SpeciesRecord& a, const SpeciesRecord& b, SweepReport& report) {
  const ReactionKey key = pair_key(a.key, b.key);
  const auto idx = find_reaction(key);
  if (!idx) {
    if (a.f2 || b.f2 || a.f1 != 0 || b.f1 != 0) {
      if (auto e = make_binary_entry(a, b)) {
        insert_entry(*e, binary_rate(a, b, volume_, model_->materials)->rate);
        report.touched.push_back(key);
        ++report.inserted;
      }
    }
    return;
  }
  ReactionEntry& e = entries_[*idx];
  if (e.stamp == sweep_stamp_) return;
  e.stamp = sweep_stamp_;
  const double r0 = rates_[*idx];
  if (e.like_pair) {
    if (a.population < 2) {
      remove_entry(*idx, report);
      return;
    }
    const std::int64_t f = a.f1;
    if (f == 0) return;
    const double x0 = double(a.population - f);
    const double ff = double(f);
    rates_[*idx] = r0 * (1.0 + ff / x0) * (1.0 + ff / (x0 - 1.0));
    add_total(r0 * (ff / x0 + ff / (x0 - 1.0) + ff * ff / (x0 * (x0 - 1.0))));
  } else {
    const SpeciesRecord& ra = a.key == e.a ? a : b;
    const SpeciesRecord& rb = a.key == e.a ? b : a;
    const std::int64_t fa = ra.f1;
    const std::int64_t fb = rb.f1;
    if (fa == 0 && fb == 0) return;
    const double qa = double(fa) / double(ra.population - fa);
    const double qb = double(fb) / double(rb.population - fb);
    rates_[*idx] = r0 * (1.0 + qa) * (1.0 + qb);
    add_total(r0 * (qa + qb + qa * qb));
  }
  report.touched.push_back(key);
  ++report.updated;
}

void ReactionNetwork::finish_sweep() {
  for (SpeciesKey key : affected_) {
    if (auto* r = find_species_mut(key)) {
      r->f1 = 0;
      r->f2 = false;
      r->in_affected = false;
    }
  }
  affected_.clear();
}

SweepReport ReactionNetwork::sweep() {
  SweepReport report;
  ++sweep_stamp_;
  purge_extinct(report);

  // Flagged species: first-order channels and pairs with every mobile
  // species; unflagged species only pair with the affected array.
  for (const SpeciesRecord& s1 : species_) {
    const bool flagged = s1.f1 != 0 || s1.f2;
    if (flagged) {
      if (s1.f2) {
        create_first_order(s1, report);
      } else {
        update_first_order(s1, report);
      }
      for (SpeciesKey mk : mobile_) {
        const SpeciesRecord& s2 = species_[species_index_.find(mk)->second];
        if (s1.key >= s2.key) visit_pair(s1, s2, report);
      }
    } else {
      for (SpeciesKey ak : affected_) {
        const SpeciesRecord* s2 = find_species(ak);
        if (s2 == nullptr) continue;
        if ((s1.key > s2->key && s1.mobile()) || (!s1.mobile() && s2->mobile())) visit_pair(s1, *s2, report);
      }
    }
  }

  // Pairs within the affected array.
  for (std::size_t i = 0; i < affected_.size(); ++i) {
    const SpeciesRecord* a = find_species(affected_[i]);
    if (a == nullptr) continue;
    for (std::size_t j = i; j < affected_.size(); ++j) {
      const SpeciesRecord* b = find_species(affected_[j]);
      if (b == nullptr || (!a->mobile() && !b->mobile())) continue;
      visit_pair(*a, *b, report);
    }
  }

  finish_sweep();
  return report;
}

SweepReport ReactionNetwork::rebuild() {
  SweepReport report;
  ++sweep_stamp_;
  purge_extinct(report);
  finish_sweep();
  for (std::size_t i = entries_.size(); i-- > 0;) {
    if (entries_[i].kind != ReactionKind::Insertion) remove_entry(i, report);
  }
  for (const SpeciesRecord& s : species_) {
    create_first_order(s, report);
    for (SpeciesKey mk : mobile_) {
      const SpeciesRecord& m = species_[species_index_.find(mk)->second];
      if (s.mobile() && s.key < m.key) continue;
      if (auto e = make_binary_entry(s, m)) insert_entry(*e, binary_rate(s, m, volume_, model_->materials)->rate);
    }
  }
  report.touched.clear();
  report.removed.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) rates_[i] = fresh_rate(entries_[i]);
  recompute_total();
  report.full = true;
  return report;
}

SweepReport ReactionNetwork::resync() {
  for (std::size_t i = 0; i < entries_.size(); ++i) rates_[i] = fresh_rate(entries_[i]);
  recompute_total();
  SweepReport report;
  report.full = true;
  return report;
}

double ReactionNetwork::recompute_total() {
  r_tot_.reset();
  r_tot_peak_ = 0.0;
  for (double r : rates_) add_total(r);
  r_tot_peak_ = total_rate();
  return total_rate();
}

// --- checkpoint ------------------------------------------------------------

ReactionNetwork::Snapshot ReactionNetwork::snapshot() const {
  if (!affected_.empty()) throw InvariantViolation("snapshot requested between an event and its sweep");
  Snapshot s;
  s.volume = volume_;
  s.r_tot = r_tot_.raw_sum();
  s.r_tot_compensation = r_tot_.raw_compensation();
  s.r_tot_peak = r_tot_peak_;
  s.stamp = sweep_stamp_;
  s.species.reserve(species_.size());
  for (const auto& r : species_) s.species.emplace_back(r.composition, r.population);
  s.mobile = mobile_;
  s.entries = entries_;
  s.rates = rates_;
  return s;
}

void ReactionNetwork::restore(const Snapshot& snap) {
  volume_ = snap.volume;
  r_tot_ = CompensatedSum::from_raw(snap.r_tot, snap.r_tot_compensation);
  r_tot_peak_ = snap.r_tot_peak;
  sweep_stamp_ = snap.stamp;
  species_.clear();
  species_index_.clear();
  for (const auto& [c, x] : snap.species) {
    SpeciesRecord r = make_record(c, x, model_->materials);
    species_index_.emplace(r.key, static_cast<std::uint32_t>(species_.size()));
    species_.push_back(r);
  }
  mobile_ = snap.mobile;
  mobile_index_.clear();
  for (std::size_t i = 0; i < mobile_.size(); ++i) mobile_index_.emplace(mobile_[i], static_cast<std::uint32_t>(i));
  affected_.clear();
  entries_ = snap.entries;
  rates_ = snap.rates;
  if (rates_.size() != entries_.size()) throw CheckpointError("entry and rate tables differ in length");
  entry_index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entry_index_.emplace(entries_[i].key, static_cast<std::uint32_t>(i));
  }
}

}  // namespace scd
