#include "scd/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "scd/checkpoint.hpp"
#include "scd/errors.hpp"
#include "scd/ssa.hpp"

namespace scd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ClassConcentrations class_concentrations(const ReactionNetwork& net) {
  ClassConcentrations c;
  for (const SpeciesRecord& s : net.species()) {
    const double x = double(s.population);
    const Composition& k = s.composition;
    if (k.is_vacancy_type()) {
      c.v_all += x;
      if (k.he == 0 && k.h == 0) c.v += x;
      if (k.he > 0 && k.h == 0) c.v_he += x;
      if (k.he == 0 && k.h > 0) c.v_h += x;
      if (k.he > 0 && k.h > 0) c.v_he_h += x;
    } else if (k.is_interstitial_type()) {
      c.i_all += x;
    } else if (k.he > 0) {
      c.he1 += x;
    } else {
      c.h1 += x;
    }
  }
  const double v = net.volume();
  for (double* p : {&c.v_all, &c.v, &c.v_he, &c.v_h, &c.v_he_h, &c.i_all, &c.he1, &c.h1}) *p /= v;
  return c;
}

std::array<std::int64_t, 4> DefectLedger::in_volume(const ReactionNetwork& net) {
  std::array<std::int64_t, 4> out{};
  for (const SpeciesRecord& s : net.species()) {
    for (Constituent c : kAllConstituents) {
      out[static_cast<int>(c)] += s.population * count_of(s.composition, c);
    }
  }
  return out;
}

bool DefectLedger::balanced(const ReactionNetwork& net) const {
  const auto now = in_volume(net);
  for (int i = 0; i < 4; ++i) {
    if (inserted[i] != now[i] + absorbed[i] + recombined[i] + thinned[i]) return false;
  }
  return true;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Running: return "running";
    case StopReason::Time: return "time";
    case StopReason::Dose: return "dose";
    case StopReason::Frozen: return "frozen";
  }
  return "?";
}

Simulation::Simulation(std::shared_ptr<const RunConfig> cfg, int replica, Resumed)
    : cfg_(std::move(cfg)),
      replica_(replica),
      until_time_(cfg_->run.until_time_s),
      until_dose_(cfg_->run.until_dose_dpa),
      net_(cfg_->model, cfg_->volume_m3),
      leap_(cfg_->leap),
      rng_(cfg_->run.seed, static_cast<std::uint64_t>(replica)) {}

Simulation::Simulation(std::shared_ptr<const RunConfig> cfg, int replica)
    : Simulation(std::move(cfg), replica, Resumed{}) {
  for (const auto& t : cfg_->initial_species) {
    net_.adjust_population(t.composition, t.count);
    for (Constituent c : kAllConstituents) {
      ledger_.inserted[static_cast<int>(c)] += t.count * count_of(t.composition, c);
    }
  }
  if (cfg_->run.incremental_updates) {
    net_.sweep();
  } else {
    net_.rebuild();
  }
  net_.resync();
  if (cfg_->run.tau_leaping) leap_.rebuild(net_);
}

void Simulation::set_stop(std::optional<double> until_time_s, std::optional<double> until_dose_dpa) {
  until_time_ = until_time_s;
  until_dose_ = until_dose_dpa;
}

// --- sampling ----------------------------------------------------------------

std::string Simulation::csv_header() {
  return "t_s,dose_dpa,volume_m3,V_all,V,VHe,VH,VHeH,I_all,He1,H1,loop_steps,direct_steps,leaps,leap_firings";
}

double Simulation::sample_time(std::int64_t index) const {
  return cfg_->run.sample_start_s * std::pow(10.0, double(index) / double(cfg_->run.samples_per_decade));
}

void Simulation::push_row(double t) {
  const ClassConcentrations c = class_concentrations(net_);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%lld", t, dose_,
                net_.volume(), c.v_all, c.v, c.v_he, c.v_h, c.v_he_h, c.i_all, c.he1, c.h1,
                static_cast<long long>(counters_.loop_steps), static_cast<long long>(counters_.direct_steps),
                static_cast<long long>(counters_.leaps), static_cast<long long>(counters_.leap_firings));
  rows_.emplace_back(buf);
}

void Simulation::emit_samples_before(double t_limit) {
  while (sample_time(next_sample_) < t_limit) push_row(sample_time(next_sample_++));
}

void Simulation::emit_final_samples() {
  const double t_end = until_time_ && stop_ != StopReason::Dose ? *until_time_ : t_;
  emit_samples_before(t_end);
  push_row(t_end);
}

void Simulation::stop(StopReason reason) {
  stop_ = reason;
  emit_final_samples();
}

std::string Simulation::samples_csv() const {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows_) {
    out += r;
    out += '\n';
  }
  return out;
}

// --- event loop ----------------------------------------------------------------

void Simulation::notify(double dt, std::string_view mode, std::string_view kind, std::int64_t count) {
  if (on_step_) on_step_(StepRecord{t_, dt, mode, kind, count});
}

void Simulation::account(const ReactionEntry& e, std::int64_t count) {
  switch (e.kind) {
    case ReactionKind::Insertion: {
      const Beam& beam = cfg_->model.source.beams[e.beam];
      for (const auto& term : beam.inserts) {
        for (Constituent c : kAllConstituents) {
          ledger_.inserted[static_cast<int>(c)] += count * term.count * count_of(term.composition, c);
        }
      }
      dose_ += double(count) * beam.displacements_per_event * cfg_->model.materials.atomic_volume_m3 / net_.volume();
      counters_.insertions += count;
      since_insertion_ = 0;
      break;
    }
    case ReactionKind::Sink: {
      const Composition comp = composition_from_key(e.a);
      for (Constituent c : kAllConstituents) ledger_.absorbed[static_cast<int>(c)] += count * count_of(comp, c);
      break;
    }
    case ReactionKind::Annihilation: {
      const std::int64_t m = std::min(composition_from_key(e.a).point_defect_count(),
                                      composition_from_key(e.b).point_defect_count());
      ledger_.recombined[static_cast<int>(Constituent::Vacancy)] += count * m;
      ledger_.recombined[static_cast<int>(Constituent::Interstitial)] += count * m;
      break;
    }
    case ReactionKind::Emission:
    case ReactionKind::Aggregation:
      break;
  }
}

void Simulation::sweep_after_event() {
  const SweepReport rep = cfg_->run.incremental_updates ? net_.sweep() : net_.rebuild();
  if (cfg_->run.tau_leaping) leap_.sync(net_, rep);
  ++since_resync_;
}

void Simulation::maintenance() {
  const RunControl& run = cfg_->run;
  if (run.volume_rescaling && since_rescale_ >= cfg_->rescale.cooldown_events &&
      since_insertion_ >= cfg_->rescale.suppress_after_insertion_events) {
    const DiffusionLengthReport report = diffusion_lengths(net_);
    const bool fire = should_rescale(report, net_.volume(), cfg_->rescale, since_rescale_, since_insertion_);
    since_rescale_ = 0;
    if (fire) {
      const RescaleOutcome out = rescale(net_, cfg_->rescale.gamma, rng_);
      for (const auto& [comp, n] : out.removed) {
        for (Constituent c : kAllConstituents) ledger_.thinned[static_cast<int>(c)] += n * count_of(comp, c);
      }
      if (run.tau_leaping) leap_.rebuild(net_);
      ++counters_.rescales;
      since_resync_ = 0;
      notify(0.0, "rescale", "", out.units_removed);
    }
  }
  if (since_resync_ >= run.recompute_every || net_.total_needs_recompute()) {
    net_.resync();
    if (run.tau_leaping) leap_.rebuild(net_);
    ++counters_.resyncs;
    since_resync_ = 0;
  }
}

bool Simulation::do_direct_step() {
  const double horizon = until_time_ ? *until_time_ - t_ : kInf;
  const auto out = direct_step(net_, rng_, horizon);
  if (!out) {
    stop(StopReason::Frozen);
    return false;
  }
  if (!out->applied) {
    t_ = *until_time_;
    stop(StopReason::Time);
    return false;
  }
  emit_samples_before(t_ + out->dt);
  t_ += out->dt;
  if (ssa_budget_ > 0) --ssa_budget_;
  ++counters_.direct_steps;
  ++counters_.loop_steps;
  ++since_rescale_;
  ++since_insertion_;
  if (out->drift) ++counters_.drift_recoveries;
  account(out->entry, 1);
  sweep_after_event();
  notify(out->dt, "direct", to_string(out->entry.kind), 1);
  return true;
}

bool Simulation::step() {
  if (stop_ != StopReason::Running) return false;
  if (until_dose_ && dose_ >= *until_dose_) {
    stop(StopReason::Dose);
    return false;
  }
  if (until_time_ && t_ >= *until_time_) {
    stop(StopReason::Time);
    return false;
  }
  const std::int64_t every = cfg_->run.checkpoint_every_steps;
  if (every > 0 && !checkpoint_dir_.empty() && counters_.loop_steps % every == 0 &&
      counters_.loop_steps != last_checkpoint_step_) {
    last_checkpoint_step_ = counters_.loop_steps;
    write_checkpoint(checkpoint_dir_ / ("checkpoint_r" + std::to_string(replica_) + "_" +
                                        std::to_string(counters_.loop_steps) + ".bin"),
                     *this);
  }
  maintenance();

  if (cfg_->run.tau_leaping && ssa_budget_ == 0) {
    const double horizon = until_time_ ? *until_time_ - t_ : kInf;
    LeapOutcome out = leap_.attempt(net_, rng_, horizon);
    counters_.halvings += out.halvings;
    switch (out.status) {
      case LeapStatus::Leaped: {
        emit_samples_before(t_ + out.tau);
        t_ = out.tau == horizon ? *until_time_ : t_ + out.tau;
        for (const auto& [e, k] : out.fired) account(e, k);
        if (out.critical) {
          account(*out.critical, 1);
          ++counters_.leap_criticals;
        }
        ++counters_.leaps;
        ++counters_.loop_steps;
        counters_.leap_firings += out.firings;
        ++since_rescale_;
        if (!out.critical || out.critical->kind != ReactionKind::Insertion) ++since_insertion_;
        sweep_after_event();
        notify(out.tau, "leap", "", out.firings);
        if (out.critical) notify(0.0, "critical", to_string(out.critical->kind), 1);
        return true;
      }
      case LeapStatus::Frozen:
        stop(StopReason::Frozen);
        return false;
      case LeapStatus::Fallback:
        ++counters_.fallbacks;
        ssa_budget_ = cfg_->leap.fallback_steps;
        break;
      case LeapStatus::NoLeap:
        break;
    }
  }
  return do_direct_step();
}

void Simulation::run() {
  while (step()) {
  }
}

}  // namespace scd
