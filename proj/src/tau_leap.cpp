#include "scd/tau_leap.hpp"

#include <algorithm>
#include <cmath>

#include "scd/errors.hpp"
#include "scd/ssa.hpp"

namespace scd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void LeapControl::validate() const {
  if (n_cr < 1) throw ConfigError("n_cr must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(n_mult > 0.0)) throw ConfigError("n_mult must be positive");
  if (fallback_steps < 1) throw ConfigError("fallback_steps must be at least 1");
  if (max_halvings < 0) throw ConfigError("max_halvings must be non-negative");
}

double g_factor(std::int32_t o2, std::int32_t o3, std::int64_t population) {
  if (o3 > 0) {
    if (population <= 1) throw InvariantViolation("like-pair channel in J with population <= 1");
    return 2.0 + 1.0 / double(population - 1);
  }
  return o2 > 0 ? 2.0 : 1.0;
}

double species_tau_bound(std::int64_t population, double g, double mu, double sigma2, double epsilon) {
  const double bound = std::max(epsilon * double(population) / g, 1.0);
  double tau = kInf;
  if (mu != 0.0) tau = std::min(tau, bound / std::fabs(mu));
  if (sigma2 > 0.0) tau = std::min(tau, bound * bound / sigma2);
  return tau;
}

LeapState::LeapState(LeapControl control) : control_(control) {}

bool LeapState::classify(const ReactionEntry& e, const ReactionNetwork& net) const {
  switch (e.order) {
    case 0: return false;
    case 1: return net.population(e.a) > control_.n_cr;
    default:
      if (e.like_pair) return net.population(e.a) >= control_.n_cr + 2;
      return std::min(net.population(e.a), net.population(e.b)) > control_.n_cr;
  }
}

const NoncriticalSpecies* LeapState::find_species(SpeciesKey key) const {
  const auto it = p_index_.find(key);
  return it == p_index_.end() ? nullptr : &p_[it->second];
}

const NoncriticalReaction* LeapState::find_reaction(const ReactionKey& key) const {
  const auto it = j_index_.find(key);
  return it == j_index_.end() ? nullptr : &j_[it->second];
}

NoncriticalSpecies& LeapState::species_slot(SpeciesKey key) {
  const auto [it, fresh] = p_index_.try_emplace(key, static_cast<std::uint32_t>(p_.size()));
  if (fresh) {
    p_.emplace_back();
    p_.back().key = key;
  }
  return p_[it->second];
}

void LeapState::erase_species(SpeciesKey key) {
  const auto it = p_index_.find(key);
  const std::uint32_t idx = it->second;
  p_index_.erase(it);
  if (idx + 1 != p_.size()) {
    p_[idx] = p_.back();
    p_index_[p_[idx].key] = idx;
  }
  p_.pop_back();
}

void LeapState::contribute(SpeciesKey s, int nu, double rate, int order_slot, int count_delta) {
  NoncriticalSpecies& p = species_slot(s);
  p.mu += double(nu) * rate;
  p.sigma2 += double(nu * nu) * rate;
  std::int32_t& o = order_slot == 1 ? p.o1 : order_slot == 2 ? p.o2 : p.o3;
  o += count_delta;
  if (p.o1 == 0 && p.o2 == 0 && p.o3 == 0) erase_species(s);
}

std::int64_t LeapState::x_min_of(const ReactionEntry& e, const ReactionNetwork& net) const {
  if (e.order == 2 && !e.like_pair) return std::min(net.population(e.a), net.population(e.b));
  return net.population(e.a);
}

void LeapState::add_reaction(const ReactionEntry& e, double rate, const ReactionNetwork& net) {
  NoncriticalReaction r;
  r.key = e.key;
  r.rate = rate;
  r.a = e.a;
  r.b = e.b;
  r.order = e.order;
  r.like_pair = e.like_pair;
  r.x_min = x_min_of(e, net);
  j_index_.emplace(e.key, static_cast<std::uint32_t>(j_.size()));
  j_.push_back(r);
  if (e.order == 1) {
    contribute(e.a, -1, rate, 1, +1);
  } else if (e.like_pair) {
    contribute(e.a, -2, rate, 3, +1);
  } else {
    contribute(e.a, -1, rate, 2, +1);
    contribute(e.b, -1, rate, 2, +1);
  }
}

void LeapState::remove_reaction(const ReactionKey& key) {
  const auto it = j_index_.find(key);
  const std::uint32_t idx = it->second;
  const NoncriticalReaction r = j_[idx];
  j_index_.erase(it);
  if (idx + 1 != j_.size()) {
    j_[idx] = j_.back();
    j_index_[j_[idx].key] = idx;
  }
  j_.pop_back();
  if (r.order == 1) {
    contribute(r.a, -1, -r.rate, 1, -1);
  } else if (r.like_pair) {
    contribute(r.a, -2, -r.rate, 3, -1);
  } else {
    contribute(r.a, -1, -r.rate, 2, -1);
    contribute(r.b, -1, -r.rate, 2, -1);
  }
}

void LeapState::sync(ReactionNetwork& net, const SweepReport& report) {
  if (report.full) {
    rebuild(net);
    return;
  }
  for (const auto& removed : report.removed) {
    if (j_index_.contains(removed.entry.key)) remove_reaction(removed.entry.key);
  }
  for (const ReactionKey& key : report.touched) {
    const auto idx = net.find_reaction(key);
    if (!idx) continue;
    const ReactionEntry& e = net.entries()[*idx];
    const double rate = net.rates()[*idx];
    const bool nc = classify(e, net);
    const auto it = j_index_.find(key);
    if (it != j_index_.end()) {
      if (nc) {
        NoncriticalReaction& r = j_[it->second];
        const double delta = rate - r.rate;
        r.rate = rate;
        r.x_min = x_min_of(e, net);
        if (delta != 0.0) {
          if (e.order == 1) {
            contribute(e.a, -1, delta, 1, 0);
          } else if (e.like_pair) {
            contribute(e.a, -2, delta, 3, 0);
          } else {
            contribute(e.a, -1, delta, 2, 0);
            contribute(e.b, -1, delta, 2, 0);
          }
        }
      } else {
        remove_reaction(key);
      }
    } else if (nc) {
      add_reaction(e, rate, net);
    }
    net.set_noncritical(*idx, nc);
  }
}

void LeapState::rebuild(ReactionNetwork& net) {
  p_.clear();
  p_index_.clear();
  j_.clear();
  j_index_.clear();
  const auto entries = net.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const bool nc = classify(entries[i], net);
    net.set_noncritical(i, nc);
    if (nc) add_reaction(entries[i], net.rates()[i], net);
  }
}

void LeapState::restore(std::vector<NoncriticalSpecies> p, std::vector<NoncriticalReaction> j) {
  p_ = std::move(p);
  j_ = std::move(j);
  p_index_.clear();
  j_index_.clear();
  for (std::size_t i = 0; i < p_.size(); ++i) p_index_.emplace(p_[i].key, static_cast<std::uint32_t>(i));
  for (std::size_t i = 0; i < j_.size(); ++i) j_index_.emplace(j_[i].key, static_cast<std::uint32_t>(i));
}

double LeapState::tau_prime(const ReactionNetwork& net) const {
  double tau = kInf;
  for (const auto& p : p_) {
    const std::int64_t x = net.population(p.key);
    const double g = g_factor(p.o2, p.o3, x);
    tau = std::min(tau, species_tau_bound(x, g, p.mu.value(), p.sigma2.value(), control_.epsilon));
  }
  return tau;
}

double LeapState::critical_rate(const ReactionNetwork& net) const {
  CompensatedSum sum;
  const auto entries = net.entries();
  const auto rates = net.rates();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].noncritical) sum += rates[i];
  }
  return std::max(sum.value(), 0.0);
}

LeapOutcome LeapState::attempt(ReactionNetwork& net, RngStream& rng, double time_left) {
  LeapOutcome out;
  const double r_tot = net.total_rate();
  if (!(r_tot > 0.0)) {
    out.status = LeapStatus::Frozen;
    return out;
  }
  if (j_.empty()) {
    out.status = LeapStatus::NoLeap;
    return out;
  }
  double tau_p = tau_prime(net);
  out.tau_prime = tau_p;
  if (tau_p < control_.n_mult / r_tot) {
    out.status = LeapStatus::Fallback;
    return out;
  }

  // The critical waiting time and the critical channel are drawn once per
  // attempt, from the pre-leap rates, and reused across halvings.
  const auto entries = net.entries();
  const auto rates = net.rates();
  const double r_cr = critical_rate(net);
  double tau_pp = kInf;
  std::optional<std::size_t> crit;
  if (r_cr > 0.0) {
    tau_pp = sample_dt(r_cr, rng);
    const double threshold = rng.uniform() * r_cr;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].noncritical) continue;
      cumulative += rates[i];
      if (rates[i] > 0.0) crit = i;
      if (cumulative > threshold) break;
    }
  }

  for (int h = 0; h <= control_.max_halvings; ++h) {
    const double tau = std::min({tau_p, tau_pp, time_left});
    const bool fire_critical = crit && tau_pp <= tau_p && tau_pp <= time_left;
    scratch_.clear();
    bool ok = true;
    for (auto& r : j_) {
      r.k = rng.poisson(r.rate * tau);
      if (r.k == 0) continue;
      if (r.like_pair) {
        scratch_[r.a] += 2 * r.k;
      } else {
        scratch_[r.a] += r.k;
        if (r.order == 2) scratch_[r.b] += r.k;
      }
      if (r.k > r.x_min || (r.like_pair && 2 * r.k > r.x_min)) ok = false;
    }
    if (fire_critical) {
      const ReactionEntry& c = entries[*crit];
      if (c.order >= 1) scratch_[c.a] += c.like_pair ? 2 : 1;
      if (c.order == 2 && !c.like_pair) scratch_[c.b] += 1;
    }
    if (ok) {
      for (const auto& [key, total] : scratch_) {
        const std::int64_t x = net.population(key);
        if (p_index_.contains(key) ? total >= x : total > x) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      tau_p *= 0.5;
      ++out.halvings;
      continue;
    }

    std::optional<ReactionEntry> critical_entry;
    if (fire_critical) critical_entry = entries[*crit];
    for (auto& r : j_) {
      if (r.k == 0) continue;
      const ReactionEntry& e = net.entries()[*net.find_reaction(r.key)];
      net.apply_state_change(net.products_of(e), r.k);
      out.fired.emplace_back(e, r.k);
      out.firings += r.k;
      r.k = 0;
    }
    if (critical_entry) {
      net.apply_state_change(net.products_of(*critical_entry), 1);
      out.critical = critical_entry;
    }
    out.status = LeapStatus::Leaped;
    out.tau = tau;
    return out;
  }
  for (auto& r : j_) r.k = 0;
  out.status = LeapStatus::Fallback;
  return out;
}

}  // namespace scd
