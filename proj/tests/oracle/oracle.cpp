#include "oracle.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace scd::oracle {

namespace {

bool opposite(const Composition& a, const Composition& b) {
  return (a.point_defect > 0 && b.point_defect < 0) || (a.point_defect < 0 && b.point_defect > 0);
}

}  // namespace

Table build_table(const State& state, const Model& model, double volume) {
  const MaterialsCatalog& cat = model.materials;
  const double kt = kBoltzmann_eV_per_K * cat.temperature_K;
  Table table;
  for (std::size_t i = 0; i < model.source.beams.size(); ++i) {
    Channel ch;
    ch.kind = "insertion";
    ch.beam = i;
    ch.rate = model.source.beams[i].event_rate_per_m3_s * volume;
    ch.products.produced = model.source.beams[i].inserts;
    table[pair_key(beam_dummy(i), dummy::kInsertion)] = ch;
  }

  std::vector<SpeciesRecord> recs;
  for (const auto& [c, x] : state) {
    if (x > 0) recs.push_back(make_record(c, x, cat));
  }
  for (const auto& r : recs) {
    const double x = double(r.population);
    if (r.diffusivity > 0.0) {
      Channel ch;
      ch.order = 1;
      ch.kind = "sink";
      ch.a = r.composition;
      ch.rate = x * r.diffusivity * model.sinks.total_strength(r.composition);
      ch.products.consumed = {{r.composition, 1}};
      table[pair_key(r.key, dummy::kSink)] = ch;
    }
    for (Constituent k : kAllConstituents) {
      if (!cat.emits(k)) continue;
      const auto prods = emission_products(r.composition, k);
      if (!prods) continue;
      const auto m = cat.mobile.find(monomer_of(k));
      const double em = m == cat.mobile.end() ? 0.0 : m->second.migration_eV;
      Channel ch;
      ch.order = 1;
      ch.kind = "emission";
      ch.a = r.composition;
      ch.emitted = k;
      ch.rate = x * cat.attempt_frequency_per_s * std::exp(-(cat.binding_energy(r.composition, k) + em) / kt);
      ch.products = *prods;
      table[pair_key(r.key, emission_dummy(k))] = ch;
    }
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t j = i; j < recs.size(); ++j) {
      const SpeciesRecord& a = recs[i];
      const SpeciesRecord& b = recs[j];
      if (a.diffusivity <= 0.0 && b.diffusivity <= 0.0) continue;
      const bool like = i == j;
      if (like && a.population < 2) continue;
      const auto prods = binary_products(a.composition, b.composition);
      if (!prods) continue;
      const double rcap = cat.capture_radius_override_m ? *cat.capture_radius_override_m
                                                        : a.radius + b.radius + cat.capture_offset_m;
      const double k = 4.0 * kPi * rcap * (a.diffusivity + b.diffusivity);
      const double pairs = like ? double(a.population) * double(a.population - 1)
                                : double(a.population) * double(b.population);
      Channel ch;
      ch.order = 2;
      ch.like_pair = like;
      ch.kind = opposite(a.composition, b.composition) ? "annihilation" : "aggregation";
      ch.a = a.composition;
      ch.b = b.composition;
      ch.rate = k * pairs / volume;
      ch.products = *prods;
      table[pair_key(a.key, b.key)] = ch;
    }
  }
  return table;
}

void apply(State& state, const ReactionProducts& products, std::int64_t multiplicity) {
  for (const auto& t : products.consumed) {
    auto it = state.find(t.composition);
    if (it == state.end() || it->second < t.count * multiplicity) throw std::logic_error("negative population");
    it->second -= t.count * multiplicity;
    if (it->second == 0) state.erase(it);
  }
  for (const auto& t : products.produced) state[t.composition] += t.count * multiplicity;
}

std::optional<Outcome> reference_scd_step(State& state, const Model& model, double volume, RngStream& rng) {
  const Table table = build_table(state, model, volume);
  double total = 0.0;
  for (const auto& [k, ch] : table) total += ch.rate;
  if (!(total > 0.0)) return std::nullopt;
  Outcome out;
  out.dt = std::log(1.0 / rng.uniform_open()) / total;
  const double threshold = rng.uniform() * total;
  double cumulative = 0.0;
  const Channel* chosen = nullptr;
  for (const auto& [k, ch] : table) {
    cumulative += ch.rate;
    if (ch.rate > 0.0) {
      chosen = &ch;
      out.key = k;
    }
    if (cumulative > threshold) break;
  }
  apply(state, chosen->products);
  return out;
}

Totals recompute_totals(std::span<const double> rates, std::span<const bool> noncritical) {
  Totals t;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    t.r_tot += rates[i];
    if (noncritical.empty() || !noncritical[i]) t.r_cr += rates[i];
  }
  return t;
}

ScratchLeap rebuild_noncritical(const Table& table, const State& state, std::int64_t n_cr) {
  auto pop = [&](const Composition& c) {
    const auto it = state.find(c);
    return it == state.end() ? std::int64_t{0} : it->second;
  };
  ScratchLeap out;
  for (const auto& [key, ch] : table) {
    bool nc = false;
    if (ch.order == 1) nc = pop(ch.a) > n_cr;
    if (ch.order == 2) nc = ch.like_pair ? pop(ch.a) >= n_cr + 2 : std::min(pop(ch.a), pop(ch.b)) > n_cr;
    if (!nc) continue;
    out.j[key] = ch.rate;
    if (ch.order == 1) {
      auto& s = out.p[canonical_key(ch.a)];
      s.mu -= ch.rate;
      s.sigma2 += ch.rate;
      ++s.o1;
    } else if (ch.like_pair) {
      auto& s = out.p[canonical_key(ch.a)];
      s.mu -= 2.0 * ch.rate;
      s.sigma2 += 4.0 * ch.rate;
      ++s.o3;
    } else {
      for (const Composition& c : {ch.a, ch.b}) {
        auto& s = out.p[canonical_key(c)];
        s.mu -= ch.rate;
        s.sigma2 += ch.rate;
        ++s.o2;
      }
    }
  }
  return out;
}

// --- dense CME ----------------------------------------------------------------

namespace {

Eigen::VectorXd propagate(const Eigen::MatrixXd& q, const Eigen::VectorXd& p0, double t, double tol) {
  if (t == 0.0) return p0;
  int steps = 1;
  Eigen::VectorXd prev = (q * t).exp() * p0;
  for (int round = 0; round < 12; ++round) {
    steps *= 2;
    const Eigen::MatrixXd step = (q * (t / steps)).exp();
    Eigen::VectorXd p = p0;
    for (int i = 0; i < steps; ++i) p = step * p;
    const double diff = (p - prev).cwiseAbs().maxCoeff();
    prev = p;
    if (diff <= tol) break;
  }
  return prev;
}

}  // namespace

DenseCME::DenseCME(const Model& model, double volume, const State& initial, std::size_t max_states) {
  State start;
  for (const auto& [c, x] : initial) {
    if (x > 0) start[c] = x;
  }
  states_.push_back(start);
  index_[start] = 0;
  std::vector<std::tuple<long, long, double>> transitions;
  for (std::size_t cur = 0; cur < states_.size(); ++cur) {
    const State s = states_[cur];
    for (const auto& [key, ch] : build_table(s, model, volume)) {
      if (!(ch.rate > 0.0)) continue;
      State next = s;
      apply(next, ch.products);
      auto [it, fresh] = index_.try_emplace(next, static_cast<long>(states_.size()));
      if (fresh) {
        if (states_.size() >= max_states) throw std::length_error("CME state space exceeds the configured bound");
        states_.push_back(next);
      }
      transitions.emplace_back(static_cast<long>(cur), it->second, ch.rate);
    }
  }
  const auto n = static_cast<Eigen::Index>(states_.size());
  q_ = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [from, to, rate] : transitions) {
    q_(to, from) += rate;
    q_(from, from) -= rate;
  }
}

long DenseCME::index_of(const State& s) const {
  const auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd DenseCME::integrate(double t, double tol) const {
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(q_.rows());
  p0(0) = 1.0;
  return propagate(q_, p0, t, tol);
}

std::size_t toy_index(const std::vector<int>& caps, const std::vector<int>& state) {
  std::size_t idx = 0;
  for (std::size_t d = 0; d < caps.size(); ++d) idx = idx * std::size_t(caps[d] + 1) + std::size_t(state[d]);
  return idx;
}

Eigen::VectorXd integrate_toy(const std::vector<int>& caps, const std::vector<ToyReaction>& reactions,
                              const std::vector<int>& initial, double t, bool clip_at_caps, double tol) {
  std::size_t n = 1;
  for (int c : caps) n *= std::size_t(c + 1);
  if (n > 10000) throw std::length_error("toy state space exceeds 10^4 states");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  std::vector<int> s(caps.size(), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t rem = flat;
    for (std::size_t d = caps.size(); d-- > 0;) {
      s[d] = int(rem % std::size_t(caps[d] + 1));
      rem /= std::size_t(caps[d] + 1);
    }
    for (const auto& r : reactions) {
      const double a = r.propensity(s);
      if (!(a > 0.0)) continue;
      std::vector<int> next = s;
      bool inside = true;
      for (std::size_t d = 0; d < caps.size(); ++d) {
        next[d] += r.change[d];
        if (next[d] < 0 || next[d] > caps[d]) inside = false;
      }
      if (!inside) {
        if (clip_at_caps) continue;
        throw std::length_error("toy reaction leaves the state box");
      }
      const auto to = Eigen::Index(toy_index(caps, next));
      q(to, Eigen::Index(flat)) += a;
      q(Eigen::Index(flat), Eigen::Index(flat)) -= a;
    }
  }
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(Eigen::Index(n));
  p0(Eigen::Index(toy_index(caps, initial))) = 1.0;
  return propagate(q, p0, t, tol);
}

}  // namespace scd::oracle
