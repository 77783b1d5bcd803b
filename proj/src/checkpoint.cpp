#include "scd/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "scd/errors.hpp"

namespace scd {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'S', 'C', 'D', 'C', 'K', 'P', 'T', '\0'};

json counters_json(const Counters& c) {
  return json::array({c.loop_steps, c.direct_steps, c.leaps, c.leap_firings, c.leap_criticals, c.fallbacks,
                      c.halvings, c.insertions, c.rescales, c.resyncs, c.drift_recoveries});
}

Counters counters_from(const json& j) {
  Counters c;
  std::int64_t* fields[] = {&c.loop_steps, &c.direct_steps, &c.leaps,     &c.leap_firings,
                            &c.leap_criticals, &c.fallbacks, &c.halvings, &c.insertions,
                            &c.rescales,  &c.resyncs,      &c.drift_recoveries};
  if (j.size() != std::size(fields)) throw CheckpointError("counter block has the wrong length");
  for (std::size_t i = 0; i < std::size(fields); ++i) *fields[i] = j.at(i).get<std::int64_t>();
  return c;
}

json entry_json(const ReactionEntry& e) {
  return json::array({e.key.first, e.key.second, static_cast<int>(e.kind), e.order, e.like_pair, e.noncritical,
                      static_cast<int>(e.emitted), e.beam, e.a, e.b, e.stamp});
}

ReactionEntry entry_from(const json& j) {
  ReactionEntry e;
  e.key = {j.at(0).get<SpeciesKey>(), j.at(1).get<SpeciesKey>()};
  e.kind = static_cast<ReactionKind>(j.at(2).get<int>());
  e.order = j.at(3).get<std::uint8_t>();
  e.like_pair = j.at(4).get<bool>();
  e.noncritical = j.at(5).get<bool>();
  e.emitted = static_cast<Constituent>(j.at(6).get<int>());
  e.beam = j.at(7).get<std::uint32_t>();
  e.a = j.at(8).get<SpeciesKey>();
  e.b = j.at(9).get<SpeciesKey>();
  e.stamp = j.at(10).get<std::uint64_t>();
  return e;
}

}  // namespace

struct CheckpointCodec {
  static json encode(const Simulation& sim) {
    json doc;
    doc["config"] = to_json(*sim.cfg_);
    doc["digest"] = physics_digest(*sim.cfg_);
    doc["replica"] = sim.replica_;
    doc["until_time"] = sim.until_time_ ? json(*sim.until_time_) : json(nullptr);
    doc["until_dose"] = sim.until_dose_ ? json(*sim.until_dose_) : json(nullptr);
    doc["t"] = sim.t_;
    doc["dose"] = sim.dose_;
    doc["stop"] = static_cast<int>(sim.stop_);
    doc["ssa_budget"] = sim.ssa_budget_;
    doc["since"] = {sim.since_rescale_, sim.since_insertion_, sim.since_resync_, sim.last_checkpoint_step_};
    doc["counters"] = counters_json(sim.counters_);
    const DefectLedger& l = sim.ledger_;
    doc["ledger"] = {l.inserted, l.absorbed, l.recombined, l.thinned};
    doc["next_sample"] = sim.next_sample_;
    doc["rows"] = sim.rows_;
    doc["rng"] = sim.rng_.serialize();

    const ReactionNetwork::Snapshot snap = sim.net_.snapshot();
    json net;
    net["volume"] = snap.volume;
    net["r_tot"] = {snap.r_tot, snap.r_tot_compensation, snap.r_tot_peak};
    net["stamp"] = snap.stamp;
    json species = json::array();
    for (const auto& [c, x] : snap.species) species.push_back({c.point_defect, c.he, c.h, x});
    net["species"] = std::move(species);
    net["mobile"] = snap.mobile;
    json entries = json::array();
    for (const auto& e : snap.entries) entries.push_back(entry_json(e));
    net["entries"] = std::move(entries);
    net["rates"] = snap.rates;
    doc["network"] = std::move(net);

    json p = json::array();
    for (const auto& s : sim.leap_.species()) {
      p.push_back({s.key, s.mu.raw_sum(), s.mu.raw_compensation(), s.sigma2.raw_sum(), s.sigma2.raw_compensation(),
                   s.o1, s.o2, s.o3});
    }
    json jr = json::array();
    for (const auto& r : sim.leap_.reactions()) {
      jr.push_back({r.key.first, r.key.second, r.rate, r.a, r.b, r.order, r.like_pair, r.x_min});
    }
    doc["leap"] = {{"p", std::move(p)}, {"j", std::move(jr)}};
    return doc;
  }

  static Simulation decode(const json& doc) {
    auto cfg = std::make_shared<const RunConfig>(parse_config(doc.at("config")));
    if (physics_digest(*cfg) != doc.at("digest").get<std::string>()) {
      throw CheckpointError("configuration digest mismatch: embedded configuration was altered");
    }
    Simulation sim(cfg, doc.at("replica").get<int>(), Simulation::Resumed{});
    const json& ut = doc.at("until_time");
    const json& ud = doc.at("until_dose");
    sim.until_time_ = ut.is_null() ? std::nullopt : std::optional<double>(ut.get<double>());
    sim.until_dose_ = ud.is_null() ? std::nullopt : std::optional<double>(ud.get<double>());
    sim.t_ = doc.at("t").get<double>();
    sim.dose_ = doc.at("dose").get<double>();
    sim.stop_ = static_cast<StopReason>(doc.at("stop").get<int>());
    sim.ssa_budget_ = doc.at("ssa_budget").get<std::int64_t>();
    const json& since = doc.at("since");
    sim.since_rescale_ = since.at(0).get<std::int64_t>();
    sim.since_insertion_ = since.at(1).get<std::int64_t>();
    sim.since_resync_ = since.at(2).get<std::int64_t>();
    sim.last_checkpoint_step_ = since.at(3).get<std::int64_t>();
    sim.counters_ = counters_from(doc.at("counters"));
    const json& l = doc.at("ledger");
    sim.ledger_.inserted = l.at(0).get<std::array<std::int64_t, 4>>();
    sim.ledger_.absorbed = l.at(1).get<std::array<std::int64_t, 4>>();
    sim.ledger_.recombined = l.at(2).get<std::array<std::int64_t, 4>>();
    sim.ledger_.thinned = l.at(3).get<std::array<std::int64_t, 4>>();
    sim.next_sample_ = doc.at("next_sample").get<std::int64_t>();
    sim.rows_ = doc.at("rows").get<std::vector<std::string>>();
    sim.rng_ = RngStream::deserialize(doc.at("rng").get<std::string>());

    const json& net = doc.at("network");
    ReactionNetwork::Snapshot snap;
    snap.volume = net.at("volume").get<double>();
    snap.r_tot = net.at("r_tot").at(0).get<double>();
    snap.r_tot_compensation = net.at("r_tot").at(1).get<double>();
    snap.r_tot_peak = net.at("r_tot").at(2).get<double>();
    snap.stamp = net.at("stamp").get<std::uint64_t>();
    for (const json& s : net.at("species")) {
      snap.species.emplace_back(Composition{s.at(0).get<std::int32_t>(), s.at(1).get<std::int32_t>(),
                                            s.at(2).get<std::int32_t>()},
                                s.at(3).get<std::int64_t>());
    }
    snap.mobile = net.at("mobile").get<std::vector<SpeciesKey>>();
    for (const json& e : net.at("entries")) snap.entries.push_back(entry_from(e));
    snap.rates = net.at("rates").get<std::vector<double>>();
    sim.net_.restore(snap);

    std::vector<NoncriticalSpecies> p;
    for (const json& s : doc.at("leap").at("p")) {
      NoncriticalSpecies ns;
      ns.key = s.at(0).get<SpeciesKey>();
      ns.mu = CompensatedSum::from_raw(s.at(1).get<double>(), s.at(2).get<double>());
      ns.sigma2 = CompensatedSum::from_raw(s.at(3).get<double>(), s.at(4).get<double>());
      ns.o1 = s.at(5).get<std::int32_t>();
      ns.o2 = s.at(6).get<std::int32_t>();
      ns.o3 = s.at(7).get<std::int32_t>();
      p.push_back(ns);
    }
    std::vector<NoncriticalReaction> j;
    for (const json& r : doc.at("leap").at("j")) {
      NoncriticalReaction nr;
      nr.key = {r.at(0).get<SpeciesKey>(), r.at(1).get<SpeciesKey>()};
      nr.rate = r.at(2).get<double>();
      nr.a = r.at(3).get<SpeciesKey>();
      nr.b = r.at(4).get<SpeciesKey>();
      nr.order = r.at(5).get<std::uint8_t>();
      nr.like_pair = r.at(6).get<bool>();
      nr.x_min = r.at(7).get<std::int64_t>();
      j.push_back(nr);
    }
    sim.leap_.restore(std::move(p), std::move(j));
    return sim;
  }
};

std::vector<std::uint8_t> encode_checkpoint(const Simulation& sim) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(kCheckpointVersion >> (8 * i)));
  const std::vector<std::uint8_t> body = json::to_cbor(CheckpointCodec::encode(sim));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Simulation decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size() + 4 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= std::uint32_t(bytes[kMagic.size() + i]) << (8 * i);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  try {
    const json doc = json::from_cbor(bytes.begin() + kMagic.size() + 4, bytes.end());
    return CheckpointCodec::decode(doc);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint carries an invalid configuration: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Simulation& sim) {
  const auto bytes = encode_checkpoint(sim);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("short write on checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Simulation read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace scd
