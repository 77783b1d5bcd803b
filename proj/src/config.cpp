#include "scd/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "scd/errors.hpp"

namespace scd {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

std::vector<StoichTerm> parse_terms(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must map species names to counts");
  std::vector<StoichTerm> out;
  for (const auto& [name, count] : obj.items()) {
    out.push_back({parse_composition(name), count.get<std::int64_t>()});
  }
  return out;
}

json terms_json(const std::vector<StoichTerm>& terms) {
  json j = json::object();
  for (const auto& t : terms) j[to_string(t.composition)] = t.count;
  return j;
}

MaterialsCatalog parse_materials(const json& m, double temperature) {
  check_keys(m,
             {"atomic_volume_m3", "attempt_frequency_per_s", "capture_offset_m", "capture_radius_m", "limits", "mobile",
              "emission", "binding_overrides"},
             "materials");
  MaterialsCatalog cat;
  cat.temperature_K = temperature;
  cat.atomic_volume_m3 = m.at("atomic_volume_m3").get<double>();
  cat.attempt_frequency_per_s = m.value("attempt_frequency_per_s", cat.attempt_frequency_per_s);
  cat.capture_offset_m = m.value("capture_offset_m", 0.0);
  if (m.contains("capture_radius_m") && !m.at("capture_radius_m").is_null()) {
    cat.capture_radius_override_m = m.at("capture_radius_m").get<double>();
  }
  if (m.contains("limits")) {
    const json& l = m.at("limits");
    check_keys(l, {"max_point_defects", "max_he", "max_h"}, "materials.limits");
    cat.limits.max_point_defects = l.value("max_point_defects", cat.limits.max_point_defects);
    cat.limits.max_he = l.value("max_he", cat.limits.max_he);
    cat.limits.max_h = l.value("max_h", cat.limits.max_h);
  }
  for (const json& e : m.value("mobile", json::array())) {
    check_keys(e, {"species", "D0_m2_per_s", "Em_eV"}, "materials.mobile[]");
    const Composition c = parse_composition(e.at("species").get<std::string>());
    if (!cat.mobile.emplace(c, MobilityParams{e.at("D0_m2_per_s").get<double>(), e.at("Em_eV").get<double>()}).second) {
      throw ConfigError("mobile species " + to_string(c) + " listed twice");
    }
  }
  if (m.contains("emission")) {
    const json& em = m.at("emission");
    if (!em.is_object()) throw ConfigError("materials.emission must be an object");
    for (const auto& [name, law] : em.items()) {
      check_keys(law, {"formation_eV", "dimer_binding_eV", "single_eV"}, "materials.emission." + name);
      BindingLaw b;
      b.formation_eV = law.at("formation_eV").get<double>();
      b.dimer_binding_eV = law.at("dimer_binding_eV").get<double>();
      if (law.contains("single_eV") && !law.at("single_eV").is_null()) b.single_eV = law.at("single_eV").get<double>();
      cat.emission_laws[static_cast<int>(parse_constituent(name))] = b;
    }
  }
  for (const json& o : m.value("binding_overrides", json::array())) {
    check_keys(o, {"species", "emits", "energy_eV"}, "materials.binding_overrides[]");
    cat.binding_overrides[{parse_composition(o.at("species").get<std::string>()),
                           parse_constituent(o.at("emits").get<std::string>())}] = o.at("energy_eV").get<double>();
  }
  return cat;
}

json materials_json(const MaterialsCatalog& cat) {
  json m;
  m["atomic_volume_m3"] = cat.atomic_volume_m3;
  m["attempt_frequency_per_s"] = cat.attempt_frequency_per_s;
  m["capture_offset_m"] = cat.capture_offset_m;
  m["capture_radius_m"] = cat.capture_radius_override_m ? json(*cat.capture_radius_override_m) : json(nullptr);
  m["limits"] = {{"max_point_defects", cat.limits.max_point_defects},
                 {"max_he", cat.limits.max_he},
                 {"max_h", cat.limits.max_h}};
  m["mobile"] = json::array();
  for (const auto& [c, p] : cat.mobile) {
    m["mobile"].push_back({{"species", to_string(c)}, {"D0_m2_per_s", p.prefactor_m2_per_s}, {"Em_eV", p.migration_eV}});
  }
  m["emission"] = json::object();
  for (Constituent c : kAllConstituents) {
    const auto& law = cat.emission_laws[static_cast<int>(c)];
    if (!law) continue;
    m["emission"][std::string(to_string(c))] = {{"formation_eV", law->formation_eV},
                                                {"dimer_binding_eV", law->dimer_binding_eV},
                                                {"single_eV", law->single_eV ? json(*law->single_eV) : json(nullptr)}};
  }
  m["binding_overrides"] = json::array();
  for (const auto& [k, e] : cat.binding_overrides) {
    m["binding_overrides"].push_back(
        {{"species", to_string(k.first)}, {"emits", std::string(to_string(k.second))}, {"energy_eV", e}});
  }
  return m;
}

SinkCatalog parse_sinks(const json& s) {
  SinkCatalog out;
  if (!s.is_array()) throw ConfigError("sinks must be an array");
  for (const json& e : s) {
    check_keys(e, {"name", "density_per_m2", "strength", "strength_overrides"}, "sinks[]");
    Sink sink;
    sink.name = e.value("name", "sink");
    sink.density_per_m2 = e.at("density_per_m2").get<double>();
    sink.strength = e.value("strength", 1.0);
    if (e.contains("strength_overrides")) {
      for (const auto& [name, z] : e.at("strength_overrides").items()) {
        sink.strength_overrides[parse_composition(name)] = z.get<double>();
      }
    }
    out.sinks.push_back(std::move(sink));
  }
  return out;
}

json sinks_json(const SinkCatalog& sinks) {
  json a = json::array();
  for (const auto& s : sinks.sinks) {
    json o = json::object();
    for (const auto& [c, z] : s.strength_overrides) o[to_string(c)] = z;
    a.push_back({{"name", s.name}, {"density_per_m2", s.density_per_m2}, {"strength", s.strength}, {"strength_overrides", o}});
  }
  return a;
}

SourceTerm parse_source(const json& s) {
  check_keys(s, {"beams"}, "source");
  SourceTerm out;
  for (const json& b : s.value("beams", json::array())) {
    check_keys(b, {"name", "event_rate_per_m3_s", "displacements_per_event", "inserts"}, "source.beams[]");
    Beam beam;
    beam.name = b.value("name", "beam");
    beam.event_rate_per_m3_s = b.at("event_rate_per_m3_s").get<double>();
    beam.displacements_per_event = b.value("displacements_per_event", 0.0);
    beam.inserts = parse_terms(b.at("inserts"), "source.beams[].inserts");
    out.beams.push_back(std::move(beam));
  }
  return out;
}

json source_json(const SourceTerm& src) {
  json beams = json::array();
  for (const auto& b : src.beams) {
    beams.push_back({{"name", b.name},
                     {"event_rate_per_m3_s", b.event_rate_per_m3_s},
                     {"displacements_per_event", b.displacements_per_event},
                     {"inserts", terms_json(b.inserts)}});
  }
  return {{"beams", beams}};
}

RunControl parse_run(const json& r) {
  check_keys(r,
             {"until_time_s", "until_dose_dpa", "seed", "replicas", "tau_leaping", "volume_rescaling",
              "incremental_updates", "sample_start_s", "samples_per_decade", "checkpoint_every_steps", "step_log",
              "recompute_every", "out_dir"},
             "run");
  RunControl rc;
  if (r.contains("until_time_s") && !r.at("until_time_s").is_null()) rc.until_time_s = r.at("until_time_s").get<double>();
  if (r.contains("until_dose_dpa") && !r.at("until_dose_dpa").is_null()) {
    rc.until_dose_dpa = r.at("until_dose_dpa").get<double>();
  }
  rc.seed = r.value("seed", rc.seed);
  rc.replicas = r.value("replicas", rc.replicas);
  rc.tau_leaping = r.value("tau_leaping", rc.tau_leaping);
  rc.volume_rescaling = r.value("volume_rescaling", rc.volume_rescaling);
  rc.incremental_updates = r.value("incremental_updates", rc.incremental_updates);
  rc.sample_start_s = r.value("sample_start_s", rc.sample_start_s);
  rc.samples_per_decade = r.value("samples_per_decade", rc.samples_per_decade);
  rc.checkpoint_every_steps = r.value("checkpoint_every_steps", rc.checkpoint_every_steps);
  rc.step_log = r.value("step_log", rc.step_log);
  rc.recompute_every = r.value("recompute_every", rc.recompute_every);
  rc.out_dir = r.value("out_dir", rc.out_dir);
  return rc;
}

json run_json(const RunControl& rc) {
  return {{"until_time_s", rc.until_time_s ? json(*rc.until_time_s) : json(nullptr)},
          {"until_dose_dpa", rc.until_dose_dpa ? json(*rc.until_dose_dpa) : json(nullptr)},
          {"seed", rc.seed},
          {"replicas", rc.replicas},
          {"tau_leaping", rc.tau_leaping},
          {"volume_rescaling", rc.volume_rescaling},
          {"incremental_updates", rc.incremental_updates},
          {"sample_start_s", rc.sample_start_s},
          {"samples_per_decade", rc.samples_per_decade},
          {"checkpoint_every_steps", rc.checkpoint_every_steps},
          {"step_log", rc.step_log},
          {"recompute_every", rc.recompute_every},
          {"out_dir", rc.out_dir}};
}

LeapControl parse_leap(const json& l) {
  check_keys(l, {"n_cr", "epsilon", "n_mult", "fallback_steps", "max_halvings"}, "leap");
  LeapControl c;
  c.n_cr = l.value("n_cr", c.n_cr);
  c.epsilon = l.value("epsilon", c.epsilon);
  c.n_mult = l.value("n_mult", c.n_mult);
  c.fallback_steps = l.value("fallback_steps", c.fallback_steps);
  c.max_halvings = l.value("max_halvings", c.max_halvings);
  return c;
}

RescaleConfig parse_rescale(const json& r) {
  check_keys(r, {"gamma", "margin", "cooldown_events", "suppress_after_insertion_events"}, "rescale");
  RescaleConfig c;
  c.gamma = r.value("gamma", c.gamma);
  c.margin = r.value("margin", c.margin);
  c.cooldown_events = r.value("cooldown_events", c.cooldown_events);
  c.suppress_after_insertion_events = r.value("suppress_after_insertion_events", c.suppress_after_insertion_events);
  return c;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (!(volume_m3 > 0.0)) throw ConfigError("volume_m3 must be positive");
  for (const auto& t : initial_species) {
    if (t.count < 0) throw ConfigError("initial population of " + to_string(t.composition) + " is negative");
    check_limits(t.composition, model.materials.limits);
  }
  if (run.until_time_s.has_value() == run.until_dose_dpa.has_value()) {
    throw ConfigError("exactly one of run.until_time_s and run.until_dose_dpa must be set");
  }
  if (run.until_time_s && !(*run.until_time_s > 0.0)) throw ConfigError("until_time_s must be positive");
  if (run.until_dose_dpa && !(*run.until_dose_dpa > 0.0)) throw ConfigError("until_dose_dpa must be positive");
  if (run.replicas < 1) throw ConfigError("replicas must be at least 1");
  if (!(run.sample_start_s > 0.0)) throw ConfigError("sample_start_s must be positive");
  if (run.samples_per_decade < 1) throw ConfigError("samples_per_decade must be at least 1");
  if (run.checkpoint_every_steps < 0) throw ConfigError("checkpoint_every_steps must be non-negative");
  if (run.recompute_every < 1) throw ConfigError("recompute_every must be at least 1");
  leap.validate();
  rescale.validate();
}

RunConfig parse_config(const json& doc) {
  try {
    check_keys(doc,
               {"temperature_K", "volume_m3", "materials", "sinks", "source", "initial_species", "run", "leap",
                "rescale", "description"},
               "config");
    RunConfig cfg;
    const double temperature = doc.at("temperature_K").get<double>();
    cfg.model.materials = parse_materials(doc.at("materials"), temperature);
    cfg.model.sinks = parse_sinks(doc.value("sinks", json::array()));
    cfg.model.source = parse_source(doc.value("source", json::object()));
    cfg.volume_m3 = doc.at("volume_m3").get<double>();
    if (doc.contains("initial_species")) cfg.initial_species = parse_terms(doc.at("initial_species"), "initial_species");
    cfg.run = parse_run(doc.value("run", json::object()));
    cfg.leap = parse_leap(doc.value("leap", json::object()));
    cfg.rescale = parse_rescale(doc.value("rescale", json::object()));
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  json doc;
  doc["temperature_K"] = cfg.model.materials.temperature_K;
  doc["volume_m3"] = cfg.volume_m3;
  doc["materials"] = materials_json(cfg.model.materials);
  doc["sinks"] = sinks_json(cfg.model.sinks);
  doc["source"] = source_json(cfg.model.source);
  doc["initial_species"] = terms_json(cfg.initial_species);
  doc["run"] = run_json(cfg.run);
  doc["leap"] = {{"n_cr", cfg.leap.n_cr},
                 {"epsilon", cfg.leap.epsilon},
                 {"n_mult", cfg.leap.n_mult},
                 {"fallback_steps", cfg.leap.fallback_steps},
                 {"max_halvings", cfg.leap.max_halvings}};
  doc["rescale"] = {{"gamma", cfg.rescale.gamma},
                    {"margin", cfg.rescale.margin},
                    {"cooldown_events", cfg.rescale.cooldown_events},
                    {"suppress_after_insertion_events", cfg.rescale.suppress_after_insertion_events}};
  return doc;
}

std::string physics_digest(const RunConfig& cfg) {
  const json doc = to_json(cfg);
  json physics;
  for (const char* k : {"temperature_K", "volume_m3", "materials", "sinks", "source", "initial_species"}) {
    physics[k] = doc.at(k);
  }
  const std::string text = physics.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace scd
