#pragma once

// Shared fixtures: small catalogs and random-state generators.

#include <cstdint>
#include <filesystem>
#include <random>

#include "scd/config.hpp"
#include "scd/rates.hpp"

namespace scd::fixtures {

inline std::filesystem::path source_dir() { return SCD_SOURCE_DIR; }

/// V1, I1, He1, H1 mobile; V, He, H emission; one dislocation sink; no beams.
inline Model toy_model(double temperature_K = 783.0) {
  Model m;
  auto& cat = m.materials;
  cat.temperature_K = temperature_K;
  cat.mobile[kV1] = {1e-6, 1.3};
  cat.mobile[kI1] = {1e-6, 0.3};
  cat.mobile[kHe1] = {1e-7, 0.1};
  cat.mobile[kH1] = {1e-7, 0.2};
  cat.emission_laws[int(Constituent::Vacancy)] = BindingLaw{1.6, 0.3, 1.0};
  cat.emission_laws[int(Constituent::Helium)] = BindingLaw{2.5, 1.7, 2.3};
  cat.emission_laws[int(Constituent::Hydrogen)] = BindingLaw{0.8, 0.5, 0.6};
  m.sinks.sinks.push_back({"dislocations", 1e14, 1.0, {{kI1, 1.2}}});
  return m;
}

inline Model toy_model_with_beams() {
  Model m = toy_model();
  Beam fe{"Fe3+", 1e22, 100.0, {{kV1, 3}, {Composition{2, 0, 0}, 1}, {kI1, 3}, {Composition{-2, 0, 0}, 1}}};
  Beam he{"He+", 1e21, 0.0, {{kHe1, 1}}};
  Beam h{"H+", 2e21, 0.0, {{kH1, 1}}};
  m.source.beams = {fe, he, h};
  return m;
}

/// A random admissible composition with small counts.
inline Composition random_composition(std::mt19937_64& gen, int max_pd = 6, int max_gas = 3) {
  std::uniform_int_distribution<int> pd(-max_pd, max_pd);
  std::uniform_int_distribution<int> gas(0, max_gas);
  for (;;) {
    Composition c{pd(gen), gas(gen), gas(gen)};
    if (c.point_defect < 0) c.he = c.h = 0;
    if (is_valid(c)) return c;
  }
}

inline RunConfig desk_config() { return load_config(source_dir() / "configs" / "desk_triple_beam.json"); }

}  // namespace scd::fixtures
