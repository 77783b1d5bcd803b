#include "scd/species.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <stdexcept>

#include "scd/errors.hpp"

namespace scd {

namespace {

constexpr int kSignBit = 56;
constexpr int kPointShift = 32;
constexpr int kHeShift = 16;
constexpr std::uint64_t kPointMask = (std::uint64_t{1} << 24) - 1;
constexpr std::uint64_t kGasMask = (std::uint64_t{1} << 16) - 1;

void add_term(std::vector<StoichTerm>& terms, const Composition& c, std::int64_t count) {
  for (auto& t : terms) {
    if (t.composition == c) {
      t.count += count;
      return;
    }
  }
  terms.push_back({c, count});
}

}  // namespace

std::string_view to_string(Constituent c) {
  switch (c) {
    case Constituent::Vacancy: return "V";
    case Constituent::Interstitial: return "I";
    case Constituent::Helium: return "He";
    case Constituent::Hydrogen: return "H";
  }
  return "?";
}

Constituent parse_constituent(std::string_view text) {
  if (text == "V") return Constituent::Vacancy;
  if (text == "I") return Constituent::Interstitial;
  if (text == "He") return Constituent::Helium;
  if (text == "H") return Constituent::Hydrogen;
  throw ConfigError("unknown constituent '" + std::string(text) + "' (expected V, I, He or H)");
}

Composition monomer_of(Constituent c) {
  switch (c) {
    case Constituent::Vacancy: return kV1;
    case Constituent::Interstitial: return kI1;
    case Constituent::Helium: return kHe1;
    case Constituent::Hydrogen: return kH1;
  }
  return {};
}

std::int32_t count_of(const Composition& comp, Constituent c) {
  switch (c) {
    case Constituent::Vacancy: return comp.point_defect > 0 ? comp.point_defect : 0;
    case Constituent::Interstitial: return comp.point_defect < 0 ? -comp.point_defect : 0;
    case Constituent::Helium: return comp.he;
    case Constituent::Hydrogen: return comp.h;
  }
  return 0;
}

bool is_valid(const Composition& c) {
  if (c.he < 0 || c.h < 0) return false;
  if (c.point_defect == 0) return c.he + c.h == 1;
  return true;
}

void check_limits(const Composition& c, const CompositionLimits& limits) {
  if (c.point_defect_count() > limits.max_point_defects || c.he > limits.max_he ||
      c.h > limits.max_h) {
    throw CapacityError("composition " + to_string(c) + " exceeds the configured limits (" +
                        std::to_string(limits.max_point_defects) + " point defects, " +
                        std::to_string(limits.max_he) + " He, " + std::to_string(limits.max_h) +
                        " H)");
  }
}

std::string to_string(const Composition& c) {
  std::string out;
  if (c.point_defect > 0) out += "V" + std::to_string(c.point_defect);
  if (c.point_defect < 0) out += "I" + std::to_string(-std::int64_t{c.point_defect});
  if (c.he > 0) out += "He" + std::to_string(c.he);
  if (c.h > 0) out += "H" + std::to_string(c.h);
  if (out.empty()) out = "0";
  return out;
}

Composition parse_composition(std::string_view text) {
  Composition c;
  std::size_t pos = 0;
  bool seen_any = false;
  int last_rank = -1;
  auto fail = [&](const std::string& why) -> Composition {
    throw ConfigError("cannot parse species '" + std::string(text) + "': " + why);
  };
  while (pos < text.size()) {
    int rank = 0;
    std::int32_t* field = nullptr;
    int sign = 1;
    if (text.substr(pos, 2) == "He") {
      rank = 1;
      field = &c.he;
      pos += 2;
    } else if (text[pos] == 'H') {
      rank = 2;
      field = &c.h;
      pos += 1;
    } else if (text[pos] == 'V' || text[pos] == 'I') {
      rank = 0;
      field = &c.point_defect;
      sign = text[pos] == 'I' ? -1 : 1;
      pos += 1;
    } else {
      return fail("unexpected character");
    }
    if (rank <= last_rank) return fail("components out of order or repeated");
    last_rank = rank;
    std::size_t end = pos;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end == pos) return fail("missing count");
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, value);
    if (ec != std::errc{} || value <= 0 || value > std::numeric_limits<std::int32_t>::max()) {
      return fail("bad count");
    }
    *field = static_cast<std::int32_t>(sign * value);
    pos = end;
    seen_any = true;
  }
  if (!seen_any) return fail("empty");
  if (!is_valid(c)) return fail("not an admissible species");
  return c;
}

SpeciesKey emission_dummy(Constituent c) {
  switch (c) {
    case Constituent::Vacancy: return dummy::kEmitVacancy;
    case Constituent::Interstitial: return dummy::kEmitInterstitial;
    case Constituent::Helium: return dummy::kEmitHelium;
    case Constituent::Hydrogen: return dummy::kEmitHydrogen;
  }
  return 0;
}

SpeciesKey beam_dummy(std::size_t beam_index) { return dummy::kBeamBase + beam_index; }

SpeciesKey canonical_key(const Composition& c) {
  const auto magnitude = static_cast<std::uint64_t>(c.point_defect_count());
  if (c.he < 0 || c.h < 0 || magnitude > kPointMask || static_cast<std::uint64_t>(c.he) > kGasMask ||
      static_cast<std::uint64_t>(c.h) > kGasMask) {
    throw CapacityError("composition " + to_string(c) + " does not fit the species key bit-fields");
  }
  SpeciesKey key = kSpeciesTag;
  if (c.point_defect < 0) key |= SpeciesKey{1} << kSignBit;
  key |= magnitude << kPointShift;
  key |= static_cast<std::uint64_t>(c.he) << kHeShift;
  key |= static_cast<std::uint64_t>(c.h);
  return key;
}

Composition composition_from_key(SpeciesKey key) {
  Composition c;
  const auto magnitude = static_cast<std::int32_t>((key >> kPointShift) & kPointMask);
  c.point_defect = ((key >> kSignBit) & 1) ? -magnitude : magnitude;
  c.he = static_cast<std::int32_t>((key >> kHeShift) & kGasMask);
  c.h = static_cast<std::int32_t>(key & kGasMask);
  return c;
}

std::int64_t point_defect_balance(const std::vector<StoichTerm>& terms) {
  std::int64_t sum = 0;
  for (const auto& t : terms) sum += std::int64_t{t.composition.point_defect} * t.count;
  return sum;
}

ReactionProducts annihilation_products(const Composition& v_cluster, const Composition& i_cluster) {
  if (!v_cluster.is_vacancy_type() || !i_cluster.is_interstitial_type()) {
    throw std::invalid_argument("annihilation requires a vacancy-type and an interstitial-type cluster");
  }
  ReactionProducts p;
  p.consumed = {{v_cluster, 1}, {i_cluster, 1}};
  const Composition merged{v_cluster.point_defect + i_cluster.point_defect, v_cluster.he + i_cluster.he,
                           v_cluster.h + i_cluster.h};
  if (merged.point_defect != 0) {
    p.produced.push_back({merged, 1});
  } else {
    if (merged.he > 0) p.produced.push_back({kHe1, merged.he});
    if (merged.h > 0) p.produced.push_back({kH1, merged.h});
  }
  return p;
}

std::optional<ReactionProducts> aggregation_products(const Composition& a, const Composition& b) {
  if ((a.is_vacancy_type() && b.is_interstitial_type()) ||
      (a.is_interstitial_type() && b.is_vacancy_type())) {
    return std::nullopt;
  }
  const Composition merged{a.point_defect + b.point_defect, a.he + b.he, a.h + b.h};
  if (!is_valid(merged)) return std::nullopt;
  ReactionProducts p;
  add_term(p.consumed, a, 1);
  add_term(p.consumed, b, 1);
  p.produced.push_back({merged, 1});
  return p;
}

std::optional<ReactionProducts> binary_products(const Composition& a, const Composition& b) {
  if (a.is_vacancy_type() && b.is_interstitial_type()) return annihilation_products(a, b);
  if (a.is_interstitial_type() && b.is_vacancy_type()) return annihilation_products(b, a);
  return aggregation_products(a, b);
}

std::optional<ReactionProducts> emission_products(const Composition& c, Constituent emitted) {
  if (c.is_monomer() || count_of(c, emitted) < 1) return std::nullopt;
  Composition rest = c;
  switch (emitted) {
    case Constituent::Vacancy: rest.point_defect -= 1; break;
    case Constituent::Interstitial: rest.point_defect += 1; break;
    case Constituent::Helium: rest.he -= 1; break;
    case Constituent::Hydrogen: rest.h -= 1; break;
  }
  if (!is_valid(rest)) return std::nullopt;
  ReactionProducts p;
  p.consumed.push_back({c, 1});
  add_term(p.produced, rest, 1);
  add_term(p.produced, monomer_of(emitted), 1);
  return p;
}

ReactionProducts sink_products(const Composition& c) {
  ReactionProducts p;
  p.consumed.push_back({c, 1});
  return p;
}

}  // namespace scd
