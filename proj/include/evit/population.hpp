#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "evit/errors.hpp"

namespace evit {

enum class Topology { base, winglets, engines };
enum class Scale { small, large };

// Structural health states for the four-class damage localisation task.
enum class HealthState : int { undamaged = 0, wing = 1, tailplane = 2, fuselage = 3 };

inline constexpr int kHealthStateCount = 4;

inline int to_int(HealthState s) { return static_cast<int>(s); }

inline HealthState health_state_from_int(int label) {
  if (label < 0 || label >= kHealthStateCount)
    throw invalid_input_error("health state label must be in {0,1,2,3}, got " +
                              std::to_string(label));
  return static_cast<HealthState>(label);
}

// Categorical topology values. The winglets and engines variants are the
// most disparate pair, so they sit at the ends of the range with base
// between them.
inline double topology_value(Topology t) {
  switch (t) {
    case Topology::engines: return 0.0;
    case Topology::base: return 1.0;
    case Topology::winglets: return 2.0;
  }
  throw invalid_input_error("unknown topology variant");
}

inline double wingspan_metres(Scale s) {
  return s == Scale::small ? 1.0 : 2.0;
}

inline const char* topology_name(Topology t) {
  switch (t) {
    case Topology::base: return "base";
    case Topology::winglets: return "winglets";
    case Topology::engines: return "engines";
  }
  return "?";
}

inline const char* scale_name(Scale s) {
  return s == Scale::small ? "small" : "large";
}

// One member of the monitored population.
struct StructureAttributes {
  std::string id;
  Topology topology = Topology::base;
  Scale scale = Scale::small;
  std::string material;
  double youngs_modulus_gpa = 0.0;
  double density_kg_m3 = 0.0;
};

// Attribute descriptor scaled to [0,2] per dimension over a population.
// Component order: topology, scale, Young's modulus, density.
struct AttributeVector {
  std::array<double, 4> components{};

  double operator[](std::size_t i) const { return components[i]; }
  double& operator[](std::size_t i) { return components[i]; }
};

inline constexpr std::size_t kAttributeCount = 4;
inline constexpr std::array<const char*, 4> kAttributeNames = {
    "topology", "scale", "youngs_modulus", "density"};

inline void validate_structure(const StructureAttributes& attrs) {
  if (!(attrs.youngs_modulus_gpa > 0.0) ||
      !std::isfinite(attrs.youngs_modulus_gpa))
    throw invalid_input_error("structure '" + attrs.id +
                              "': youngs_modulus_gpa must be positive and finite");
  if (!(attrs.density_kg_m3 > 0.0) || !std::isfinite(attrs.density_kg_m3))
    throw invalid_input_error("structure '" + attrs.id +
                              "': density_kg_m3 must be positive and finite");
}

inline void validate_population(const std::vector<StructureAttributes>& population) {
  if (population.empty()) throw invalid_input_error("population is empty");
  std::unordered_set<std::string> seen;
  for (const auto& s : population) {
    validate_structure(s);
    if (!seen.insert(s.id).second)
      throw invalid_input_error("duplicate structure id '" + s.id + "'");
  }
}

// The eight laboratory-scale aircraft models used as the default population.
inline std::vector<StructureAttributes> builtin_population() {
  return {
      {"G1", Topology::winglets, Scale::small, "brass", 90.0, 8400.0},
      {"G2", Topology::winglets, Scale::large, "aluminium", 68.0, 2710.0},
      {"G3", Topology::winglets, Scale::large, "steel", 200.0, 8000.0},
      {"G4", Topology::winglets, Scale::large, "aluminium", 68.0, 2710.0},
      {"G5", Topology::engines, Scale::small, "aluminium", 68.0, 2710.0},
      {"G6", Topology::base, Scale::small, "steel+composite", 250.0, 3000.0},
      {"G7", Topology::base, Scale::small, "steel", 200.0, 8000.0},
      {"G8", Topology::base, Scale::large, "steel", 200.0, 8000.0},
  };
}

// Raw (unscaled) attribute columns fed to the encoder.
inline std::array<double, 4> raw_attribute_row(const StructureAttributes& s) {
  return {topology_value(s.topology), wingspan_metres(s.scale),
          s.youngs_modulus_gpa, s.density_kg_m3};
}

// Min-max map of each attribute column onto [0,2], fitted over a population.
// A column with no spread maps to 0, which keeps degenerate populations
// (single structure, single material) usable. Values outside the fitted
// range (an external target) clamp to the boundary.
struct AttributeScaler {
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};

  AttributeVector encode(const StructureAttributes& s) const {
    auto row = raw_attribute_row(s);
    AttributeVector v;
    for (std::size_t d = 0; d < kAttributeCount; ++d) {
      double span = hi[d] - lo[d];
      double scaled = span > 0.0 ? 2.0 * (row[d] - lo[d]) / span : 0.0;
      v[d] = std::clamp(scaled, 0.0, 2.0);
    }
    return v;
  }
};

inline AttributeScaler attribute_scaler(
    const std::vector<StructureAttributes>& population) {
  if (population.empty())
    throw invalid_input_error("attribute_scaler: population is empty");
  for (const auto& s : population) {
    for (double v : raw_attribute_row(s)) {
      if (!std::isfinite(v))
        throw invalid_input_error("attribute_scaler: non-finite attribute in '" +
                                  s.id + "'");
    }
  }
  AttributeScaler scaler;
  scaler.lo = raw_attribute_row(population.front());
  scaler.hi = scaler.lo;
  for (const auto& s : population) {
    auto row = raw_attribute_row(s);
    for (std::size_t d = 0; d < kAttributeCount; ++d) {
      scaler.lo[d] = std::min(scaler.lo[d], row[d]);
      scaler.hi[d] = std::max(scaler.hi[d], row[d]);
    }
  }
  return scaler;
}

inline std::vector<AttributeVector> encode_attributes(
    const std::vector<StructureAttributes>& population) {
  AttributeScaler scaler = attribute_scaler(population);
  std::vector<AttributeVector> encoded(population.size());
  for (std::size_t i = 0; i < population.size(); ++i)
    encoded[i] = scaler.encode(population[i]);
  return encoded;
}

// Population with its encoded attribute vectors, index-aligned.
struct EncodedPopulation {
  std::vector<StructureAttributes> members;
  std::vector<AttributeVector> vectors;

  std::size_t size() const { return members.size(); }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < members.size(); ++i)
      if (members[i].id == id) return i;
    throw invalid_input_error("unknown structure id '" + id + "'");
  }
};

inline EncodedPopulation encode_population(
    std::vector<StructureAttributes> population) {
  validate_population(population);
  auto vectors = encode_attributes(population);
  return {std::move(population), std::move(vectors)};
}

inline Topology topology_from_string(const std::string& name) {
  if (name == "base") return Topology::base;
  if (name == "winglets") return Topology::winglets;
  if (name == "engines") return Topology::engines;
  throw config_validation_error(
      "topology", "expected one of base|winglets|engines, got '" + name + "'");
}

inline Scale scale_from_string(const std::string& name) {
  if (name == "small") return Scale::small;
  if (name == "large") return Scale::large;
  throw config_validation_error("scale",
                                "expected small|large, got '" + name + "'");
}

inline StructureAttributes structure_from_json(const nlohmann::json& j) {
  StructureAttributes s;
  try {
    s.id = j.at("id").get<std::string>();
    s.topology = topology_from_string(j.at("topology").get<std::string>());
    s.scale = scale_from_string(j.at("scale").get<std::string>());
    s.material = j.value("material", std::string{});
    s.youngs_modulus_gpa = j.at("youngs_modulus_gpa").get<double>();
    s.density_kg_m3 = j.at("density_kg_m3").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error("structure", e.what());
  }
  validate_structure(s);
  return s;
}

inline nlohmann::json structure_to_json(const StructureAttributes& s) {
  return {{"id", s.id},
          {"topology", topology_name(s.topology)},
          {"scale", scale_name(s.scale)},
          {"material", s.material},
          {"youngs_modulus_gpa", s.youngs_modulus_gpa},
          {"density_kg_m3", s.density_kg_m3}};
}

inline std::vector<StructureAttributes> population_from_json(
    const nlohmann::json& j) {
  if (!j.is_array())
    throw config_validation_error("population",
                                  "expected a JSON array of structures");
  std::vector<StructureAttributes> population;
  population.reserve(j.size());
  for (const auto& entry : j) population.push_back(structure_from_json(entry));
  validate_population(population);
  return population;
}

}  // namespace evit
