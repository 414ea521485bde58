#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "evit/errors.hpp"
#include "evit/io.hpp"
#include "evit/population.hpp"
#include "evit/random.hpp"

namespace evit {

// Two-feature sample: the first two natural frequencies in Hz.
using FeaturePoint = std::array<double, 2>;

// Mode coefficients for the baseline-frequency model
//   f_m = (c_m / L) * sqrt(E / rho) * mass_factor(topology).
// Chosen so the first natural frequency of the builtin population lands in
// roughly 5-40 Hz; only ratios across structures matter downstream.
inline constexpr double kModeCoefficient1 = 0.004;
inline constexpr double kModeCoefficient2 = 0.010;

// Added mass (winglets, engines) lowers the natural frequencies.
inline double topology_mass_factor(Topology t) {
  switch (t) {
    case Topology::base: return 1.0;
    case Topology::engines: return 0.90;
    case Topology::winglets: return 0.97;
  }
  return 1.0;
}

// Fractional mean-frequency shifts per health state, for (f1, f2).
struct DamageShiftTable {
  std::array<FeaturePoint, 4> shifts = {{
      {0.0, 0.0},        // undamaged
      {-0.04, -0.01},    // wing: dominant first-mode drop
      {-0.005, -0.03},   // tailplane: dominant second-mode drop
      {-0.015, -0.015},  // fuselage: even drop
  }};
};

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int samples_per_class = 50;
  double noise_fraction = 0.005;
  DamageShiftTable damage_shifts;
};

inline void validate(const GeneratorConfig& cfg) {
  if (cfg.samples_per_class < 1)
    throw config_validation_error("samples_per_class",
                                  "must be >= 1, got " +
                                      std::to_string(cfg.samples_per_class));
  if (!(cfg.noise_fraction > 0.0) || !(cfg.noise_fraction < 0.2) ||
      !std::isfinite(cfg.noise_fraction))
    throw config_validation_error(
        "noise_fraction",
        "must lie in (0, 0.2), got " + format_double(cfg.noise_fraction));
  for (const auto& shift : cfg.damage_shifts.shifts)
    for (double s : shift)
      if (!std::isfinite(s) || s <= -1.0)
        throw config_validation_error("damage_shifts",
                                      "fractional shifts must be finite and > -1");
}

// Labelled natural-frequency samples for one structure.
struct ModalDataset {
  std::string structure_id;
  std::vector<FeaturePoint> features;
  std::vector<HealthState> labels;

  std::size_t size() const { return features.size(); }

  std::array<std::size_t, 4> class_counts() const {
    std::array<std::size_t, 4> counts{};
    for (HealthState label : labels) ++counts[to_int(label)];
    return counts;
  }
};

// Undamaged-state natural frequencies from the beam-scaling model.
inline FeaturePoint baseline_frequencies(const StructureAttributes& attrs) {
  validate_structure(attrs);
  double span = wingspan_metres(attrs.scale);
  double wave_speed =
      std::sqrt(attrs.youngs_modulus_gpa * 1e9 / attrs.density_kg_m3);
  double factor = topology_mass_factor(attrs.topology);
  return {kModeCoefficient1 / span * wave_speed * factor,
          kModeCoefficient2 / span * wave_speed * factor};
}

// Mean frequencies per health state: baseline shifted by the class's
// fractional shifts.
inline std::array<FeaturePoint, 4> class_mean_frequencies(
    const StructureAttributes& attrs, const GeneratorConfig& cfg) {
  FeaturePoint base = baseline_frequencies(attrs);
  std::array<FeaturePoint, 4> means;
  for (int y = 0; y < kHealthStateCount; ++y)
    for (std::size_t f = 0; f < 2; ++f)
      means[y][f] = base[f] * (1.0 + cfg.damage_shifts.shifts[y][f]);
  return means;
}

// Draws samples_per_class rows per health state: class mean plus independent
// Gaussian noise with standard deviation noise_fraction * class mean per
// feature. Fully determined by cfg.seed.
inline ModalDataset generate_dataset(const StructureAttributes& attrs,
                                     const GeneratorConfig& cfg) {
  validate(cfg);
  auto means = class_mean_frequencies(attrs, cfg);

  ModalDataset out;
  out.structure_id = attrs.id;
  out.features.reserve(static_cast<std::size_t>(cfg.samples_per_class) * 4);
  out.labels.reserve(out.features.capacity());

  Rng rng(cfg.seed);
  for (int y = 0; y < kHealthStateCount; ++y) {
    for (int i = 0; i < cfg.samples_per_class; ++i) {
      FeaturePoint row;
      for (std::size_t f = 0; f < 2; ++f) {
        double mean = means[y][f];
        row[f] = mean + cfg.noise_fraction * mean * rng.normal();
        if (!(row[f] > 0.0) || !std::isfinite(row[f]))
          throw invalid_input_error(
              "generated a non-positive frequency for '" + attrs.id +
              "'; noise_fraction too large for this configuration");
      }
      out.features.push_back(row);
      out.labels.push_back(static_cast<HealthState>(y));
    }
  }
  return out;
}

inline std::string dataset_to_csv(const ModalDataset& dataset) {
  std::string csv = "structure_id,f1_hz,f2_hz,label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    csv += dataset.structure_id;
    csv += ',';
    csv += format_double(dataset.features[i][0]);
    csv += ',';
    csv += format_double(dataset.features[i][1]);
    csv += ',';
    csv += std::to_string(to_int(dataset.labels[i]));
    csv += '\n';
  }
  return csv;
}

}  // namespace evit
