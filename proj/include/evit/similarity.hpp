#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "evit/errors.hpp"
#include "evit/population.hpp"
#include "evit/random.hpp"
#include "evit/transfer.hpp"

namespace evit {

// Non-negative attribute weights with unit L2 norm.
struct SimilarityWeights {
  std::array<double, 4> w{0.5, 0.5, 0.5, 0.5};

  static SimilarityWeights equal() { return {}; }

  // Normalizes a non-negative direction onto the unit sphere.
  static SimilarityWeights unit(std::array<double, 4> direction) {
    double norm_sq = 0.0;
    for (double v : direction) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw invalid_input_error("similarity weights must be non-negative and finite");
      norm_sq += v * v;
    }
    if (!(norm_sq > 0.0))
      throw invalid_input_error("similarity weights must not all be zero");
    double norm = std::sqrt(norm_sq);
    for (double& v : direction) v /= norm;
    return {direction};
  }
};

inline double weighted_distance(const AttributeVector& a,
                                const AttributeVector& b,
                                const SimilarityWeights& weights) {
  double sum = 0.0;
  for (std::size_t k = 0; k < kAttributeCount; ++k) {
    double diff = a[k] - b[k];
    sum += weights.w[k] * diff * diff;
  }
  return std::sqrt(sum);
}

// Pairwise similarities: distances normalized by the population maximum,
// then flipped, so the diagonal is 1 and the most distant pair scores 0.
struct SimilarityMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

inline SimilarityMatrix similarity_matrix(
    const std::vector<AttributeVector>& encoded,
    const SimilarityWeights& weights) {
  if (encoded.size() < 2)
    throw invalid_input_error("similarity_matrix: need >= 2 structures");
  std::size_t n = encoded.size();
  std::vector<double> distance(n * n, 0.0);
  double max_distance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = weighted_distance(encoded[i], encoded[j], weights);
      distance[i * n + j] = d;
      distance[j * n + i] = d;
      max_distance = std::max(max_distance, d);
    }
  }
  if (!(max_distance > 0.0))
    throw degenerate_population_error(
        "all structures coincide under this weighting; maximum pairwise "
        "distance is zero");
  SimilarityMatrix sim;
  sim.n = n;
  sim.values.resize(n * n);
  for (std::size_t i = 0; i < n * n; ++i)
    sim.values[i] = 1.0 - distance[i] / max_distance;
  return sim;
}

// Sample Pearson correlation coefficient.
inline double pearson_r(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size())
    throw invalid_input_error("pearson_r: length mismatch");
  if (x.size() < 3) throw invalid_input_error("pearson_r: need >= 3 samples");
  double n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mean_x;
    double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw undefined_correlation_error(
        "pearson_r: an argument has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

struct WeightOptimizationResult {
  SimilarityWeights weights;
  double pearson = 0.0;
};

namespace detail {

// Correlation between record TR values and similarities recomputed under a
// candidate weighting. NaN when the weighting is unusable (zero spread).
inline double weight_objective(const SimilarityWeights& weights,
                               const std::vector<AttributeVector>& encoded,
                               const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                               const std::vector<double>& tr_values) {
  double max_distance = 0.0;
  std::size_t n = encoded.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      max_distance = std::max(
          max_distance, weighted_distance(encoded[i], encoded[j], weights));
  if (!(max_distance > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sim(pairs.size());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    double d = weighted_distance(encoded[pairs[r].first],
                                 encoded[pairs[r].second], weights);
    sim[r] = 1.0 - d / max_distance;
  }
  try {
    return pearson_r(sim, tr_values);
  } catch (const undefined_correlation_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

// Maximizes Pearson correlation between record TR values and the recomputed
// similarities over the non-negative unit sphere of weights. Multi-start
// greedy coordinate search; the equal-weights point is always a start, so
// the result never falls below that baseline.
inline WeightOptimizationResult optimize_weights(
    const std::vector<TransferRecord>& records,
    const EncodedPopulation& population, std::uint64_t seed = 0,
    int random_starts = 64) {
  if (records.size() < 4)
    throw invalid_input_error("optimize_weights: need >= 4 records");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> tr_values;
  pairs.reserve(records.size());
  tr_values.reserve(records.size());
  for (const auto& r : records) {
    pairs.emplace_back(population.index_of(r.source_id),
                       population.index_of(r.target_id));
    tr_values.push_back(r.quality.tr);
  }
  bool tr_varies = false;
  for (double v : tr_values)
    if (v != tr_values.front()) tr_varies = true;
  if (!tr_varies)
    throw undefined_correlation_error(
        "optimize_weights: TR is constant across records");

  bool any_spread = false;
  for (const auto& v : population.vectors)
    if (v.components != population.vectors.front().components)
      any_spread = true;
  if (!any_spread)
    throw degenerate_population_error(
        "optimize_weights: all encoded structures are identical");

  auto objective = [&](const SimilarityWeights& w) {
    return detail::weight_objective(w, population.vectors, pairs, tr_values);
  };

  std::vector<SimilarityWeights> starts;
  starts.push_back(SimilarityWeights::equal());
  Rng rng(seed);
  for (int s = 0; s < random_starts; ++s) {
    std::array<double, 4> direction;
    for (double& v : direction) v = std::abs(rng.normal()) + 1e-6;
    starts.push_back(SimilarityWeights::unit(direction));
  }

  bool found = false;
  SimilarityWeights best_weights;
  double best_r = -std::numeric_limits<double>::infinity();

  auto consider = [&](const SimilarityWeights& w, double r) {
    if (std::isnan(r)) return;
    if (!found || r > best_r + 1e-12 ||
        (std::abs(r - best_r) <= 1e-12 && w.w < best_weights.w)) {
      found = true;
      best_r = r;
      best_weights = w;
    }
  };

  for (const auto& start : starts) {
    SimilarityWeights current = start;
    double current_r = objective(current);
    if (std::isnan(current_r)) continue;
    double step = 0.25;
    int sweeps = 0;
    while (step > 1e-4 && sweeps < 400) {
      ++sweeps;
      SimilarityWeights sweep_best = current;
      double sweep_best_r = current_r;
      for (std::size_t k = 0; k < kAttributeCount; ++k) {
        for (double delta : {step, -step}) {
          std::array<double, 4> cand = current.w;
          cand[k] = std::max(0.0, cand[k] + delta);
          double norm_sq = 0.0;
          for (double v : cand) norm_sq += v * v;
          if (!(norm_sq > 0.0)) continue;
          SimilarityWeights candidate = SimilarityWeights::unit(cand);
          double r = objective(candidate);
          if (!std::isnan(r) && r > sweep_best_r + 1e-12) {
            sweep_best = candidate;
            sweep_best_r = r;
          }
        }
      }
      if (sweep_best_r > current_r + 1e-12) {
        current = sweep_best;
        current_r = sweep_best_r;
      } else {
        step *= 0.5;
      }
    }
    consider(current, current_r);
  }

  if (!found)
    throw undefined_correlation_error(
        "optimize_weights: similarity variance is zero for every candidate "
        "weighting");
  return {best_weights, best_r};
}

inline nlohmann::json weights_to_json(const WeightOptimizationResult& result) {
  return {{"w_topology", result.weights.w[0]},
          {"w_scale", result.weights.w[1]},
          {"w_youngs_modulus", result.weights.w[2]},
          {"w_density", result.weights.w[3]},
          {"pearson_r", result.pearson}};
}

inline WeightOptimizationResult weights_from_json(const nlohmann::json& j) {
  try {
    std::array<double, 4> w = {
        j.at("w_topology").get<double>(), j.at("w_scale").get<double>(),
        j.at("w_youngs_modulus").get<double>(), j.at("w_density").get<double>()};
    return {SimilarityWeights::unit(w), j.at("pearson_r").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error("weights", e.what());
  }
}

}  // namespace evit
