#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "evit/errors.hpp"
#include "evit/io.hpp"
#include "evit/surrogate.hpp"

namespace evit {

// Prediction-quality rates (true, false-positive, false-negative,
// false-damage); a point on the 3-simplex.
struct QualityVector {
  double tr = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double fdr = 0.0;

  double sum() const { return tr + fpr + fnr + fdr; }

  std::array<double, 4> as_array() const { return {tr, fpr, fnr, fdr}; }
};

// Outcome of one pairwise transfer task.
struct TransferRecord {
  std::string source_id;
  std::string target_id;
  double similarity = 0.0;
  QualityVector quality;
};

enum class TransferAlgorithm { nca, null_transfer };

// Either "align to this source with NCA" or "do not transfer".
struct TransferStrategy {
  std::optional<std::string> source;
  TransferAlgorithm algorithm = TransferAlgorithm::null_transfer;

  static TransferStrategy nca(std::string source_id) {
    return {std::move(source_id), TransferAlgorithm::nca};
  }
  static TransferStrategy null_transfer() {
    return {std::nullopt, TransferAlgorithm::null_transfer};
  }
};

// Per-feature mean and standard deviation of normal-condition (undamaged)
// data. Standard deviation uses the population form (denominator N).
struct FeatureStats {
  FeaturePoint mean{};
  FeaturePoint stddev{};
};

inline FeatureStats normal_condition_stats(const ModalDataset& dataset) {
  FeatureStats stats;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.labels[i] != HealthState::undamaged) continue;
    ++n;
    for (std::size_t f = 0; f < 2; ++f) stats.mean[f] += dataset.features[i][f];
  }
  if (n == 0)
    throw degenerate_normal_condition_error(
        "dataset '" + dataset.structure_id + "' has no undamaged rows");
  for (std::size_t f = 0; f < 2; ++f) stats.mean[f] /= static_cast<double>(n);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.labels[i] != HealthState::undamaged) continue;
    for (std::size_t f = 0; f < 2; ++f) {
      double d = dataset.features[i][f] - stats.mean[f];
      stats.stddev[f] += d * d;
    }
  }
  for (std::size_t f = 0; f < 2; ++f)
    stats.stddev[f] = std::sqrt(stats.stddev[f] / static_cast<double>(n));
  return stats;
}

inline void require_usable(const FeatureStats& stats, const char* which) {
  for (std::size_t f = 0; f < 2; ++f) {
    if (!(stats.stddev[f] > 0.0) || !std::isfinite(stats.stddev[f]) ||
        !std::isfinite(stats.mean[f]))
      throw degenerate_normal_condition_error(
          std::string(which) +
          " normal-condition spread is zero or non-finite in feature " +
          std::to_string(f));
  }
}

// Normal-condition alignment: per feature,
//   z = ((x - mu_t) / sigma_t) * sigma_s + mu_s.
// Maps target features into the source frame so the undamaged data coincide.
inline std::vector<FeaturePoint> normal_condition_align(
    const std::vector<FeaturePoint>& target_features,
    const FeatureStats& source_stats, const FeatureStats& target_stats) {
  require_usable(source_stats, "source");
  require_usable(target_stats, "target");
  std::vector<FeaturePoint> aligned(target_features.size());
  for (std::size_t i = 0; i < target_features.size(); ++i)
    for (std::size_t f = 0; f < 2; ++f)
      aligned[i][f] = (target_features[i][f] - target_stats.mean[f]) /
                          target_stats.stddev[f] * source_stats.stddev[f] +
                      source_stats.mean[f];
  return aligned;
}

// z-scores every row by the given stats.
inline std::vector<FeaturePoint> standardize(
    const std::vector<FeaturePoint>& features, const FeatureStats& stats) {
  require_usable(stats, "standardization");
  std::vector<FeaturePoint> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t f = 0; f < 2; ++f)
      out[i][f] = (features[i][f] - stats.mean[f]) / stats.stddev[f];
  return out;
}

// k-nearest-neighbours with Euclidean metric. Neighbour order is fixed by
// (distance, training-row index); vote ties go to the smallest label.
inline std::vector<HealthState> knn_predict(
    const std::vector<FeaturePoint>& train_features,
    const std::vector<HealthState>& train_labels,
    const std::vector<FeaturePoint>& query_features, int k = 5) {
  if (train_features.size() != train_labels.size())
    throw invalid_input_error("knn_predict: feature/label count mismatch");
  if (k < 1) throw invalid_input_error("knn_predict: k must be >= 1");
  if (static_cast<std::size_t>(k) > train_features.size())
    throw invalid_input_error("knn_predict: k (" + std::to_string(k) +
                              ") exceeds training set size (" +
                              std::to_string(train_features.size()) + ")");

  std::vector<HealthState> predictions;
  predictions.reserve(query_features.size());
  std::vector<std::pair<double, std::size_t>> dist(train_features.size());
  for (const auto& q : query_features) {
    for (std::size_t i = 0; i < train_features.size(); ++i) {
      double dx = train_features[i][0] - q[0];
      double dy = train_features[i][1] - q[1];
      dist[i] = {dx * dx + dy * dy, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::array<int, 4> votes{};
    for (int j = 0; j < k; ++j) ++votes[to_int(train_labels[dist[j].second])];
    int best = 0;
    for (int label = 1; label < kHealthStateCount; ++label)
      if (votes[label] > votes[best]) best = label;
    predictions.push_back(static_cast<HealthState>(best));
  }
  return predictions;
}

// Counts prediction outcomes against ground truth. The four rates share the
// denominator, so they sum to one up to rounding of the division itself.
inline QualityVector score_quality(const std::vector<HealthState>& true_labels,
                                   const std::vector<HealthState>& predicted) {
  if (true_labels.size() != predicted.size())
    throw invalid_input_error("score_quality: label count mismatch");
  if (true_labels.empty())
    throw invalid_input_error("score_quality: empty label vectors");

  std::size_t n_true = 0, n_fp = 0, n_fn = 0, n_fd = 0;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    bool truth_damaged = true_labels[i] != HealthState::undamaged;
    bool pred_damaged = predicted[i] != HealthState::undamaged;
    if (predicted[i] == true_labels[i])
      ++n_true;
    else if (!truth_damaged && pred_damaged)
      ++n_fp;
    else if (truth_damaged && !pred_damaged)
      ++n_fn;
    else
      ++n_fd;
  }
  double n = static_cast<double>(true_labels.size());
  return {static_cast<double>(n_true) / n, static_cast<double>(n_fp) / n,
          static_cast<double>(n_fn) / n, static_cast<double>(n_fd) / n};
}

// Runs every ordered source/target pair: standardize the source by its own
// normal-condition stats, align the target into that frame, classify with
// kNN on the source labels, and score against the target's retained ground
// truth. Output is ordered by source id then target id.
template <typename SimilarityFn>
std::vector<TransferRecord> run_pairwise_transfers(
    const std::vector<ModalDataset>& datasets, SimilarityFn&& similarity,
    int k = 5) {
  if (datasets.size() < 2)
    throw invalid_input_error("run_pairwise_transfers: need >= 2 structures");
  for (const auto& d : datasets) {
    auto counts = d.class_counts();
    for (int y = 0; y < kHealthStateCount; ++y)
      if (counts[y] == 0)
        throw invalid_input_error("dataset '" + d.structure_id +
                                  "' is missing class " + std::to_string(y));
  }

  std::vector<std::size_t> order(datasets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return datasets[a].structure_id < datasets[b].structure_id;
  });

  std::vector<TransferRecord> records;
  records.reserve(datasets.size() * (datasets.size() - 1));
  for (std::size_t s : order) {
    const auto& source = datasets[s];
    auto source_stats = normal_condition_stats(source);
    auto train = standardize(source.features, source_stats);
    for (std::size_t t : order) {
      if (t == s) continue;
      const auto& target = datasets[t];
      auto target_stats = normal_condition_stats(target);
      auto aligned =
          normal_condition_align(target.features, source_stats, target_stats);
      auto queries = standardize(aligned, source_stats);
      auto predicted = knn_predict(train, source.labels, queries, k);
      TransferRecord record;
      record.source_id = source.structure_id;
      record.target_id = target.structure_id;
      record.similarity = similarity(s, t);
      record.quality = score_quality(target.labels, predicted);
      records.push_back(std::move(record));
    }
  }
  return records;
}

inline std::string transfer_records_to_csv(
    const std::vector<TransferRecord>& records) {
  std::string csv = "source_id,target_id,similarity,tr,fpr,fnr,fdr\n";
  for (const auto& r : records) {
    csv += r.source_id;
    csv += ',';
    csv += r.target_id;
    csv += ',';
    csv += format_double(r.similarity);
    for (double v : r.quality.as_array()) {
      csv += ',';
      csv += format_double(v);
    }
    csv += '\n';
  }
  return csv;
}

}  // namespace evit
