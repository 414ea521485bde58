#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "evit/efficacy.hpp"
#include "evit/errors.hpp"
#include "evit/io.hpp"
#include "evit/random.hpp"
#include "evit/transfer.hpp"

namespace evit {

// Utiles per prediction outcome. Defaults: correct predictions earn 5,
// unnecessary interventions cost 10, missed damage costs 50, and wrongly
// localised damage costs 5.
struct UtilityTable {
  double u_true = 5.0;
  double u_false_positive = -10.0;
  double u_false_negative = -50.0;
  double u_false_damage = -5.0;
};

inline void validate(const UtilityTable& u) {
  if (!(u.u_true > 0.0))
    throw config_validation_error("u_true", "must be positive");
  if (!(u.u_false_positive < 0.0))
    throw config_validation_error("u_false_positive", "must be negative");
  if (!(u.u_false_negative < 0.0))
    throw config_validation_error("u_false_negative", "must be negative");
  if (!(u.u_false_damage < 0.0))
    throw config_validation_error("u_false_damage", "must be negative");
}

struct ValuationConfig {
  int target_size = 200;  // unlabelled datapoints in the new target domain
  int n_classes = 4;
  double transfer_cost = 0.0;       // default cost per transfer strategy
  double null_transfer_cost = 0.0;  // cost of doing nothing
  int n_samples = 10000;            // Dirichlet draws for uncertainty bands
  double ci_level = 0.90;
};

inline void validate(const ValuationConfig& cfg) {
  if (cfg.target_size < 1)
    throw config_validation_error("target_size", "must be >= 1");
  if (cfg.n_classes < 2)
    throw config_validation_error("n_classes", "must be >= 2");
  if (cfg.n_samples < 1)
    throw config_validation_error("n_samples", "must be >= 1");
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0))
    throw config_validation_error("ci_level", "must lie in (0,1)");
}

// Quality rates when labels are guessed uniformly at random over C classes
// against the given true-class proportions.
inline QualityVector null_baseline_quality(
    int n_classes = 4, const std::vector<double>& class_proportions = {}) {
  if (n_classes < 2)
    throw invalid_input_error("null_baseline_quality: need >= 2 classes");
  std::vector<double> p = class_proportions;
  if (p.empty()) p.assign(n_classes, 1.0 / static_cast<double>(n_classes));
  if (static_cast<int>(p.size()) != n_classes)
    throw invalid_input_error(
        "null_baseline_quality: proportions length must equal n_classes");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw invalid_input_error(
          "null_baseline_quality: proportions must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw invalid_input_error(
        "null_baseline_quality: proportions must sum to 1");

  double classes = static_cast<double>(n_classes);
  QualityVector q;
  q.tr = sum / classes;
  q.fpr = p[0] * (classes - 1.0) / classes;
  q.fnr = (sum - p[0]) / classes;
  q.fdr = (sum - p[0]) * (classes - 2.0) / classes;
  return q;
}

// Expected utility of M predictions with the given mean quality rates.
inline double expected_utility(const QualityVector& q_mean,
                               const UtilityTable& utilities, int target_size) {
  if (target_size < 0)
    throw invalid_input_error("expected_utility: target_size must be >= 0");
  double per_prediction = q_mean.tr * utilities.u_true +
                          q_mean.fpr * utilities.u_false_positive +
                          q_mean.fnr * utilities.u_false_negative +
                          q_mean.fdr * utilities.u_false_damage;
  return static_cast<double>(target_size) * per_prediction;
}

// Expected value of information transfer at one similarity, with a sampled
// utility distribution for uncertainty display. The analytic value uses the
// Dirichlet mean; the sample mean converges to it.
struct EvitResult {
  double value = 0.0;        // analytic EVIT
  double sample_mean = 0.0;  // mean of the sampled utility gain
  double lower = 0.0;        // equal-tail interval of the sampled gain
  double upper = 0.0;
  int n_samples = 0;
};

inline EvitResult compute_evit(const MlpModel& model, double similarity,
                               const UtilityTable& utilities,
                               const ValuationConfig& cfg,
                               std::uint64_t seed = 0) {
  validate(cfg);
  DirichletParams params = forward(model, similarity);
  auto mean = params.mean();
  QualityVector mean_q{mean[0], mean[1], mean[2], mean[3]};
  double baseline_eu = expected_utility(null_baseline_quality(cfg.n_classes),
                                        utilities, cfg.target_size);

  EvitResult result;
  result.value =
      expected_utility(mean_q, utilities, cfg.target_size) - baseline_eu;
  result.n_samples = cfg.n_samples;

  Rng rng(seed);
  std::vector<double> gains(cfg.n_samples);
  double total = 0.0;
  for (int i = 0; i < cfg.n_samples; ++i) {
    auto q = sample_dirichlet(rng, params);
    QualityVector sample_q{q[0], q[1], q[2], q[3]};
    gains[i] =
        expected_utility(sample_q, utilities, cfg.target_size) - baseline_eu;
    total += gains[i];
  }
  result.sample_mean = total / static_cast<double>(cfg.n_samples);
  std::sort(gains.begin(), gains.end());
  double p_lo = (1.0 - cfg.ci_level) / 2.0;
  result.lower = sorted_quantile(gains, p_lo);
  result.upper = sorted_quantile(gains, 1.0 - p_lo);
  return result;
}

struct EvitCurvePoint {
  double sigma = 0.0;
  EvitResult result;
};

// EVIT across an equispaced similarity grid on [0,1].
inline std::vector<EvitCurvePoint> evit_curve(const MlpModel& model,
                                              const UtilityTable& utilities,
                                              const ValuationConfig& cfg,
                                              int grid_points,
                                              std::uint64_t seed = 0) {
  if (grid_points < 2)
    throw invalid_input_error("evit_curve: need >= 2 grid points");
  std::vector<EvitCurvePoint> curve(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    double sigma = static_cast<double>(g) / static_cast<double>(grid_points - 1);
    curve[g].sigma = sigma;
    curve[g].result =
        compute_evit(model, sigma, utilities, cfg,
                     derive_seed(seed, static_cast<std::uint64_t>(g)));
  }
  return curve;
}

inline std::string evit_curve_csv(const std::vector<EvitCurvePoint>& curve) {
  std::string csv = "sigma,evit_mean,evit_lo,evit_hi\n";
  for (const auto& point : curve) {
    csv += format_double(point.sigma);
    csv += ',';
    csv += format_double(point.result.value);
    csv += ',';
    csv += format_double(point.result.lower);
    csv += ',';
    csv += format_double(point.result.upper);
    csv += '\n';
  }
  return csv;
}

// A candidate source with its similarity to the target.
struct SourceCandidate {
  std::string id;
  double similarity = 0.0;
  double transfer_cost = 0.0;
};

struct CandidateEvaluation {
  TransferStrategy strategy;
  double similarity = 0.0;
  double evit = 0.0;
  double transfer_cost = 0.0;
  double total = 0.0;
};

struct StrategyDecision {
  TransferStrategy chosen;
  double chosen_total = 0.0;
  std::vector<CandidateEvaluation> table;  // candidates ranked, then null last
};

// Evaluates EVIT(T) + U(T) for every candidate and the null strategy and
// returns the argmax. The null strategy wins ties, so transfer is only
// recommended when it strictly improves on doing nothing.
inline StrategyDecision optimize_strategy(
    const MlpModel& model, const std::vector<SourceCandidate>& candidates,
    const UtilityTable& utilities, const ValuationConfig& cfg,
    std::uint64_t seed = 0) {
  validate(cfg);
  if (candidates.empty())
    throw invalid_input_error("optimize_strategy: need >= 1 candidate");

  StrategyDecision decision;
  for (const auto& candidate : candidates) {
    EvitResult result = compute_evit(model, candidate.similarity, utilities,
                                     cfg, derive_seed(seed, candidate.id));
    CandidateEvaluation eval;
    eval.strategy = TransferStrategy::nca(candidate.id);
    eval.similarity = candidate.similarity;
    eval.evit = result.value;
    eval.transfer_cost = candidate.transfer_cost;
    eval.total = result.value + candidate.transfer_cost;
    decision.table.push_back(std::move(eval));
  }
  std::sort(decision.table.begin(), decision.table.end(),
            [](const CandidateEvaluation& a, const CandidateEvaluation& b) {
              if (a.total != b.total) return a.total > b.total;
              if (a.similarity != b.similarity)
                return a.similarity > b.similarity;
              return a.strategy.source.value() < b.strategy.source.value();
            });

  CandidateEvaluation null_eval;
  null_eval.strategy = TransferStrategy::null_transfer();
  null_eval.evit = 0.0;  // EVIT of no transfer is zero by definition
  null_eval.transfer_cost = cfg.null_transfer_cost;
  null_eval.total = cfg.null_transfer_cost;

  if (!decision.table.empty() && decision.table.front().total > null_eval.total) {
    decision.chosen = decision.table.front().strategy;
    decision.chosen_total = decision.table.front().total;
  } else {
    decision.chosen = null_eval.strategy;
    decision.chosen_total = null_eval.total;
  }
  decision.table.push_back(std::move(null_eval));
  return decision;
}

inline nlohmann::json strategy_decision_to_json(const StrategyDecision& decision,
                                                const std::string& target_id) {
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& eval : decision.table) {
    nlohmann::json row = {{"evit", eval.evit},
                          {"transfer_cost", eval.transfer_cost},
                          {"total", eval.total}};
    if (eval.strategy.source) {
      row["source"] = *eval.strategy.source;
      row["similarity"] = eval.similarity;
      row["algorithm"] = "nca";
    } else {
      row["source"] = nullptr;
      row["algorithm"] = "null_transfer";
    }
    ranked.push_back(std::move(row));
  }
  nlohmann::json chosen;
  if (decision.chosen.source) {
    chosen = {{"source", *decision.chosen.source},
              {"algorithm", "nca"},
              {"total", decision.chosen_total}};
  } else {
    chosen = {{"source", nullptr},
              {"algorithm", "null_transfer"},
              {"total", decision.chosen_total}};
  }
  return {{"target_id", target_id},
          {"candidates", std::move(ranked)},
          {"chosen", std::move(chosen)}};
}

}  // namespace evit
