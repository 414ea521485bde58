#include "evit/valuation.hpp"

#include <cmath>

#include "gtest/gtest.h"

#include "evit/random.hpp"

using namespace evit;

namespace {

double softplus_inv(double y) { return y + std::log(-std::expm1(-y)); }

MlpModel constant_model(const std::array<double, 4>& alpha) {
  MlpModel m;
  for (std::size_t k = 0; k < 4; ++k) m.b3[k] = softplus_inv(alpha[k]);
  return m;
}

// Strictly increasing mean TR: the TR concentration grows with similarity
// through a positive chain while the error concentrations stay constant.
MlpModel monotone_model() {
  MlpModel m = constant_model({1.0, 0.05, 0.05, 0.05});
  m.w1[0] = 2.0;
  m.w2[0] = 2.0;
  m.w3[0] = 3.0;
  m.b3[0] = 0.0;
  return m;
}

// Uniform-guessing oracle: enumerate (true class, predicted class) pairs and
// accumulate the four rates by their definitions.
QualityVector guessing_oracle(int n_classes, const std::vector<double>& p) {
  QualityVector q{0, 0, 0, 0};
  for (int y = 0; y < n_classes; ++y) {
    for (int pred = 0; pred < n_classes; ++pred) {
      double mass = p[y] / n_classes;
      if (pred == y)
        q.tr += mass;
      else if (y == 0)
        q.fpr += mass;
      else if (pred == 0)
        q.fnr += mass;
      else
        q.fdr += mass;
    }
  }
  return q;
}

}  // namespace

TEST(NullBaseline, UniformFourClassValuesAreExact) {
  auto q = null_baseline_quality();
  EXPECT_EQ(q.tr, 0.25);
  EXPECT_EQ(q.fpr, 0.1875);
  EXPECT_EQ(q.fnr, 0.1875);
  EXPECT_EQ(q.fdr, 0.375);
}

TEST(NullBaseline, DerivedSubstitutions) {
  auto all_undamaged = null_baseline_quality(4, {1.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(all_undamaged.tr, 0.25);
  EXPECT_EQ(all_undamaged.fpr, 0.75);
  EXPECT_EQ(all_undamaged.fnr, 0.0);
  EXPECT_EQ(all_undamaged.fdr, 0.0);

  auto detection_only = null_baseline_quality(2, {0.5, 0.5});
  EXPECT_EQ(detection_only.tr, 0.5);
  EXPECT_EQ(detection_only.fpr, 0.25);
  EXPECT_EQ(detection_only.fnr, 0.25);
  EXPECT_EQ(detection_only.fdr, 0.0);
}

TEST(NullBaseline, MatchesEnumerationOracle) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    int n_classes = 2 + static_cast<int>(rng.uniform() * 5);
    std::vector<double> p(n_classes);
    double sum = 0.0;
    for (double& v : p) {
      v = rng.uniform() + 0.01;
      sum += v;
    }
    for (double& v : p) v /= sum;
    auto closed = null_baseline_quality(n_classes, p);
    auto oracle = guessing_oracle(n_classes, p);
    EXPECT_NEAR(closed.tr, oracle.tr, 1e-12);
    EXPECT_NEAR(closed.fpr, oracle.fpr, 1e-12);
    EXPECT_NEAR(closed.fnr, oracle.fnr, 1e-12);
    EXPECT_NEAR(closed.fdr, oracle.fdr, 1e-12);
    EXPECT_NEAR(closed.sum(), 1.0, 1e-12);
  }
}

TEST(NullBaseline, InputValidation) {
  EXPECT_THROW(null_baseline_quality(1), invalid_input_error);
  EXPECT_THROW(null_baseline_quality(4, {0.5, 0.5}), invalid_input_error);
  EXPECT_THROW(null_baseline_quality(4, {0.5, 0.5, 0.5, 0.5}),
               invalid_input_error);
  EXPECT_THROW(null_baseline_quality(4, {-0.5, 0.5, 0.5, 0.5}),
               invalid_input_error);
}

TEST(ExpectedUtility, CatalogueValuesAreExact) {
  UtilityTable util;
  EXPECT_EQ(expected_utility(null_baseline_quality(), util, 200), -2375.0);
  EXPECT_EQ(expected_utility({1.0, 0.0, 0.0, 0.0}, util, 200), 1000.0);
  EXPECT_EQ(expected_utility({1.0, 0.0, 0.0, 0.0}, util, 0), 0.0);
}

TEST(ExpectedUtility, LinearInTargetSizeAndUtilities) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    double a = rng.uniform() + 0.01, b = rng.uniform(), c = rng.uniform(),
           d = rng.uniform();
    double s = a + b + c + d;
    QualityVector q{a / s, b / s, c / s, d / s};
    UtilityTable util{rng.uniform(1.0, 10.0), -rng.uniform(1.0, 20.0),
                      -rng.uniform(1.0, 60.0), -rng.uniform(1.0, 10.0)};
    double one = expected_utility(q, util, 100);
    EXPECT_NEAR(expected_utility(q, util, 300), 3.0 * one, 1e-9);

    UtilityTable doubled{2 * util.u_true, 2 * util.u_false_positive,
                         2 * util.u_false_negative, 2 * util.u_false_damage};
    EXPECT_NEAR(expected_utility(q, doubled, 100), 2.0 * one, 1e-9);
  }
}

TEST(Evit, NullStrategyValueIsExactlyZero) {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    UtilityTable util{rng.uniform(0.5, 20.0), -rng.uniform(0.5, 30.0),
                      -rng.uniform(0.5, 80.0), -rng.uniform(0.5, 15.0)};
    int m = 1 + static_cast<int>(rng.uniform() * 500);
    double eu0 = expected_utility(null_baseline_quality(), util, m);
    EXPECT_EQ(eu0 - eu0, 0.0);
  }
}

TEST(Evit, BaselinePredictingModelHasNearZeroValue) {
  // alpha = (4,3,3,6) has mean (0.25, 0.1875, 0.1875, 0.375) exactly.
  auto model = constant_model({4.0, 3.0, 3.0, 6.0});
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 100;
  auto result = compute_evit(model, 0.5, util, cfg, 9);
  EXPECT_LT(std::abs(result.value), 1e-9);
}

TEST(Evit, PointMassIdentityReaches3375) {
  UtilityTable util;
  double evit_exact = expected_utility({1.0, 0.0, 0.0, 0.0}, util, 200) -
                      expected_utility(null_baseline_quality(), util, 200);
  EXPECT_EQ(evit_exact, 3375.0);

  // A model with nearly point-mass mean approaches the same value.
  auto model = constant_model({1e5, 1e-3, 1e-3, 1e-3});
  ValuationConfig cfg;
  cfg.n_samples = 100;
  auto result = compute_evit(model, 0.9, util, cfg, 10);
  EXPECT_NEAR(result.value, 3375.0, 0.05);
}

TEST(Evit, SampledMeanConvergesToAnalyticValue) {
  auto model = constant_model({8.0, 2.0, 1.0, 3.0});
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 100000;
  auto result = compute_evit(model, 0.5, util, cfg, 31);

  // Standard error from an independent sample pass.
  Rng rng(32);
  DirichletParams params = forward(model, 0.5);
  double eu0 = expected_utility(null_baseline_quality(), util, cfg.target_size);
  double sq_sum = 0.0, sum = 0.0;
  for (int i = 0; i < cfg.n_samples; ++i) {
    auto qs = sample_dirichlet(rng, params);
    double gain =
        expected_utility({qs[0], qs[1], qs[2], qs[3]}, util, cfg.target_size) -
        eu0;
    sum += gain;
    sq_sum += gain * gain;
  }
  double mean = sum / cfg.n_samples;
  double se = std::sqrt((sq_sum / cfg.n_samples - mean * mean) / cfg.n_samples);
  EXPECT_LT(std::abs(result.sample_mean - result.value), 3.0 * se);
  EXPECT_LE(result.lower, result.value);
  EXPECT_GE(result.upper, result.value);
}

TEST(EvitCurve, GridAndCsvLayout) {
  auto model = monotone_model();
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 200;
  auto curve = evit_curve(model, util, cfg, 21, 3);
  ASSERT_EQ(curve.size(), 21u);
  EXPECT_DOUBLE_EQ(curve.front().sigma, 0.0);
  EXPECT_DOUBLE_EQ(curve.back().sigma, 1.0);
  auto csv = evit_curve_csv(curve);
  EXPECT_EQ(csv.rfind("sigma,evit_mean,evit_lo,evit_hi\n", 0), 0u);
}

TEST(OptimizeStrategy, PicksHighestSimilarityUnderMonotoneModel) {
  auto model = monotone_model();
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 200;
  std::vector<SourceCandidate> candidates = {{"A", 0.2, 0.0}, {"B", 0.9, 0.0}};
  auto decision = optimize_strategy(model, candidates, util, cfg, 5);
  ASSERT_TRUE(decision.chosen.source.has_value());
  EXPECT_EQ(*decision.chosen.source, "B");
  ASSERT_EQ(decision.table.size(), 3u);  // two candidates + null
  EXPECT_EQ(*decision.table[0].strategy.source, "B");
  EXPECT_GE(decision.table[0].total, decision.table[1].total);
  EXPECT_FALSE(decision.table.back().strategy.source.has_value());
  EXPECT_DOUBLE_EQ(decision.table.back().evit, 0.0);
}

TEST(OptimizeStrategy, AvoidsNegativeTransfer) {
  // Mean mass concentrated on false negatives: far worse than guessing.
  auto model = constant_model({1.0, 1.0, 20.0, 1.0});
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 100;
  std::vector<SourceCandidate> candidates = {{"A", 0.3, 0.0}, {"B", 0.8, 0.0}};
  auto decision = optimize_strategy(model, candidates, util, cfg, 6);
  EXPECT_FALSE(decision.chosen.source.has_value());
  EXPECT_DOUBLE_EQ(decision.chosen_total, 0.0);
}

TEST(OptimizeStrategy, TransferCostCanDominate) {
  auto model = monotone_model();
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 100;
  auto probe = compute_evit(model, 0.9, util, cfg, 7);
  ASSERT_GT(probe.value, 0.0);
  std::vector<SourceCandidate> candidates = {{"A", 0.9, -10.0 * probe.value}};
  auto decision = optimize_strategy(model, candidates, util, cfg, 7);
  EXPECT_FALSE(decision.chosen.source.has_value());
}

TEST(OptimizeStrategy, NeverWorseThanNull) {
  Rng rng(77);
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 50;
  for (int trial = 0; trial < 20; ++trial) {
    auto model = constant_model({rng.uniform(0.5, 30.0), rng.uniform(0.1, 5.0),
                                 rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)});
    std::vector<SourceCandidate> candidates;
    int n = 1 + static_cast<int>(rng.uniform() * 5);
    for (int i = 0; i < n; ++i)
      candidates.push_back({"S" + std::to_string(i), rng.uniform(),
                            rng.uniform(-500.0, 100.0)});
    cfg.null_transfer_cost = rng.uniform(-50.0, 50.0);
    auto decision = optimize_strategy(model, candidates, util, cfg, trial);
    EXPECT_GE(decision.chosen_total, cfg.null_transfer_cost);
    for (const auto& eval : decision.table)
      EXPECT_GE(decision.chosen_total, eval.total * (1.0 - 1e-15) - 1e-12);
  }
}

TEST(OptimizeStrategy, ChoiceInvariantToPositiveUtilityScaling) {
  Rng rng(88);
  ValuationConfig cfg;
  cfg.n_samples = 50;
  for (int trial = 0; trial < 10; ++trial) {
    auto model = constant_model({rng.uniform(0.5, 30.0), rng.uniform(0.1, 5.0),
                                 rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)});
    std::vector<SourceCandidate> candidates = {
        {"A", rng.uniform(), 0.0}, {"B", rng.uniform(), 0.0}, {"C", rng.uniform(), 0.0}};
    UtilityTable util{rng.uniform(1.0, 10.0), -rng.uniform(1.0, 20.0),
                      -rng.uniform(1.0, 60.0), -rng.uniform(1.0, 10.0)};
    double c = rng.uniform(0.5, 5.0);
    UtilityTable scaled{c * util.u_true, c * util.u_false_positive,
                        c * util.u_false_negative, c * util.u_false_damage};
    auto base = optimize_strategy(model, candidates, util, cfg, trial);
    auto other = optimize_strategy(model, candidates, scaled, cfg, trial);
    EXPECT_EQ(base.chosen.source, other.chosen.source);
  }
}

TEST(OptimizeStrategy, ReportJsonShape) {
  auto model = monotone_model();
  UtilityTable util;
  ValuationConfig cfg;
  cfg.n_samples = 50;
  auto decision =
      optimize_strategy(model, {{"A", 0.4, 0.0}, {"B", 1.0, 0.0}}, util, cfg, 1);
  auto report = strategy_decision_to_json(decision, "T1");
  EXPECT_EQ(report.at("target_id"), "T1");
  EXPECT_EQ(report.at("candidates").size(), 3u);
  EXPECT_TRUE(report.at("chosen").contains("source"));
  EXPECT_EQ(report.at("candidates").back().at("algorithm"), "null_transfer");
}

TEST(OptimizeStrategy, RequiresCandidates) {
  UtilityTable util;
  ValuationConfig cfg;
  EXPECT_THROW(optimize_strategy(MlpModel{}, {}, util, cfg, 0),
               invalid_input_error);
}

TEST(ValuationConfig, Validation) {
  ValuationConfig cfg;
  cfg.target_size = 0;
  EXPECT_THROW(validate(cfg), config_validation_error);
  cfg = ValuationConfig{};
  cfg.n_classes = 1;
  EXPECT_THROW(validate(cfg), config_validation_error);
  cfg = ValuationConfig{};
  cfg.ci_level = 1.0;
  EXPECT_THROW(validate(cfg), config_validation_error);

  UtilityTable util;
  util.u_true = -1.0;
  try {
    validate(util);
    FAIL() << "expected config_validation_error";
  } catch (const config_validation_error& e) {
    EXPECT_EQ(e.field(), "u_true");
  }
  util = UtilityTable{};
  util.u_false_negative = 1.0;
  EXPECT_THROW(validate(util), config_validation_error);
}
