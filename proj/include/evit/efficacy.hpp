#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "json.hpp"

#include "evit/errors.hpp"
#include "evit/io.hpp"
#include "evit/random.hpp"
#include "evit/transfer.hpp"

namespace evit {

// Dirichlet concentration parameters, ordered (TR, FPR, FNR, FDR).
struct DirichletParams {
  std::array<double, 4> alpha{};

  double total() const { return alpha[0] + alpha[1] + alpha[2] + alpha[3]; }

  // Analytic mean alpha / sum(alpha), a point on the 3-simplex.
  std::array<double, 4> mean() const {
    double s = total();
    return {alpha[0] / s, alpha[1] / s, alpha[2] / s, alpha[3] / s};
  }
};

// Observed quality components exactly on the simplex boundary are clamped
// here and renormalized before density evaluation; the Dirichlet density is
// undefined at the boundary for alpha_k < 1.
inline constexpr double kBoundaryClamp = 1e-6;

inline std::array<double, 4> clamp_to_interior(const std::array<double, 4>& q) {
  std::array<double, 4> out;
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!(q[k] >= 0.0) || !std::isfinite(q[k]))
      throw invalid_input_error("quality components must be finite and >= 0");
    out[k] = std::max(q[k], kBoundaryClamp);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline double dirichlet_log_pdf(const QualityVector& q,
                                const DirichletParams& params) {
  for (double a : params.alpha)
    if (!(a > 0.0) || !std::isfinite(a))
      throw invalid_input_error("Dirichlet concentrations must be positive and finite");
  auto interior = clamp_to_interior(q.as_array());
  double log_pdf = std::lgamma(params.total());
  for (std::size_t k = 0; k < 4; ++k) {
    log_pdf -= std::lgamma(params.alpha[k]);
    log_pdf += (params.alpha[k] - 1.0) * std::log(interior[k]);
  }
  return log_pdf;
}

// Multilayer perceptron 1 -> 8 -> 8 -> 4 with softplus on the hidden and
// output layers; the softplus output keeps every concentration positive.
// Weight matrices are row-major. The same struct shape carries gradients.
struct MlpModel {
  std::array<double, 8> w1{};   // 8 x 1
  std::array<double, 8> b1{};
  std::array<double, 64> w2{};  // 8 x 8
  std::array<double, 8> b2{};
  std::array<double, 32> w3{};  // 4 x 8
  std::array<double, 4> b3{};
};

inline constexpr std::size_t kMlpParamCount = 124;

inline std::array<double, kMlpParamCount> flatten(const MlpModel& m) {
  std::array<double, kMlpParamCount> out;
  std::size_t i = 0;
  for (double v : m.w1) out[i++] = v;
  for (double v : m.b1) out[i++] = v;
  for (double v : m.w2) out[i++] = v;
  for (double v : m.b2) out[i++] = v;
  for (double v : m.w3) out[i++] = v;
  for (double v : m.b3) out[i++] = v;
  return out;
}

inline MlpModel unflatten(const std::array<double, kMlpParamCount>& p) {
  MlpModel m;
  std::size_t i = 0;
  for (double& v : m.w1) v = p[i++];
  for (double& v : m.b1) v = p[i++];
  for (double& v : m.w2) v = p[i++];
  for (double& v : m.b2) v = p[i++];
  for (double& v : m.w3) v = p[i++];
  for (double& v : m.b3) v = p[i++];
  return m;
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                 : std::exp(x) / (1.0 + std::exp(x));
}

namespace detail {

struct ForwardTrace {
  double input = 0.0;
  std::array<double, 8> z1{}, h1{}, z2{}, h2{};
  std::array<double, 4> z3{};
  std::array<double, 4> alpha{};
};

inline ForwardTrace forward_trace(const MlpModel& m, double similarity) {
  ForwardTrace t;
  t.input = similarity;
  for (std::size_t i = 0; i < 8; ++i) {
    t.z1[i] = m.w1[i] * similarity + m.b1[i];
    t.h1[i] = softplus(t.z1[i]);
  }
  for (std::size_t i = 0; i < 8; ++i) {
    double z = m.b2[i];
    for (std::size_t j = 0; j < 8; ++j) z += m.w2[i * 8 + j] * t.h1[j];
    t.z2[i] = z;
    t.h2[i] = softplus(z);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    double z = m.b3[k];
    for (std::size_t j = 0; j < 8; ++j) z += m.w3[k * 8 + j] * t.h2[j];
    t.z3[k] = z;
    t.alpha[k] = std::max(softplus(z), std::numeric_limits<double>::min());
  }
  return t;
}

// Accumulates d(loss)/d(parameters) for one input given d(loss)/d(alpha).
inline void backprop(const MlpModel& m, const ForwardTrace& t,
                     const std::array<double, 4>& dalpha, MlpModel& grad) {
  std::array<double, 4> dz3;
  for (std::size_t k = 0; k < 4; ++k) dz3[k] = dalpha[k] * logistic(t.z3[k]);
  std::array<double, 8> dh2{};
  for (std::size_t k = 0; k < 4; ++k) {
    grad.b3[k] += dz3[k];
    for (std::size_t j = 0; j < 8; ++j) {
      grad.w3[k * 8 + j] += dz3[k] * t.h2[j];
      dh2[j] += m.w3[k * 8 + j] * dz3[k];
    }
  }
  std::array<double, 8> dz2;
  for (std::size_t i = 0; i < 8; ++i) dz2[i] = dh2[i] * logistic(t.z2[i]);
  std::array<double, 8> dh1{};
  for (std::size_t i = 0; i < 8; ++i) {
    grad.b2[i] += dz2[i];
    for (std::size_t j = 0; j < 8; ++j) {
      grad.w2[i * 8 + j] += dz2[i] * t.h1[j];
      dh1[j] += m.w2[i * 8 + j] * dz2[i];
    }
  }
  for (std::size_t i = 0; i < 8; ++i) {
    double dz1 = dh1[i] * logistic(t.z1[i]);
    grad.w1[i] += dz1 * t.input;
    grad.b1[i] += dz1;
  }
}

}  // namespace detail

inline DirichletParams forward(const MlpModel& model, double similarity) {
  if (!std::isfinite(similarity))
    throw invalid_input_error("forward: similarity must be finite");
  return {detail::forward_trace(model, similarity).alpha};
}

// One (similarity, quality) observation used to fit the efficacy model.
struct EfficacyRecord {
  double similarity = 0.0;
  QualityVector quality;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  double learning_rate = 1e-2;
  double lr_decay = 1.0;  // geometric per-epoch multiplier; 1 = constant rate
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 5000;
  double lambda_mono = 1.0;
  double lambda_conc = 1e-3;
  int grid_points = 101;  // equispaced on [0,1], shared by both penalties
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw config_validation_error("learning_rate", "must be positive");
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0))
    throw config_validation_error("lr_decay", "must lie in (0,1]");
  if (cfg.epochs < 1)
    throw config_validation_error("epochs", "must be >= 1");
  if (!(cfg.lambda_mono >= 0.0))
    throw config_validation_error("lambda_mono", "must be >= 0");
  if (!(cfg.lambda_conc >= 0.0))
    throw config_validation_error("lambda_conc", "must be >= 0");
  if (cfg.grid_points < 2)
    throw config_validation_error("grid_points", "must be >= 2");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0))
    throw config_validation_error("beta1", "must lie in [0,1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw config_validation_error("beta2", "must lie in [0,1)");
  if (!(cfg.adam_epsilon > 0.0))
    throw config_validation_error("adam_epsilon", "must be positive");
}

struct LossTerms {
  double nll = 0.0;
  double monotonicity = 0.0;
  double concentration = 0.0;

  double total() const { return nll + monotonicity + concentration; }
};

namespace detail {

inline std::vector<double> penalty_grid(int grid_points) {
  std::vector<double> grid(grid_points);
  for (int g = 0; g < grid_points; ++g)
    grid[g] = static_cast<double>(g) / static_cast<double>(grid_points - 1);
  return grid;
}

}  // namespace detail

// Three-term loss: Dirichlet negative log-likelihood over the records, a
// hinge penalty on grid-adjacent decreases of the predicted mean TR (and
// increases of the mean error rates), and the grid-averaged L2 norm of the
// concentrations, which discourages overconfidence away from the data.
inline LossTerms loss_terms(const MlpModel& model,
                            const std::vector<EfficacyRecord>& records,
                            const TrainConfig& cfg) {
  validate(cfg);
  if (records.empty()) throw invalid_input_error("loss: no records");

  LossTerms terms;
  for (const auto& rec : records) {
    DirichletParams params = forward(model, rec.similarity);
    terms.nll -= dirichlet_log_pdf(rec.quality, params);
  }

  auto grid = detail::penalty_grid(cfg.grid_points);
  std::vector<std::array<double, 4>> means(grid.size());
  double norm_sum = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    DirichletParams params = forward(model, grid[g]);
    means[g] = params.mean();
    double norm_sq = 0.0;
    for (double a : params.alpha) norm_sq += a * a;
    norm_sum += std::sqrt(norm_sq);
  }
  double hinge_sum = 0.0;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    hinge_sum += std::max(0.0, means[g][0] - means[g + 1][0]);
    for (std::size_t e = 1; e < 4; ++e)
      hinge_sum += std::max(0.0, means[g + 1][e] - means[g][e]);
  }
  terms.monotonicity = cfg.lambda_mono * hinge_sum;
  terms.concentration =
      cfg.lambda_conc * norm_sum / static_cast<double>(grid.size());
  return terms;
}

inline double loss(const MlpModel& model,
                   const std::vector<EfficacyRecord>& records,
                   const TrainConfig& cfg) {
  return loss_terms(model, records, cfg).total();
}

// Loss and its analytic gradient (backprop through all three terms).
inline std::pair<double, MlpModel> loss_gradient(
    const MlpModel& model, const std::vector<EfficacyRecord>& records,
    const TrainConfig& cfg) {
  validate(cfg);
  if (records.empty()) throw invalid_input_error("loss_gradient: no records");

  MlpModel grad;
  double value = 0.0;

  for (const auto& rec : records) {
    auto trace = detail::forward_trace(model, rec.similarity);
    DirichletParams params{trace.alpha};
    value -= dirichlet_log_pdf(rec.quality, params);
    auto interior = clamp_to_interior(rec.quality.as_array());
    double digamma_total = boost::math::digamma(params.total());
    std::array<double, 4> dalpha;
    for (std::size_t k = 0; k < 4; ++k)
      dalpha[k] = -(digamma_total - boost::math::digamma(params.alpha[k]) +
                    std::log(interior[k]));
    detail::backprop(model, trace, dalpha, grad);
  }

  auto grid = detail::penalty_grid(cfg.grid_points);
  std::size_t n_grid = grid.size();
  std::vector<detail::ForwardTrace> traces(n_grid);
  std::vector<std::array<double, 4>> means(n_grid);
  std::vector<double> totals(n_grid), norms(n_grid);
  for (std::size_t g = 0; g < n_grid; ++g) {
    traces[g] = detail::forward_trace(model, grid[g]);
    DirichletParams params{traces[g].alpha};
    means[g] = params.mean();
    totals[g] = params.total();
    double norm_sq = 0.0;
    for (double a : params.alpha) norm_sq += a * a;
    norms[g] = std::sqrt(norm_sq);
  }

  // d(monotonicity)/d(mean), accumulated per grid point.
  std::vector<std::array<double, 4>> dmean(n_grid, std::array<double, 4>{});
  double hinge_sum = 0.0;
  for (std::size_t g = 0; g + 1 < n_grid; ++g) {
    double tr_drop = means[g][0] - means[g + 1][0];
    if (tr_drop > 0.0) {
      hinge_sum += tr_drop;
      dmean[g][0] += cfg.lambda_mono;
      dmean[g + 1][0] -= cfg.lambda_mono;
    }
    for (std::size_t e = 1; e < 4; ++e) {
      double err_rise = means[g + 1][e] - means[g][e];
      if (err_rise > 0.0) {
        hinge_sum += err_rise;
        dmean[g + 1][e] += cfg.lambda_mono;
        dmean[g][e] -= cfg.lambda_mono;
      }
    }
  }
  value += cfg.lambda_mono * hinge_sum;

  double conc_scale = cfg.lambda_conc / static_cast<double>(n_grid);
  double norm_sum = 0.0;
  for (std::size_t g = 0; g < n_grid; ++g) {
    norm_sum += norms[g];
    // Chain rule through mean_k = alpha_k / total, plus the norm term.
    double weighted = 0.0;
    for (std::size_t k = 0; k < 4; ++k) weighted += dmean[g][k] * means[g][k];
    std::array<double, 4> dalpha;
    for (std::size_t k = 0; k < 4; ++k) {
      dalpha[k] = (dmean[g][k] - weighted) / totals[g];
      dalpha[k] += conc_scale * traces[g].alpha[k] / norms[g];
    }
    detail::backprop(model, traces[g], dalpha, grad);
  }
  value += conc_scale * norm_sum;

  return {value, grad};
}

// Seeded small random initialization: weights uniform on (-0.5, 0.5),
// biases zero.
inline MlpModel initial_model(std::uint64_t seed) {
  Rng rng(seed);
  MlpModel m;
  for (double& v : m.w1) v = rng.uniform(-0.5, 0.5);
  for (double& v : m.w2) v = rng.uniform(-0.5, 0.5);
  for (double& v : m.w3) v = rng.uniform(-0.5, 0.5);
  return m;
}

// Full-batch Adam; returns the parameter state with the lowest loss seen
// (the initial state counts, so training never makes things worse).
inline MlpModel train(const std::vector<EfficacyRecord>& records,
                      const TrainConfig& cfg) {
  validate(cfg);
  if (records.size() < 4)
    throw invalid_input_error("train: need >= 4 records");
  bool distinct = false;
  for (const auto& r : records)
    if (r.similarity != records.front().similarity) distinct = true;
  if (!distinct)
    throw invalid_input_error("train: records must span >= 2 distinct similarities");

  MlpModel model = initial_model(cfg.seed);
  auto params = flatten(model);
  auto best_params = params;
  double best_loss = loss(model, records, cfg);

  std::array<double, kMlpParamCount> m{}, v{};
  double rate = cfg.learning_rate;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double value;
    MlpModel grad_model;
    try {
      // Records were validated by the initial loss evaluation; a bad value
      // from here on means the parameters blew up.
      std::tie(value, grad_model) = loss_gradient(model, records, cfg);
    } catch (const invalid_input_error&) {
      value = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(value))
      throw training_diverged_error(
          "training diverged (non-finite loss) at epoch " +
              std::to_string(epoch),
          epoch);
    if (value < best_loss) {
      best_loss = value;
      best_params = params;
    }
    auto grad = flatten(grad_model);
    double bias1 = 1.0 - std::pow(cfg.beta1, epoch);
    double bias2 = 1.0 - std::pow(cfg.beta2, epoch);
    for (std::size_t i = 0; i < kMlpParamCount; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      params[i] -=
          rate * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + cfg.adam_epsilon);
    }
    rate *= cfg.lr_decay;
    model = unflatten(params);
  }
  double final_loss = loss(model, records, cfg);
  if (std::isfinite(final_loss) && final_loss < best_loss) {
    best_loss = final_loss;
    best_params = params;
  }
  return unflatten(best_params);
}

inline std::array<double, 4> sample_dirichlet(Rng& rng,
                                              const DirichletParams& params) {
  std::array<double, 4> draws;
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    draws[k] = rng.gamma(params.alpha[k]);
    sum += draws[k];
  }
  if (sum > 0.0) {
    for (double& d : draws) d /= sum;
  } else {
    draws = params.mean();  // total underflow at minuscule concentrations
  }
  return draws;
}

// Linear-interpolated empirical quantile of a sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  double h = p * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct IntervalEstimate {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

using PredictionSummary = std::array<IntervalEstimate, 4>;

// Analytic mean plus equal-tail empirical interval from Dirichlet samples
// drawn via normalized independent Gamma variates.
inline PredictionSummary predict_with_ci(const MlpModel& model,
                                         double similarity, int n_samples = 10000,
                                         double level = 0.90,
                                         std::uint64_t seed = 0) {
  if (n_samples < 1)
    throw invalid_input_error("predict_with_ci: n_samples must be >= 1");
  if (!(level > 0.0 && level < 1.0))
    throw invalid_input_error("predict_with_ci: level must lie in (0,1)");
  DirichletParams params = forward(model, similarity);
  auto mean = params.mean();

  std::array<std::vector<double>, 4> samples;
  for (auto& s : samples) s.reserve(n_samples);
  Rng rng(seed);
  for (int i = 0; i < n_samples; ++i) {
    auto q = sample_dirichlet(rng, params);
    for (std::size_t k = 0; k < 4; ++k) samples[k].push_back(q[k]);
  }

  double p_lo = (1.0 - level) / 2.0;
  PredictionSummary summary;
  for (std::size_t k = 0; k < 4; ++k) {
    std::sort(samples[k].begin(), samples[k].end());
    summary[k] = {mean[k], sorted_quantile(samples[k], p_lo),
                  sorted_quantile(samples[k], 1.0 - p_lo)};
  }
  return summary;
}

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"seed", cfg.seed},
          {"learning_rate", cfg.learning_rate},
          {"lr_decay", cfg.lr_decay},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"adam_epsilon", cfg.adam_epsilon},
          {"epochs", cfg.epochs},
          {"lambda_mono", cfg.lambda_mono},
          {"lambda_conc", cfg.lambda_conc},
          {"grid_points", cfg.grid_points}};
}

inline nlohmann::json model_to_json(const MlpModel& model,
                                    const TrainConfig& cfg) {
  return {{"layer_sizes", {1, 8, 8, 4}},
          {"activation", "softplus"},
          {"w1", model.w1},
          {"b1", model.b1},
          {"w2", model.w2},
          {"b2", model.b2},
          {"w3", model.w3},
          {"b3", model.b3},
          {"train_config", train_config_to_json(cfg)}};
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  try {
    auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (sizes != std::vector<int>{1, 8, 8, 4})
      throw config_validation_error("layer_sizes",
                                    "expected [1,8,8,4] architecture");
    MlpModel m;
    m.w1 = j.at("w1").get<std::array<double, 8>>();
    m.b1 = j.at("b1").get<std::array<double, 8>>();
    m.w2 = j.at("w2").get<std::array<double, 64>>();
    m.b2 = j.at("b2").get<std::array<double, 8>>();
    m.w3 = j.at("w3").get<std::array<double, 32>>();
    m.b3 = j.at("b3").get<std::array<double, 4>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error("model", e.what());
  }
}

struct CurvePoint {
  double sigma = 0.0;
  PredictionSummary summary;
};

// Predictions with intervals over an equispaced similarity grid on [0,1].
// Each grid point draws with its own derived seed.
inline std::vector<CurvePoint> prediction_curve(const MlpModel& model,
                                                int grid_points, int n_samples,
                                                double level,
                                                std::uint64_t seed) {
  auto grid = detail::penalty_grid(grid_points);
  std::vector<CurvePoint> curve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    curve[g].sigma = grid[g];
    curve[g].summary =
        predict_with_ci(model, grid[g], n_samples, level,
                        derive_seed(seed, static_cast<std::uint64_t>(g)));
  }
  return curve;
}

// 13-column curve: sigma, then mean/lo/hi per quality component.
inline std::string prediction_curve_csv(const std::vector<CurvePoint>& curve) {
  std::string csv =
      "sigma,mean_tr,lo_tr,hi_tr,mean_fpr,lo_fpr,hi_fpr,mean_fnr,lo_fnr,"
      "hi_fnr,mean_fdr,lo_fdr,hi_fdr\n";
  for (const auto& point : curve) {
    csv += format_double(point.sigma);
    for (const auto& est : point.summary) {
      csv += ',';
      csv += format_double(est.mean);
      csv += ',';
      csv += format_double(est.lower);
      csv += ',';
      csv += format_double(est.upper);
    }
    csv += '\n';
  }
  return csv;
}

}  // namespace evit
