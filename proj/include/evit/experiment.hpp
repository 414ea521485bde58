#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "evit/efficacy.hpp"
#include "evit/errors.hpp"
#include "evit/io.hpp"
#include "evit/population.hpp"
#include "evit/random.hpp"
#include "evit/similarity.hpp"
#include "evit/surrogate.hpp"
#include "evit/svg.hpp"
#include "evit/transfer.hpp"
#include "evit/valuation.hpp"

namespace evit {

// Everything one experiment run needs: population source, stage configs,
// utilities, output directory, and the global seed that all stage seeds
// derive from.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string population_source = "builtin";  // "builtin" or a JSON file path
  std::filesystem::path output_dir = "evit-out";
  GeneratorConfig generator;
  TrainConfig training;
  ValuationConfig valuation;
  UtilityTable utilities;
};

namespace detail {

inline void require_known_keys(const nlohmann::json& j,
                               const std::string& section,
                               std::initializer_list<const char*> keys) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys)
      if (key == k) known = true;
    if (!known)
      throw config_validation_error(
          section.empty() ? key : section + "." + key, "unknown field");
  }
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& section,
            const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error(section.empty() ? key : section + "." + key,
                                  e.what());
  }
}

inline FeaturePoint get_shift(const nlohmann::json& j, const char* key,
                              FeaturePoint fallback) {
  if (!j.contains(key)) return fallback;
  try {
    auto arr = j.at(key).get<std::array<double, 2>>();
    return arr;
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error(std::string("generator.damage_shifts.") + key,
                                  e.what());
  }
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  using detail::get_field;
  detail::require_known_keys(j, "", {"seed", "population", "output_dir",
                                     "generator", "training", "valuation",
                                     "utilities"});
  ExperimentConfig cfg;
  cfg.seed = get_field<std::uint64_t>(j, "", "seed", cfg.seed);
  cfg.population_source =
      get_field<std::string>(j, "", "population", cfg.population_source);
  if (cfg.population_source.empty())
    throw config_validation_error("population",
                                  "must be 'builtin' or a file path");
  cfg.output_dir = get_field<std::string>(j, "", "output_dir",
                                          cfg.output_dir.string());

  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    detail::require_known_keys(
        g, "generator", {"samples_per_class", "noise_fraction", "damage_shifts"});
    cfg.generator.samples_per_class = get_field<int>(
        g, "generator", "samples_per_class", cfg.generator.samples_per_class);
    cfg.generator.noise_fraction = get_field<double>(
        g, "generator", "noise_fraction", cfg.generator.noise_fraction);
    if (g.contains("damage_shifts")) {
      const auto& shifts = g.at("damage_shifts");
      detail::require_known_keys(shifts, "generator.damage_shifts",
                                 {"wing", "tailplane", "fuselage"});
      auto& table = cfg.generator.damage_shifts.shifts;
      table[1] = detail::get_shift(shifts, "wing", table[1]);
      table[2] = detail::get_shift(shifts, "tailplane", table[2]);
      table[3] = detail::get_shift(shifts, "fuselage", table[3]);
    }
  }
  validate(cfg.generator);

  if (j.contains("training")) {
    const auto& t = j.at("training");
    detail::require_known_keys(
        t, "training",
        {"learning_rate", "lr_decay", "epochs", "lambda_mono", "lambda_conc",
         "grid_points", "beta1", "beta2", "adam_epsilon"});
    cfg.training.learning_rate = get_field<double>(
        t, "training", "learning_rate", cfg.training.learning_rate);
    cfg.training.lr_decay = get_field<double>(t, "training", "lr_decay",
                                              cfg.training.lr_decay);
    cfg.training.epochs = get_field<int>(t, "training", "epochs",
                                         cfg.training.epochs);
    cfg.training.lambda_mono = get_field<double>(t, "training", "lambda_mono",
                                                 cfg.training.lambda_mono);
    cfg.training.lambda_conc = get_field<double>(t, "training", "lambda_conc",
                                                 cfg.training.lambda_conc);
    cfg.training.grid_points = get_field<int>(t, "training", "grid_points",
                                              cfg.training.grid_points);
    cfg.training.beta1 = get_field<double>(t, "training", "beta1",
                                           cfg.training.beta1);
    cfg.training.beta2 = get_field<double>(t, "training", "beta2",
                                           cfg.training.beta2);
    cfg.training.adam_epsilon = get_field<double>(
        t, "training", "adam_epsilon", cfg.training.adam_epsilon);
  }
  validate(cfg.training);

  if (j.contains("valuation")) {
    const auto& v = j.at("valuation");
    detail::require_known_keys(v, "valuation",
                               {"target_size", "n_classes", "transfer_cost",
                                "null_transfer_cost", "n_samples", "ci_level"});
    cfg.valuation.target_size = get_field<int>(v, "valuation", "target_size",
                                               cfg.valuation.target_size);
    cfg.valuation.n_classes = get_field<int>(v, "valuation", "n_classes",
                                             cfg.valuation.n_classes);
    cfg.valuation.transfer_cost = get_field<double>(
        v, "valuation", "transfer_cost", cfg.valuation.transfer_cost);
    cfg.valuation.null_transfer_cost =
        get_field<double>(v, "valuation", "null_transfer_cost",
                          cfg.valuation.null_transfer_cost);
    cfg.valuation.n_samples = get_field<int>(v, "valuation", "n_samples",
                                             cfg.valuation.n_samples);
    cfg.valuation.ci_level = get_field<double>(v, "valuation", "ci_level",
                                               cfg.valuation.ci_level);
  }
  validate(cfg.valuation);

  if (j.contains("utilities")) {
    const auto& u = j.at("utilities");
    detail::require_known_keys(
        u, "utilities", {"true", "false_positive", "false_negative",
                         "false_damage"});
    cfg.utilities.u_true = get_field<double>(u, "utilities", "true",
                                             cfg.utilities.u_true);
    cfg.utilities.u_false_positive = get_field<double>(
        u, "utilities", "false_positive", cfg.utilities.u_false_positive);
    cfg.utilities.u_false_negative = get_field<double>(
        u, "utilities", "false_negative", cfg.utilities.u_false_negative);
    cfg.utilities.u_false_damage = get_field<double>(
        u, "utilities", "false_damage", cfg.utilities.u_false_damage);
  }
  validate(cfg.utilities);

  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error(path.string(), e.what());
  }
  return experiment_config_from_json(j);
}

// Seed precedence: --seed flag, then the EVIT_SEED environment variable,
// then the config file value.
inline std::uint64_t resolve_seed(std::uint64_t config_seed,
                                  const char* env_value,
                                  std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (env_value && *env_value) {
    try {
      return std::stoull(env_value);
    } catch (const std::exception&) {
      throw config_validation_error("EVIT_SEED",
                                    "must be an unsigned integer, got '" +
                                        std::string(env_value) + "'");
    }
  }
  return config_seed;
}

// Artifact locations under the output directory.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path lock() const { return root / ".evit.lock"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path dataset_dir() const { return root / "datasets"; }
  std::filesystem::path dataset(const std::string& id) const {
    return dataset_dir() / (id + ".csv");
  }
  std::filesystem::path transfers() const { return root / "transfers.csv"; }
  std::filesystem::path weights() const { return root / "weights.json"; }
  std::filesystem::path model() const { return root / "model.json"; }
  std::filesystem::path prediction_curve() const {
    return root / "prediction_curve.csv";
  }
  std::filesystem::path evit_curve() const { return root / "evit_curve.csv"; }
  std::filesystem::path plot_dir() const { return root / "plots"; }
  std::filesystem::path plot(const std::string& name) const {
    return plot_dir() / (name + ".svg");
  }
  std::filesystem::path recommendation() const {
    return root / "recommendation.json";
  }
};

inline std::vector<StructureAttributes> load_population(
    const ExperimentConfig& cfg) {
  if (cfg.population_source == "builtin") return builtin_population();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(cfg.population_source));
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error(cfg.population_source, e.what());
  }
  return population_from_json(j);
}

// In-memory results of the pipeline stages. Stages are pure functions of
// the config, so any subcommand can recompute its prerequisites.
struct PipelineState {
  EncodedPopulation population;
  std::vector<ModalDataset> datasets;
  std::vector<TransferRecord> records;  // similarity under equal weights
  WeightOptimizationResult weights;
  std::vector<EfficacyRecord> efficacy_records;  // similarity under optimized weights
  MlpModel model;
  std::vector<CurvePoint> curve;
  std::vector<EvitCurvePoint> evit_points;
};

inline std::uint64_t dataset_seed(const ExperimentConfig& cfg,
                                  const std::string& structure_id) {
  return derive_seed(cfg.seed, "data:" + structure_id);
}

inline void compute_generate(const ExperimentConfig& cfg, PipelineState& state) {
  state.population = encode_population(load_population(cfg));
  state.datasets.clear();
  state.datasets.reserve(state.population.size());
  for (const auto& attrs : state.population.members) {
    GeneratorConfig generator = cfg.generator;
    generator.seed = dataset_seed(cfg, attrs.id);
    state.datasets.push_back(generate_dataset(attrs, generator));
  }
}

inline void compute_transfers(const ExperimentConfig& cfg, PipelineState& state) {
  compute_generate(cfg, state);
  auto equal_sim =
      similarity_matrix(state.population.vectors, SimilarityWeights::equal());
  state.records = run_pairwise_transfers(
      state.datasets,
      [&](std::size_t i, std::size_t j) { return equal_sim.at(i, j); });
}

inline void compute_weights(const ExperimentConfig& cfg, PipelineState& state) {
  compute_transfers(cfg, state);
  state.weights = optimize_weights(state.records, state.population,
                                   derive_seed(cfg.seed, "weights"));
}

inline void compute_fit(const ExperimentConfig& cfg, PipelineState& state) {
  compute_weights(cfg, state);
  auto optimized_sim =
      similarity_matrix(state.population.vectors, state.weights.weights);
  state.efficacy_records.clear();
  state.efficacy_records.reserve(state.records.size());
  for (const auto& record : state.records) {
    std::size_t s = state.population.index_of(record.source_id);
    std::size_t t = state.population.index_of(record.target_id);
    state.efficacy_records.push_back(
        {optimized_sim.at(s, t), record.quality});
  }
  TrainConfig training = cfg.training;
  training.seed = derive_seed(cfg.seed, "train");
  state.model = train(state.efficacy_records, training);
  state.curve = prediction_curve(state.model, cfg.training.grid_points,
                                 cfg.valuation.n_samples,
                                 cfg.valuation.ci_level,
                                 derive_seed(cfg.seed, "curve"));
}

inline void compute_evit_curve(const ExperimentConfig& cfg,
                               PipelineState& state) {
  compute_fit(cfg, state);
  state.evit_points =
      evit_curve(state.model, cfg.utilities, cfg.valuation,
                 cfg.training.grid_points, derive_seed(cfg.seed, "evit-curve"));
}

inline nlohmann::json manifest_json(const ExperimentConfig& cfg,
                                    const PipelineState& state,
                                    const ArtifactPaths& paths) {
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& d : state.datasets) {
    // Paths are relative to the output directory so reruns into different
    // directories stay byte-identical.
    auto rel = paths.dataset(d.structure_id).lexically_relative(paths.root);
    datasets.push_back({{"id", d.structure_id},
                        {"path", rel.generic_string()},
                        {"rows", d.size()},
                        {"seed", dataset_seed(cfg, d.structure_id)}});
  }
  nlohmann::json population = nlohmann::json::array();
  for (const auto& s : state.population.members)
    population.push_back(structure_to_json(s));
  return {{"seed", cfg.seed},
          {"population", std::move(population)},
          {"samples_per_class", cfg.generator.samples_per_class},
          {"noise_fraction", cfg.generator.noise_fraction},
          {"datasets", std::move(datasets)}};
}

inline void write_datasets(const ExperimentConfig& cfg,
                           const PipelineState& state) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.dataset_dir());
  for (const auto& dataset : state.datasets)
    write_text_file(paths.dataset(dataset.structure_id),
                    dataset_to_csv(dataset));
  write_text_file(paths.manifest(), manifest_json(cfg, state, paths).dump(2) + "\n");
}

namespace detail {

struct PlotSeries {
  std::vector<double> grid, mean, lo, hi;
};

inline PlotSeries curve_component(const std::vector<CurvePoint>& curve,
                                  std::size_t k) {
  PlotSeries s;
  for (const auto& point : curve) {
    s.grid.push_back(point.sigma);
    s.mean.push_back(point.summary[k].mean);
    s.lo.push_back(point.summary[k].lower);
    s.hi.push_back(point.summary[k].upper);
  }
  return s;
}

}  // namespace detail

inline void write_quality_plots(const PipelineState& state,
                                const ArtifactPaths& paths) {
  static constexpr std::array<const char*, 4> names = {
      "quality_tr", "quality_fpr", "quality_fnr", "quality_fdr"};
  static constexpr std::array<const char*, 4> labels = {
      "true prediction rate", "false-positive rate", "false-negative rate",
      "false-damage rate"};
  std::filesystem::create_directories(paths.plot_dir());
  for (std::size_t k = 0; k < 4; ++k) {
    auto series = detail::curve_component(state.curve, k);
    SvgPlot plot(std::string(labels[k]) + " vs similarity (surrogate data)",
                 "similarity", labels[k], 0.0, 1.0, 0.0, 1.0);
    plot.add_band(series.grid, series.lo, series.hi, "#5588cc");
    plot.add_line(series.grid, series.mean, "#224488");
    std::vector<double> xs, ys;
    for (const auto& rec : state.efficacy_records) {
      xs.push_back(rec.similarity);
      ys.push_back(rec.quality.as_array()[k]);
    }
    plot.add_points(xs, ys, "#cc3333");
    write_text_file(paths.plot(names[k]), plot.render());
  }
}

inline void write_evit_plot(const PipelineState& state,
                            const ArtifactPaths& paths) {
  std::filesystem::create_directories(paths.plot_dir());
  std::vector<double> xs, mean, lo, hi;
  double y_min = 0.0, y_max = 0.0;
  for (const auto& point : state.evit_points) {
    xs.push_back(point.sigma);
    mean.push_back(point.result.value);
    lo.push_back(point.result.lower);
    hi.push_back(point.result.upper);
    y_min = std::min(y_min, point.result.lower);
    y_max = std::max(y_max, point.result.upper);
  }
  double pad = 0.05 * std::max(1.0, y_max - y_min);
  SvgPlot plot("expected value of information transfer (surrogate data)",
               "similarity", "EVIT (utiles)", 0.0, 1.0, y_min - pad,
               y_max + pad);
  plot.add_band(xs, lo, hi, "#5588cc");
  plot.add_line(xs, mean, "#224488");
  write_text_file(paths.plot("evit"), plot.render());
}

inline void cmd_generate(const ExperimentConfig& cfg) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.root);
  DirectoryLock lock(paths.lock());
  PipelineState state;
  compute_generate(cfg, state);
  write_datasets(cfg, state);
}

inline void cmd_transfers(const ExperimentConfig& cfg) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.root);
  DirectoryLock lock(paths.lock());
  PipelineState state;
  compute_transfers(cfg, state);
  write_text_file(paths.transfers(), transfer_records_to_csv(state.records));
}

inline void cmd_weights(const ExperimentConfig& cfg) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.root);
  DirectoryLock lock(paths.lock());
  PipelineState state;
  compute_weights(cfg, state);
  write_text_file(paths.weights(),
                  weights_to_json(state.weights).dump(2) + "\n");
}

inline void cmd_fit(const ExperimentConfig& cfg) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.root);
  DirectoryLock lock(paths.lock());
  PipelineState state;
  compute_fit(cfg, state);
  TrainConfig training = cfg.training;
  training.seed = derive_seed(cfg.seed, "train");
  write_text_file(paths.model(),
                  model_to_json(state.model, training).dump(2) + "\n");
  write_text_file(paths.prediction_curve(), prediction_curve_csv(state.curve));
}

inline void cmd_evit(const ExperimentConfig& cfg) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.root);
  DirectoryLock lock(paths.lock());
  PipelineState state;
  compute_evit_curve(cfg, state);
  write_text_file(paths.evit_curve(), evit_curve_csv(state.evit_points));
}

struct PipelineSummary {
  std::size_t population_size = 0;
  std::size_t record_count = 0;
  double achieved_r = 0.0;
  std::array<double, 4> weights{};
  double evit_at_full_similarity = 0.0;
};

// Runs every stage and writes the full artifact set. Failures abort with
// the stage name attached; an interrupted artifact keeps its .partial name.
inline PipelineSummary run_pipeline(const ExperimentConfig& cfg,
                                    std::ostream& log) {
  ArtifactPaths paths{cfg.output_dir};
  std::filesystem::create_directories(paths.root);
  DirectoryLock lock(paths.lock());

  PipelineState state;
  auto stage = [&](const char* name, auto&& body) {
    log << "[" << name << "] ";
    log.flush();
    try {
      body();
    } catch (const std::exception& e) {
      log << "failed\n";
      throw error("pipeline stage '" + std::string(name) +
                  "' failed: " + e.what());
    }
    log << "done\n";
  };

  stage("generate", [&] {
    compute_generate(cfg, state);
    write_datasets(cfg, state);
  });
  stage("transfers", [&] {
    auto equal_sim = similarity_matrix(state.population.vectors,
                                       SimilarityWeights::equal());
    state.records = run_pairwise_transfers(
        state.datasets,
        [&](std::size_t i, std::size_t j) { return equal_sim.at(i, j); });
    write_text_file(paths.transfers(), transfer_records_to_csv(state.records));
  });
  stage("weights", [&] {
    state.weights = optimize_weights(state.records, state.population,
                                     derive_seed(cfg.seed, "weights"));
    write_text_file(paths.weights(),
                    weights_to_json(state.weights).dump(2) + "\n");
  });
  stage("fit", [&] {
    auto optimized_sim =
        similarity_matrix(state.population.vectors, state.weights.weights);
    state.efficacy_records.clear();
    for (const auto& record : state.records) {
      std::size_t s = state.population.index_of(record.source_id);
      std::size_t t = state.population.index_of(record.target_id);
      state.efficacy_records.push_back({optimized_sim.at(s, t), record.quality});
    }
    TrainConfig training = cfg.training;
    training.seed = derive_seed(cfg.seed, "train");
    state.model = train(state.efficacy_records, training);
    state.curve = prediction_curve(state.model, cfg.training.grid_points,
                                   cfg.valuation.n_samples,
                                   cfg.valuation.ci_level,
                                   derive_seed(cfg.seed, "curve"));
    write_text_file(paths.model(),
                    model_to_json(state.model, training).dump(2) + "\n");
    write_text_file(paths.prediction_curve(),
                    prediction_curve_csv(state.curve));
  });
  stage("evit", [&] {
    state.evit_points = evit_curve(state.model, cfg.utilities, cfg.valuation,
                                   cfg.training.grid_points,
                                   derive_seed(cfg.seed, "evit-curve"));
    write_text_file(paths.evit_curve(), evit_curve_csv(state.evit_points));
  });
  stage("plots", [&] {
    write_quality_plots(state, paths);
    write_evit_plot(state, paths);
  });

  PipelineSummary summary;
  summary.population_size = state.population.size();
  summary.record_count = state.records.size();
  summary.achieved_r = state.weights.pearson;
  summary.weights = state.weights.weights.w;
  summary.evit_at_full_similarity = state.evit_points.back().result.value;

  log << "\n";
  log << "  structures            " << summary.population_size << "\n";
  log << "  transfer records      " << summary.record_count << "\n";
  log << "  achieved pearson r    " << format_double(summary.achieved_r) << "\n";
  log << "  weights (t,s,E,rho)   " << format_double(summary.weights[0]) << ", "
      << format_double(summary.weights[1]) << ", "
      << format_double(summary.weights[2]) << ", "
      << format_double(summary.weights[3]) << "\n";
  log << "  EVIT at similarity 1  "
      << format_double(summary.evit_at_full_similarity) << "\n";
  log << "  target size M         " << cfg.valuation.target_size << "\n";
  log << "  utilities (T,FP,FN,FD) " << format_double(cfg.utilities.u_true)
      << ", " << format_double(cfg.utilities.u_false_positive) << ", "
      << format_double(cfg.utilities.u_false_negative) << ", "
      << format_double(cfg.utilities.u_false_damage) << "\n";
  log << "  samples per class     " << cfg.generator.samples_per_class << "\n";
  log << "  noise fraction        " << format_double(cfg.generator.noise_fraction)
      << "\n";
  log << "  training epochs       " << cfg.training.epochs << "\n";
  log << "  output directory      " << paths.root.string() << "\n";
  return summary;
}

// Scores every population member as a source for an external target and
// applies the strategy optimizer. Requires fit artifacts on disk.
inline nlohmann::json run_recommend(const ExperimentConfig& cfg,
                                    const std::filesystem::path& target_path,
                                    std::ostream& log) {
  ArtifactPaths paths{cfg.output_dir};
  for (const auto& required : {paths.model(), paths.weights()}) {
    if (!std::filesystem::exists(required))
      throw io_error(
          "missing model artifact; run the 'fit' (or 'pipeline') subcommand "
          "first to create it",
          required.string());
  }
  MlpModel model;
  WeightOptimizationResult weights;
  try {
    model = model_from_json(nlohmann::json::parse(read_text_file(paths.model())));
    weights = weights_from_json(
        nlohmann::json::parse(read_text_file(paths.weights())));
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error("artifacts", e.what());
  }

  nlohmann::json target_json;
  try {
    target_json = nlohmann::json::parse(read_text_file(target_path));
  } catch (const nlohmann::json::exception& e) {
    throw config_validation_error(target_path.string(), e.what());
  }
  StructureAttributes target = structure_from_json(target_json);

  auto population = encode_population(load_population(cfg));
  AttributeScaler scaler = attribute_scaler(population.members);
  AttributeVector target_vector = scaler.encode(target);

  // Normalize by the population's maximum pairwise distance (the scale the
  // weights were fitted on); similarities to an outlying target clamp at 0.
  double max_distance = 0.0;
  for (std::size_t i = 0; i < population.size(); ++i)
    for (std::size_t j = i + 1; j < population.size(); ++j)
      max_distance = std::max(
          max_distance, weighted_distance(population.vectors[i],
                                          population.vectors[j],
                                          weights.weights));
  if (!(max_distance > 0.0))
    throw degenerate_population_error(
        "population has zero attribute spread under the fitted weights");

  std::vector<SourceCandidate> candidates;
  for (std::size_t i = 0; i < population.size(); ++i) {
    double d = weighted_distance(target_vector, population.vectors[i],
                                 weights.weights);
    double similarity = std::clamp(1.0 - d / max_distance, 0.0, 1.0);
    candidates.push_back({population.members[i].id, similarity,
                          cfg.valuation.transfer_cost});
  }

  StrategyDecision decision =
      optimize_strategy(model, candidates, cfg.utilities, cfg.valuation,
                        derive_seed(cfg.seed, "recommend"));
  nlohmann::json report = strategy_decision_to_json(decision, target.id);

  DirectoryLock lock(paths.lock());
  write_text_file(paths.recommendation(), report.dump(2) + "\n");
  if (decision.chosen.source)
    log << "chosen source: " << *decision.chosen.source << " (total "
        << format_double(decision.chosen_total) << ")\n";
  else
    log << "chosen strategy: no transfer (total "
        << format_double(decision.chosen_total) << ")\n";
  return report;
}

}  // namespace evit
