#include "evit/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

using namespace evit;
namespace fs = std::filesystem;

namespace {

double softplus_inv(double y) { return y + std::log(-std::expm1(-y)); }

MlpModel monotone_model() {
  MlpModel m;
  for (std::size_t k = 1; k < 4; ++k) m.b3[k] = softplus_inv(0.05);
  m.w1[0] = 2.0;
  m.w2[0] = 2.0;
  m.w3[0] = 3.0;
  return m;
}

struct TempDir {
  fs::path path;

  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("evit_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig fast_config(const fs::path& out, std::uint64_t seed = 7) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.output_dir = out;
  cfg.generator.samples_per_class = 10;
  cfg.generator.noise_fraction = 0.02;
  cfg.training.epochs = 150;
  cfg.training.grid_points = 21;
  cfg.valuation.n_samples = 300;
  return cfg;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

int run_cli(const std::string& args) {
  std::string cmd = std::string(EVIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(ExperimentConfig, ParsesFullDocument) {
  nlohmann::json j = {
      {"seed", 99},
      {"population", "builtin"},
      {"output_dir", "/tmp/somewhere"},
      {"generator",
       {{"samples_per_class", 25},
        {"noise_fraction", 0.01},
        {"damage_shifts",
         {{"wing", {-0.05, -0.02}},
          {"tailplane", {-0.01, -0.04}},
          {"fuselage", {-0.02, -0.02}}}}}},
      {"training",
       {{"learning_rate", 0.005},
        {"lr_decay", 0.9995},
        {"epochs", 400},
        {"lambda_mono", 2.0},
        {"lambda_conc", 0.01},
        {"grid_points", 51}}},
      {"valuation",
       {{"target_size", 100}, {"transfer_cost", -5.0}, {"n_samples", 500}}},
      {"utilities",
       {{"true", 4.0},
        {"false_positive", -8.0},
        {"false_negative", -40.0},
        {"false_damage", -4.0}}}};
  auto cfg = experiment_config_from_json(j);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.generator.samples_per_class, 25);
  EXPECT_DOUBLE_EQ(cfg.generator.damage_shifts.shifts[1][0], -0.05);
  EXPECT_DOUBLE_EQ(cfg.training.lr_decay, 0.9995);
  EXPECT_EQ(cfg.training.grid_points, 51);
  EXPECT_EQ(cfg.valuation.target_size, 100);
  EXPECT_DOUBLE_EQ(cfg.utilities.u_true, 4.0);
}

TEST(ExperimentConfig, DefaultsWhenKeysAbsent) {
  auto cfg = experiment_config_from_json(nlohmann::json::object());
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_EQ(cfg.population_source, "builtin");
  EXPECT_EQ(cfg.generator.samples_per_class, 50);
  EXPECT_DOUBLE_EQ(cfg.generator.noise_fraction, 0.005);
  EXPECT_DOUBLE_EQ(cfg.training.learning_rate, 1e-2);
  EXPECT_EQ(cfg.training.epochs, 5000);
  EXPECT_EQ(cfg.training.grid_points, 101);
  EXPECT_EQ(cfg.valuation.target_size, 200);
  EXPECT_DOUBLE_EQ(cfg.utilities.u_false_negative, -50.0);
}

TEST(ExperimentConfig, RejectsUnknownAndInvalidFields) {
  EXPECT_THROW(experiment_config_from_json({{"sed", 1}}),
               config_validation_error);
  EXPECT_THROW(
      experiment_config_from_json({{"generator", {{"noise", 0.01}}}}),
      config_validation_error);

  try {
    experiment_config_from_json(
        {{"generator", {{"noise_fraction", 0.5}}}});
    FAIL() << "expected config_validation_error";
  } catch (const config_validation_error& e) {
    EXPECT_EQ(e.field(), "noise_fraction");
  }

  EXPECT_THROW(experiment_config_from_json({{"utilities", {{"true", -2.0}}}}),
               config_validation_error);
}

TEST(ExperimentConfig, SeedPrecedence) {
  EXPECT_EQ(resolve_seed(10, nullptr, std::nullopt), 10u);
  EXPECT_EQ(resolve_seed(10, "55", std::nullopt), 55u);
  EXPECT_EQ(resolve_seed(10, "55", 99), 99u);
  EXPECT_EQ(resolve_seed(10, "", std::nullopt), 10u);
  EXPECT_THROW(resolve_seed(10, "not-a-number", std::nullopt),
               config_validation_error);
}

TEST(Pipeline, WritesFullArtifactSet) {
  TempDir dir("artifacts");
  auto cfg = fast_config(dir.path / "out");
  std::ostringstream log;
  auto summary = run_pipeline(cfg, log);

  EXPECT_EQ(summary.population_size, 8u);
  EXPECT_EQ(summary.record_count, 56u);

  ArtifactPaths paths{cfg.output_dir};
  for (const auto& p :
       {paths.manifest(), paths.transfers(), paths.weights(), paths.model(),
        paths.prediction_curve(), paths.evit_curve(), paths.plot("quality_tr"),
        paths.plot("quality_fpr"), paths.plot("quality_fnr"),
        paths.plot("quality_fdr"), paths.plot("evit")}) {
    EXPECT_TRUE(fs::exists(p)) << p;
  }
  for (const auto& s : builtin_population())
    EXPECT_TRUE(fs::exists(paths.dataset(s.id)));

  auto transfers = slurp(paths.transfers());
  EXPECT_EQ(std::count(transfers.begin(), transfers.end(), '\n'), 57);
  EXPECT_FALSE(fs::exists(paths.lock()));  // released on completion

  auto manifest = nlohmann::json::parse(slurp(paths.manifest()));
  EXPECT_EQ(manifest.at("datasets").size(), 8u);
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 7u);

  // The plots are labelled as surrogate-data results.
  auto svg = slurp(paths.plot("quality_tr"));
  EXPECT_NE(svg.find("surrogate data"), std::string::npos);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
}

TEST(Pipeline, RerunsAreByteIdentical) {
  TempDir dir("determinism");
  auto cfg1 = fast_config(dir.path / "a");
  auto cfg2 = fast_config(dir.path / "b");
  std::ostringstream log;
  run_pipeline(cfg1, log);
  run_pipeline(cfg2, log);

  ArtifactPaths a{cfg1.output_dir}, b{cfg2.output_dir};
  EXPECT_EQ(slurp(a.transfers()), slurp(b.transfers()));
  EXPECT_EQ(slurp(a.weights()), slurp(b.weights()));
  EXPECT_EQ(slurp(a.model()), slurp(b.model()));
  EXPECT_EQ(slurp(a.prediction_curve()), slurp(b.prediction_curve()));
  EXPECT_EQ(slurp(a.evit_curve()), slurp(b.evit_curve()));
  EXPECT_EQ(slurp(a.manifest()), slurp(b.manifest()));
  EXPECT_EQ(slurp(a.dataset("G1")), slurp(b.dataset("G1")));
}

TEST(Pipeline, StageFailureNamesTheStage) {
  TempDir dir("stagefail");
  // Two structures with identical attributes: encoding degenerates and the
  // transfers stage cannot build a similarity matrix.
  auto g1 = builtin_population()[0];
  auto clone = g1;
  clone.id = "G1b";
  nlohmann::json pop = {structure_to_json(g1), structure_to_json(clone)};
  write_text_file(dir.path / "pop.json", pop.dump(2));

  auto cfg = fast_config(dir.path / "out");
  cfg.population_source = (dir.path / "pop.json").string();
  std::ostringstream log;
  try {
    run_pipeline(cfg, log);
    FAIL() << "expected the transfers stage to fail";
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("stage 'transfers'"),
              std::string::npos)
        << e.what();
  }
  EXPECT_FALSE(fs::exists(ArtifactPaths{cfg.output_dir}.lock()));
}

TEST(Pipeline, GenerateWritesCountedRows) {
  TempDir dir("generate");
  auto cfg = fast_config(dir.path / "out");
  cmd_generate(cfg);
  ArtifactPaths paths{cfg.output_dir};
  for (const auto& s : builtin_population()) {
    auto csv = slurp(paths.dataset(s.id));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
              4 * cfg.generator.samples_per_class + 1)
        << s.id;
  }
}

TEST(Pipeline, LockedDirectoryRefusesToRun) {
  TempDir dir("locked");
  auto cfg = fast_config(dir.path / "out");
  fs::create_directories(cfg.output_dir);
  ArtifactPaths paths{cfg.output_dir};
  {
    std::ofstream lock(paths.lock());
    lock << "held\n";
  }
  EXPECT_THROW(cmd_generate(cfg), io_error);
  fs::remove(paths.lock());
  EXPECT_NO_THROW(cmd_generate(cfg));
}

TEST(Recommend, RanksByFittedSimilarityAndPicksBest) {
  TempDir dir("recommend");
  auto cfg = fast_config(dir.path / "out");
  fs::create_directories(cfg.output_dir);
  ArtifactPaths paths{cfg.output_dir};

  TrainConfig echo;
  write_text_file(paths.model(),
                  model_to_json(monotone_model(), echo).dump(2) + "\n");
  write_text_file(
      paths.weights(),
      weights_to_json({SimilarityWeights::equal(), 0.9}).dump(2) + "\n");

  auto g8 = builtin_population()[7];
  g8.id = "T1";
  write_text_file(dir.path / "target.json", structure_to_json(g8).dump(2));

  std::ostringstream log;
  auto report = run_recommend(cfg, dir.path / "target.json", log);

  EXPECT_EQ(report.at("target_id"), "T1");
  EXPECT_EQ(report.at("chosen").at("source"), "G8");
  bool found_g8 = false;
  for (const auto& row : report.at("candidates")) {
    if (row.at("source").is_string() && row.at("source") == "G8") {
      found_g8 = true;
      EXPECT_DOUBLE_EQ(row.at("similarity").get<double>(), 1.0);
    }
  }
  EXPECT_TRUE(found_g8);
  EXPECT_TRUE(fs::exists(paths.recommendation()));
}

TEST(Recommend, MissingModelArtifactNamesExpectedPath) {
  TempDir dir("recommend_missing");
  auto cfg = fast_config(dir.path / "out");
  auto g8 = builtin_population()[7];
  write_text_file(dir.path / "target.json", structure_to_json(g8).dump(2));
  try {
    std::ostringstream log;
    run_recommend(cfg, dir.path / "target.json", log);
    FAIL() << "expected io_error";
  } catch (const io_error& e) {
    EXPECT_EQ(e.path(), ArtifactPaths{cfg.output_dir}.model().string());
  }
}

TEST(Recommend, RejectsUnknownTopologyInTarget) {
  TempDir dir("recommend_bad");
  auto cfg = fast_config(dir.path / "out");
  fs::create_directories(cfg.output_dir);
  ArtifactPaths paths{cfg.output_dir};
  TrainConfig echo;
  write_text_file(paths.model(),
                  model_to_json(monotone_model(), echo).dump(2) + "\n");
  write_text_file(
      paths.weights(),
      weights_to_json({SimilarityWeights::equal(), 0.9}).dump(2) + "\n");
  write_text_file(dir.path / "target.json",
                  R"({"id":"T","topology":"canard","scale":"small",)"
                  R"("material":"steel","youngs_modulus_gpa":200,)"
                  R"("density_kg_m3":8000})");
  std::ostringstream log;
  EXPECT_THROW(run_recommend(cfg, dir.path / "target.json", log),
               config_validation_error);
}

TEST(Pipeline, PopulationFileSource) {
  TempDir dir("popfile");
  nlohmann::json pop = nlohmann::json::array();
  for (const auto& s : builtin_population()) pop.push_back(structure_to_json(s));
  write_text_file(dir.path / "pop.json", pop.dump(2));

  auto cfg = fast_config(dir.path / "out");
  cfg.population_source = (dir.path / "pop.json").string();
  PipelineState state;
  compute_generate(cfg, state);
  EXPECT_EQ(state.population.size(), 8u);
  EXPECT_EQ(state.datasets.size(), 8u);

  cfg.population_source = (dir.path / "missing.json").string();
  EXPECT_THROW(compute_generate(cfg, state), io_error);
}

TEST(Cli, PipelineExitCodesAndDeterminism) {
  TempDir dir("cli");
  nlohmann::json cfg = {
      {"seed", 11},
      {"generator", {{"samples_per_class", 8}, {"noise_fraction", 0.02}}},
      {"training", {{"epochs", 60}, {"grid_points", 21}}},
      {"valuation", {{"n_samples", 100}}}};
  write_text_file(dir.path / "cfg.json", cfg.dump(2));

  auto out1 = (dir.path / "out1").string();
  auto out2 = (dir.path / "out2").string();
  ASSERT_EQ(run_cli("pipeline --config " + (dir.path / "cfg.json").string() +
                    " --out " + out1),
            0);
  ASSERT_EQ(run_cli("pipeline --config " + (dir.path / "cfg.json").string() +
                    " --out " + out2),
            0);
  EXPECT_EQ(slurp(fs::path(out1) / "transfers.csv"),
            slurp(fs::path(out2) / "transfers.csv"));
  EXPECT_EQ(slurp(fs::path(out1) / "evit_curve.csv"),
            slurp(fs::path(out2) / "evit_curve.csv"));

  // Recommend against the artifacts that the pipeline just wrote.
  auto g8 = builtin_population()[7];
  g8.id = "T9";
  write_text_file(dir.path / "target.json", structure_to_json(g8).dump(2));
  EXPECT_EQ(run_cli("recommend --config " + (dir.path / "cfg.json").string() +
                    " --out " + out1 + " --target " +
                    (dir.path / "target.json").string()),
            0);
  EXPECT_TRUE(fs::exists(fs::path(out1) / "recommendation.json"));
}

TEST(Cli, InvalidConfigFailsWithNonzeroExit) {
  TempDir dir("cli_bad");
  nlohmann::json cfg = {{"generator", {{"noise_fraction", 0.5}}}};
  write_text_file(dir.path / "bad.json", cfg.dump(2));
  EXPECT_NE(run_cli("generate --config " + (dir.path / "bad.json").string() +
                    " --out " + (dir.path / "out").string()),
            0);
  EXPECT_NE(run_cli("recommend --config " + (dir.path / "bad.json").string()),
            0);
}

TEST(Cli, SeedOverridePrecedence) {
  TempDir dir("cli_seed");
  nlohmann::json cfg = {{"seed", 3},
                        {"generator", {{"samples_per_class", 2}}}};
  write_text_file(dir.path / "cfg.json", cfg.dump(2));
  auto out = (dir.path / "out").string();

  setenv("EVIT_SEED", "123", 1);
  ASSERT_EQ(run_cli("generate --config " + (dir.path / "cfg.json").string() +
                    " --out " + out),
            0);
  auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 123u);

  ASSERT_EQ(run_cli("generate --config " + (dir.path / "cfg.json").string() +
                    " --out " + out + " --seed 55"),
            0);
  manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 55u);
  unsetenv("EVIT_SEED");
}
