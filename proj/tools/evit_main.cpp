// Command-line front end: runs the transfer-valuation pipeline and its
// individual stages against a JSON experiment config.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "evit/evit.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

evit::ExperimentConfig resolve_config(const GlobalOptions& opts) {
  evit::ExperimentConfig cfg;
  if (!opts.config_path.empty())
    cfg = evit::load_experiment_config(opts.config_path);
  cfg.seed = evit::resolve_seed(cfg.seed, std::getenv("EVIT_SEED"), opts.seed);
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  return cfg;
}

void add_common_options(CLI::App* cmd, GlobalOptions& opts) {
  cmd->add_option("--config", opts.config_path,
                  "JSON experiment config (defaults apply when omitted)");
  cmd->add_option("--seed", opts.seed,
                  "global seed; overrides EVIT_SEED and the config value");
  cmd->add_option("--out", opts.output_dir, "output directory override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "evit: pairwise transfer experiments, similarity-weight optimization, "
      "Dirichlet efficacy regression, and transfer-strategy valuation"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::string target_path;

  auto* generate = app.add_subcommand(
      "generate", "write per-structure surrogate datasets and a manifest");
  add_common_options(generate, opts);
  auto* transfers = app.add_subcommand(
      "transfers", "run all pairwise transfer tasks and write transfers.csv");
  add_common_options(transfers, opts);
  auto* weights = app.add_subcommand(
      "weights", "optimize similarity weights and write weights.json");
  add_common_options(weights, opts);
  auto* fit = app.add_subcommand(
      "fit", "train the efficacy model; write model.json and the prediction curve");
  add_common_options(fit, opts);
  auto* evit_cmd = app.add_subcommand(
      "evit", "write the EVIT-vs-similarity curve CSV");
  add_common_options(evit_cmd, opts);
  auto* recommend = app.add_subcommand(
      "recommend", "rank candidate sources for a target structure");
  add_common_options(recommend, opts);
  recommend
      ->add_option("--target", target_path,
                   "JSON file with the target structure's attributes")
      ->required();
  auto* pipeline = app.add_subcommand(
      "pipeline", "run every stage and write the full artifact set");
  add_common_options(pipeline, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    evit::ExperimentConfig cfg = resolve_config(opts);
    if (generate->parsed()) {
      evit::cmd_generate(cfg);
      std::cout << "wrote datasets to "
                << evit::ArtifactPaths{cfg.output_dir}.dataset_dir().string()
                << "\n";
    } else if (transfers->parsed()) {
      evit::cmd_transfers(cfg);
      std::cout << "wrote "
                << evit::ArtifactPaths{cfg.output_dir}.transfers().string()
                << "\n";
    } else if (weights->parsed()) {
      evit::cmd_weights(cfg);
      std::cout << "wrote "
                << evit::ArtifactPaths{cfg.output_dir}.weights().string()
                << "\n";
    } else if (fit->parsed()) {
      evit::cmd_fit(cfg);
      std::cout << "wrote "
                << evit::ArtifactPaths{cfg.output_dir}.model().string() << "\n";
    } else if (evit_cmd->parsed()) {
      evit::cmd_evit(cfg);
      std::cout << "wrote "
                << evit::ArtifactPaths{cfg.output_dir}.evit_curve().string()
                << "\n";
    } else if (recommend->parsed()) {
      evit::run_recommend(cfg, target_path, std::cout);
    } else if (pipeline->parsed()) {
      evit::run_pipeline(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
