#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parsel/config.h"
#include "parsel/io_util.h"
#include "parsel/pipeline.h"

namespace {

std::string stage_help(const std::string& name) {
  if (name == "all") return "run every stage in order";
  if (name == "train-parsers") return "train one source parser per language";
  if (name == "cross-parse") return "parse every language with every other parser";
  if (name == "make-labels") return "normalize cross-parse counts into labels";
  if (name == "pretrain") return "masked-tag pretraining of the encoder";
  if (name == "train-ilps") return "fit the parser-quality regressor";
  if (name == "predict") return "score every parser on the target sentences";
  if (name == "baselines") return "KL and typological-vector similarities";
  if (name == "select") return "turn scores into parser selections";
  if (name == "reparse") return "merge selected trees per target sentence";
  if (name == "oracle") return "oracle selection upper bounds";
  if (name == "evaluate") return "UAS report with significance marks";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delexicalized cross-lingual parser selection workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string seed_override;
  int jobs_override = 0;
  std::string chosen;

  std::vector<std::string> names = parsel::pipeline_stages();
  names.push_back("all");
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name, stage_help(name));
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_option("--seed", seed_override, "override the master seed");
    sub->add_option("--jobs", jobs_override, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    parsel::ExperimentConfig cfg = parsel::load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!seed_override.empty()) cfg.seed = std::stoull(seed_override);
    if (jobs_override > 0) cfg.jobs = jobs_override;
    parsel::run_stage(chosen, cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
