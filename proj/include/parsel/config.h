#ifndef PARSEL_CONFIG_H
#define PARSEL_CONFIG_H

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "parsel/ilps.h"

namespace parsel {

// Experiment description read from a flat key = value file. Relative paths
// (treebanks, language vectors, out_dir) are resolved against the config
// file's directory. Unknown keys are validation errors so typos cannot
// silently fall back to defaults.
struct ExperimentConfig {
  std::vector<std::string> source_languages;
  std::vector<std::string> target_languages;
  std::map<std::string, std::string> treebank_paths;  // language -> path
  std::string lang_vectors_path;
  std::string out_dir = "out";

  uint64_t seed = 1;
  int jobs = 1;

  int parser_epochs = 5;
  bool resample = true;
  double dev_fraction = 0.05;

  IlpsConfig ilps;
  int mlm_steps = 5000;
  int max_epochs = 20;

  double tau = 0.9;
  double kl_alpha = 0.1;
  bool include_punct = true;
  std::string reference_system = "ilps";
  double significance_alpha = 0.01;

  // Per-stage RNG seed derived from the master seed and the stage name.
  uint64_t seed_for(const std::string& stage) const;

  std::vector<std::string> all_languages() const;
  std::string treebank_path(const std::string& language) const;

  // The resolved configuration, every key explicit, in parseable form.
  std::string echo() const;
};

// Parses and validates. Validation failures are collected and reported
// together in one io_error, one problem per line.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::map<std::string, std::string>& kv,
                              const std::string& base_dir);

}  // namespace parsel

#endif
