#ifndef PARSEL_PIPELINE_H
#define PARSEL_PIPELINE_H

#include <iosfwd>
#include <string>
#include <vector>

#include "parsel/config.h"

namespace parsel {

// Stage names in `all` execution order.
const std::vector<std::string>& pipeline_stages();
bool is_pipeline_stage(const std::string& name);

// System identifiers produced by select, reparse, and evaluate.
const std::vector<std::string>& selection_systems();

// Artifact locations under the configured output directory.
struct ArtifactPaths {
  std::string out;

  std::string resolved_config() const;
  std::string parser_model(const std::string& language) const;
  std::string cross_parse() const;
  std::string labels_train() const;
  std::string labels_dev() const;
  std::string ilps_pre_prefix() const;
  std::string ilps_prefix() const;
  std::string scores(const std::string& target) const;
  std::string source_parse(const std::string& target,
                           const std::string& source) const;
  std::string system_parse(const std::string& target,
                           const std::string& system) const;
  std::string selection(const std::string& target,
                        const std::string& system) const;
  std::string baselines() const;
  std::string oracle() const;
  std::string report_text() const;
  std::string report_table() const;
};

// Runs one named stage (or "all"), reading prerequisite artifacts from
// cfg.out_dir and writing its own there. A missing prerequisite raises
// io_error naming the stage that produces it.
void run_stage(const std::string& stage, const ExperimentConfig& cfg,
               std::ostream& log);

}  // namespace parsel

#endif
