#ifndef PARSEL_LABELS_H
#define PARSEL_LABELS_H

#include <cstdint>
#include <string>
#include <vector>

#include "parsel/parser.h"
#include "parsel/treebank.h"

namespace parsel {

// One (parser, sentence) outcome from parsing a sentence of a language the
// parser was not trained on.
struct CrossParseRecord {
  int parser_id = 0;  // 1-based, fixed by source-language order
  std::string sentence_id;
  int correct_heads = 0;
  int sentence_length = 0;
};

// Supervision for the selection regressor: how well parser `parser_id` did
// on this sentence, normalized by the mean over all parsers in the
// sentence's group.
struct RegressionExample {
  int parser_id = 0;
  std::vector<std::string> upos;
  double label = 0.0;
  std::string sentence_id;  // kept in memory for grouping, not serialized
};

// Parses every sentence of every treebank with every parser of a different
// language and counts correct heads against gold.
std::vector<CrossParseRecord> cross_parse(
    const std::vector<SourceParserModel>& parsers,
    const std::vector<Treebank>& tbs, int jobs = 1);

// Normalizes correct-head counts within each sentence group into labels.
// Sentences whose group mean is zero are dropped. Throws io_error when
// groups are inconsistent (unequal sizes or duplicate parser ids).
std::vector<RegressionExample> make_labels(
    const std::vector<CrossParseRecord>& records,
    const std::vector<Treebank>& tbs);

// Resamples per-language example groups to the mean group count, keeping the
// per-parser rows of one sentence together.
std::vector<RegressionExample> resample_examples_to_mean(
    const std::vector<RegressionExample>& examples, uint64_t seed);

// Splits by sentence id: round(n * dev_fraction) ids, clamped to [1, n-1],
// go to dev. Requires 0 < dev_fraction < 1 and at least two distinct ids.
std::pair<std::vector<RegressionExample>, std::vector<RegressionExample>>
split_examples(const std::vector<RegressionExample>& examples,
               double dev_fraction, uint64_t seed);

void save_cross_parse(const std::vector<CrossParseRecord>& records,
                      const std::string& path);
std::vector<CrossParseRecord> load_cross_parse(const std::string& path);

// TSV rows: parser_id, space-joined UPOS, label with six fraction digits.
void save_examples(const std::vector<RegressionExample>& examples,
                   const std::string& path);
std::vector<RegressionExample> load_examples(const std::string& path);

}  // namespace parsel

#endif
