#ifndef PARSEL_SELECTION_H
#define PARSEL_SELECTION_H

#include <string>
#include <vector>

namespace parsel {

// Predicted parser quality, one row per source parser, one column per
// target sentence.
struct ScoreMatrix {
  std::vector<int> parser_ids;                 // 1-based
  std::vector<std::string> parser_languages;   // parallel to parser_ids
  std::vector<std::string> sentence_ids;
  std::vector<std::vector<double>> scores;     // [parser][sentence]

  size_t parsers() const { return parser_ids.size(); }
  size_t sentences() const { return sentence_ids.size(); }
};

void save_score_matrix(const ScoreMatrix& m, const std::string& path);
ScoreMatrix load_score_matrix(const std::string& path);

// Index of the best-scoring parser for one sentence column; exact ties go
// to the lowest parser id.
size_t select_pure_ilps(const ScoreMatrix& m, size_t sentence);

// Per-parser mean over all sentence columns.
std::vector<double> aggregate_sbps(const ScoreMatrix& m);

// argmax over aggregated means, ties to the lowest parser id.
size_t select_sbps(const std::vector<double>& means,
                   const std::vector<int>& parser_ids);

// Indices whose score reaches tau * max(scores clamped at zero). Parsers
// with negative scores never enter; if every score is negative the argmax
// parser alone is returned so the set is never empty.
std::vector<size_t> threshold_set(const std::vector<double>& scores,
                                  const std::vector<int>& parser_ids,
                                  double tau);

// Arc-weighted vote graph over n tokens plus the artificial root. Arcs not
// proposed by any voter stay absent.
struct WeightedArcGraph {
  explicit WeightedArcGraph(int n);
  int n = 0;
  std::vector<std::vector<double>> weight;  // [head][dep], absent = kNoArc

  void add_weight(int head, int dep, double w);
  bool has_arc(int head, int dep) const;
};

// Maximum spanning arborescence rooted at 0 over the present arcs.
std::vector<int> edmonds_mst(const WeightedArcGraph& g);

// Accumulates every voter's arcs weighted by its score, then decodes the
// maximum spanning tree. With one voter this returns that voter's tree.
std::vector<int> reparse(const std::vector<std::vector<int>>& trees,
                         const std::vector<double>& weights);

// One selection decision: which parsers vote on a sentence, with weights.
struct SelectionEntry {
  std::string sentence_id;  // "*" applies to every sentence of the target
  std::vector<int> parser_ids;
  std::vector<double> weights;
};

void save_selection(const std::vector<SelectionEntry>& entries,
                    const std::string& path);
std::vector<SelectionEntry> load_selection(const std::string& path);

}  // namespace parsel

#endif
