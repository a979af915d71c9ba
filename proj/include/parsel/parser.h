#ifndef PARSEL_PARSER_H
#define PARSEL_PARSER_H

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "parsel/treebank.h"

namespace parsel {

// Hashed sparse feature vector for one candidate arc. Ids come from
// fnv1a64 over the feature strings; duplicate ids fold into counts.
struct ArcFeatureVector {
  std::vector<std::pair<uint64_t, int>> items;  // sorted by id, count >= 1

  bool contains(uint64_t id) const;
};

uint64_t feature_id(const std::string& feature);

// Features for the arc head -> dep over the UPOS sequence of s.
// head in [0, T] (0 = root), dep in [1, T], head != dep.
ArcFeatureVector extract_arc_features(const Sentence& s, int head, int dep);

// Delexicalized arc-factored parser trained with the averaged structured
// perceptron; decoding is the maximum spanning arborescence over the
// complete arc-score graph.
struct SourceParserModel {
  std::string language;
  std::unordered_map<uint64_t, double> weights;
  std::unordered_map<uint64_t, double> averaged_weights;
  int epochs_trained = 0;
};

SourceParserModel train_parser(const Treebank& tb, int epochs, uint64_t seed);

// Decodes with the averaged weights. Output is always a valid tree.
std::vector<int> parse(const SourceParserModel& model, const Sentence& s);

// Arc scores under the given weight map: score[h][d] for h in 0..T, d in 1..T.
std::vector<std::vector<double>> score_arcs(
    const std::unordered_map<uint64_t, double>& weights, const Sentence& s);

// Versioned binary model file; bit-exact round-trip.
void save_parser_model(const SourceParserModel& model, const std::string& path);
SourceParserModel load_parser_model(const std::string& path);

}  // namespace parsel

#endif
