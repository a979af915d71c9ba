#ifndef PARSEL_BASELINES_H
#define PARSEL_BASELINES_H

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "parsel/treebank.h"

namespace parsel {

constexpr double kKlAlpha = 0.1;
constexpr double kKlEps = 1e-6;

// UPOS trigram counts with two boundary markers on each side, so a sentence
// of T tokens yields T + 2 trigrams. Keys are space-joined tags, boundaries
// rendered as B and E.
std::map<std::string, int64_t> trigram_counts(const Treebank& tb);

struct TrigramDistribution {
  std::map<std::string, double> prob;
};

// Add-alpha smoothing over the given support (counts absent from `counts`
// but present in `support` get a zero base count).
TrigramDistribution smoothed_distribution(
    const std::map<std::string, int64_t>& counts,
    const std::vector<std::string>& support, double alpha);

// KL(p || q) in nats over the support of p. q must cover p's support.
double kl_divergence(const TrigramDistribution& p, const TrigramDistribution& q);

// KL(target || source) after smoothing both over the union support.
double kl_target_source(const std::map<std::string, int64_t>& target_counts,
                        const std::map<std::string, int64_t>& source_counts,
                        double alpha = kKlAlpha);

// Divergence turned into a similarity for thresholding: 1 / (kl + eps).
double kl_similarity(double kl, double eps = kKlEps);

// Per-source similarity of a target treebank, in source order.
std::vector<double> kl_similarities(const Treebank& target,
                                    const std::vector<Treebank>& sources,
                                    double alpha = kKlAlpha);

// Typological feature vectors, one row per language. The file is TSV with a
// header row of feature names; empty cells are missing values, filled with
// the column mean over the languages that have one.
struct LanguageVector {
  std::string language;
  std::vector<double> values;
};

std::vector<LanguageVector> read_language_vectors(const std::string& path);
const LanguageVector& find_language_vector(
    const std::vector<LanguageVector>& vectors, const std::string& language);

// Cosine similarity; zero vectors have similarity 0.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

std::vector<double> cosine_similarities(
    const LanguageVector& target, const std::vector<LanguageVector>& sources);

}  // namespace parsel

#endif
