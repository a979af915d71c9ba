#include "parsel/baselines.h"

#include <cmath>
#include <fstream>
#include <set>

#include "parsel/io_util.h"

namespace parsel {

std::map<std::string, int64_t> trigram_counts(const Treebank& tb) {
  std::map<std::string, int64_t> counts;
  for (const auto& s : tb.sentences) {
    std::vector<std::string> padded;
    padded.reserve(s.tokens.size() + 4);
    padded.push_back("B");
    padded.push_back("B");
    for (const auto& t : s.tokens) padded.push_back(t.upos);
    padded.push_back("E");
    padded.push_back("E");
    for (size_t i = 0; i + 2 < padded.size(); ++i) {
      counts[padded[i] + " " + padded[i + 1] + " " + padded[i + 2]] += 1;
    }
  }
  return counts;
}

TrigramDistribution smoothed_distribution(
    const std::map<std::string, int64_t>& counts,
    const std::vector<std::string>& support, double alpha) {
  require(alpha > 0.0, "smoothed_distribution: alpha must be positive");
  require(!support.empty(), "smoothed_distribution: empty support");
  int64_t total = 0;
  for (const auto& [key, c] : counts) {
    require(c >= 0, "smoothed_distribution: negative count");
    total += c;
  }
  const double denom =
      static_cast<double>(total) + alpha * static_cast<double>(support.size());
  TrigramDistribution dist;
  for (const auto& key : support) {
    auto it = counts.find(key);
    const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    dist.prob[key] = (c + alpha) / denom;
  }
  return dist;
}

double kl_divergence(const TrigramDistribution& p, const TrigramDistribution& q) {
  double kl = 0.0;
  for (const auto& [key, pv] : p.prob) {
    if (pv == 0.0) continue;
    auto it = q.prob.find(key);
    require(it != q.prob.end() && it->second > 0.0,
            "kl_divergence: q lacks mass on p's support");
    kl += pv * std::log(pv / it->second);
  }
  return kl;
}

double kl_target_source(const std::map<std::string, int64_t>& target_counts,
                        const std::map<std::string, int64_t>& source_counts,
                        double alpha) {
  std::set<std::string> keys;
  for (const auto& [key, c] : target_counts) keys.insert(key);
  for (const auto& [key, c] : source_counts) keys.insert(key);
  require(!keys.empty(), "kl_target_source: no trigrams");
  const std::vector<std::string> support(keys.begin(), keys.end());
  return kl_divergence(smoothed_distribution(target_counts, support, alpha),
                       smoothed_distribution(source_counts, support, alpha));
}

double kl_similarity(double kl, double eps) {
  require(kl >= 0.0, "kl_similarity: negative divergence");
  return 1.0 / (kl + eps);
}

std::vector<double> kl_similarities(const Treebank& target,
                                    const std::vector<Treebank>& sources,
                                    double alpha) {
  const auto target_counts = trigram_counts(target);
  std::vector<double> sims;
  sims.reserve(sources.size());
  for (const auto& src : sources) {
    sims.push_back(
        kl_similarity(kl_target_source(target_counts, trigram_counts(src), alpha)));
  }
  return sims;
}

std::vector<LanguageVector> read_language_vectors(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw io_error(path + ": empty file");
  const size_t width = split(line, '\t').size();
  if (width < 2) throw io_error(path + ": header needs at least one feature");

  std::vector<LanguageVector> vectors;
  std::vector<std::vector<bool>> present;
  std::set<std::string> seen;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != width)
      throw io_error(path + ": line " + std::to_string(lineno) +
                     ": expected " + std::to_string(width) + " columns, got " +
                     std::to_string(cols.size()));
    LanguageVector v;
    v.language = cols[0];
    if (!seen.insert(v.language).second)
      throw io_error(path + ": line " + std::to_string(lineno) +
                     ": duplicate language '" + v.language + "'");
    std::vector<bool> have;
    for (size_t i = 1; i < cols.size(); ++i) {
      const std::string cell = trim(cols[i]);
      if (cell.empty()) {
        v.values.push_back(0.0);
        have.push_back(false);
      } else {
        try {
          v.values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw io_error(path + ": line " + std::to_string(lineno) +
                         ": bad number '" + cell + "'");
        }
        have.push_back(true);
      }
    }
    vectors.push_back(std::move(v));
    present.push_back(std::move(have));
  }
  if (vectors.empty()) throw io_error(path + ": no language rows");

  // Missing cells take the column mean over languages that have the feature.
  const size_t dims = width - 1;
  for (size_t c = 0; c < dims; ++c) {
    double sum = 0.0;
    int n = 0;
    for (size_t r = 0; r < vectors.size(); ++r) {
      if (present[r][c]) {
        sum += vectors[r].values[c];
        ++n;
      }
    }
    const double mean = n > 0 ? sum / n : 0.0;
    for (size_t r = 0; r < vectors.size(); ++r)
      if (!present[r][c]) vectors[r].values[c] = mean;
  }
  return vectors;
}

const LanguageVector& find_language_vector(
    const std::vector<LanguageVector>& vectors, const std::string& language) {
  for (const auto& v : vectors)
    if (v.language == language) return v;
  throw io_error("no language vector for '" + language + "'");
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "cosine: dimension mismatch");
  require(!a.empty(), "cosine: empty vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> cosine_similarities(
    const LanguageVector& target, const std::vector<LanguageVector>& sources) {
  std::vector<double> sims;
  sims.reserve(sources.size());
  for (const auto& src : sources) sims.push_back(cosine(target.values, src.values));
  return sims;
}

}  // namespace parsel
