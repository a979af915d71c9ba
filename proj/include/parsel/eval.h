#ifndef PARSEL_EVAL_H
#define PARSEL_EVAL_H

#include <map>
#include <string>
#include <vector>

#include "parsel/treebank.h"

namespace parsel {

struct SentenceScore {
  std::string sentence_id;
  int correct = 0;
  int total = 0;

  // A sentence with no scorable tokens counts as fully correct.
  double uas() const { return total == 0 ? 1.0 : static_cast<double>(correct) / total; }
};

// Plain attachment score over all tokens.
SentenceScore score_heads(const std::vector<int>& pred,
                          const std::vector<int>& gold,
                          const std::string& id = "");

// Attachment score against a gold sentence; include_punct=false drops
// PUNCT tokens from the denominator.
SentenceScore score_sentence(const Sentence& gold, const std::vector<int>& pred,
                             bool include_punct);

double micro_uas(const std::vector<SentenceScore>& scores);

// Best single parser for the whole treebank, by micro UAS; ties go to the
// lowest index.
struct OracleResult {
  size_t parser_index = 0;
  double uas = 0.0;
};
OracleResult oracle_sbps(const std::vector<std::vector<SentenceScore>>& by_parser);

// Upper bound of per-sentence selection: every sentence scored by the
// parser that got most heads right on it.
double oracle_ilps(const std::vector<std::vector<SentenceScore>>& by_parser);

// Regularized incomplete beta I_x(a, b); exposed for tests.
double incomplete_beta(double a, double b, double x);

// Two-tailed paired t-test. Identical inputs give t = 0, p = 1; zero
// variance with a nonzero mean difference gives p = 0.
struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  size_t n = 0;
};
TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b);

struct SystemScores {
  std::string system;
  // target language -> per-sentence scores, aligned across systems
  std::map<std::string, std::vector<SentenceScore>> by_language;
};

struct EvaluationReport {
  struct Row {
    std::string system;
    std::map<std::string, double> uas_by_language;
    double micro = 0.0;
    double macro = 0.0;
    std::map<std::string, double> p_by_language;   // vs the reference system
    std::map<std::string, bool> significant;
  };
  std::vector<std::string> languages;
  std::vector<Row> rows;
  std::string reference;
  double alpha = 0.01;
};

// Micro/macro UAS per system plus per-language significance of the gap to
// the reference system, paired over sentences.
EvaluationReport build_report(const std::vector<SystemScores>& systems,
                              const std::string& reference, double alpha = 0.01);

std::string render_report(const EvaluationReport& report);
std::string report_tsv(const EvaluationReport& report);

}  // namespace parsel

#endif
