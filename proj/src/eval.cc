#include "parsel/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parsel/io_util.h"

namespace parsel {

SentenceScore score_heads(const std::vector<int>& pred,
                          const std::vector<int>& gold, const std::string& id) {
  require(pred.size() == gold.size(), "score_heads: length mismatch");
  SentenceScore s;
  s.sentence_id = id;
  s.total = static_cast<int>(gold.size());
  for (size_t i = 0; i < gold.size(); ++i)
    if (pred[i] == gold[i]) ++s.correct;
  return s;
}

SentenceScore score_sentence(const Sentence& gold, const std::vector<int>& pred,
                             bool include_punct) {
  require(pred.size() == gold.tokens.size(), "score_sentence: length mismatch");
  SentenceScore s;
  s.sentence_id = gold.id;
  for (size_t i = 0; i < gold.tokens.size(); ++i) {
    if (!include_punct && gold.tokens[i].upos == "PUNCT") continue;
    ++s.total;
    if (pred[i] == gold.tokens[i].head) ++s.correct;
  }
  return s;
}

double micro_uas(const std::vector<SentenceScore>& scores) {
  int64_t correct = 0, total = 0;
  for (const auto& s : scores) {
    correct += s.correct;
    total += s.total;
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

OracleResult oracle_sbps(const std::vector<std::vector<SentenceScore>>& by_parser) {
  require(!by_parser.empty(), "oracle_sbps: no parsers");
  OracleResult best{0, micro_uas(by_parser[0])};
  for (size_t p = 1; p < by_parser.size(); ++p) {
    const double u = micro_uas(by_parser[p]);
    if (u > best.uas) best = {p, u};
  }
  return best;
}

double oracle_ilps(const std::vector<std::vector<SentenceScore>>& by_parser) {
  require(!by_parser.empty(), "oracle_ilps: no parsers");
  const size_t m = by_parser[0].size();
  for (const auto& scores : by_parser)
    require(scores.size() == m, "oracle_ilps: ragged score lists");
  int64_t correct = 0, total = 0;
  for (size_t i = 0; i < m; ++i) {
    int best = by_parser[0][i].correct;
    for (size_t p = 1; p < by_parser.size(); ++p)
      best = std::max(best, by_parser[p][i].correct);
    correct += best;
    total += by_parser[0][i].total;
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction diverged");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete_beta: a, b must be positive");
  require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                std::lgamma(b) + a * std::log(x) +
                                b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b) {
  require(a.size() == b.size(), "paired_ttest: length mismatch");
  require(a.size() >= 2, "paired_ttest: need at least two pairs");
  const size_t n = a.size();

  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);

  TTestResult res;
  res.n = n;
  if (var == 0.0) {
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
    return res;
  }
  res.t = mean / std::sqrt(var / static_cast<double>(n));
  const double nu = static_cast<double>(n - 1);
  const double x = nu / (nu + res.t * res.t);
  res.p = incomplete_beta(nu / 2.0, 0.5, x);
  return res;
}

EvaluationReport build_report(const std::vector<SystemScores>& systems,
                              const std::string& reference, double alpha) {
  require(!systems.empty(), "build_report: no systems");
  require(alpha > 0.0 && alpha < 1.0, "build_report: alpha must be in (0, 1)");

  const SystemScores* ref = nullptr;
  for (const auto& sys : systems)
    if (sys.system == reference) ref = &sys;
  require(ref != nullptr, "build_report: unknown reference system '" + reference + "'");

  EvaluationReport report;
  report.reference = reference;
  report.alpha = alpha;
  for (const auto& [lang, scores] : systems[0].by_language)
    report.languages.push_back(lang);

  for (const auto& sys : systems) {
    EvaluationReport::Row row;
    row.system = sys.system;
    int64_t correct = 0, total = 0;
    double macro = 0.0;
    for (const auto& lang : report.languages) {
      auto it = sys.by_language.find(lang);
      require(it != sys.by_language.end(),
              "build_report: system " + sys.system + " lacks language " + lang);
      const auto& scores = it->second;
      row.uas_by_language[lang] = micro_uas(scores);
      macro += row.uas_by_language[lang];
      for (const auto& s : scores) {
        correct += s.correct;
        total += s.total;
      }

      if (sys.system != reference) {
        const auto& ref_scores = ref->by_language.at(lang);
        require(ref_scores.size() == scores.size(),
                "build_report: sentence sets differ for language " + lang);
        std::vector<double> ua, ub;
        ua.reserve(scores.size());
        ub.reserve(scores.size());
        for (size_t i = 0; i < scores.size(); ++i) {
          require(scores[i].sentence_id == ref_scores[i].sentence_id,
                  "build_report: sentence order differs for language " + lang);
          ua.push_back(scores[i].uas());
          ub.push_back(ref_scores[i].uas());
        }
        const TTestResult tt = paired_ttest(ua, ub);
        row.p_by_language[lang] = tt.p;
        row.significant[lang] = tt.p < alpha;
      }
    }
    row.micro = total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
    row.macro = macro / static_cast<double>(report.languages.size());
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_report(const EvaluationReport& report) {
  std::ostringstream os;
  size_t name_width = 6;
  for (const auto& row : report.rows)
    name_width = std::max(name_width, row.system.size());

  os << "UAS (%), reference = " << report.reference
     << ", * marks p < " << format_fixed(report.alpha, 3)
     << " against the reference\n\n";
  os << std::string(name_width, ' ');
  for (const auto& lang : report.languages) {
    os << "  " << lang;
    for (size_t i = lang.size(); i < 7; ++i) os << ' ';
  }
  os << "  micro    macro\n";
  for (const auto& row : report.rows) {
    os << row.system << std::string(name_width - row.system.size(), ' ');
    for (const auto& lang : report.languages) {
      std::string cell = format_fixed(100.0 * row.uas_by_language.at(lang), 2);
      auto sig = row.significant.find(lang);
      if (sig != row.significant.end() && sig->second) cell += "*";
      os << "  " << cell;
      for (size_t i = cell.size(); i < 7; ++i) os << ' ';
    }
    os << "  " << format_fixed(100.0 * row.micro, 2) << "    "
       << format_fixed(100.0 * row.macro, 2) << "\n";
  }
  return os.str();
}

std::string report_tsv(const EvaluationReport& report) {
  std::ostringstream os;
  os << artifact_header("report", 1) << "\n";
  os << "system";
  for (const auto& lang : report.languages)
    os << '\t' << lang << "\tp_" << lang;
  os << "\tmicro\tmacro\n";
  for (const auto& row : report.rows) {
    os << row.system;
    for (const auto& lang : report.languages) {
      os << '\t' << format_double(row.uas_by_language.at(lang));
      auto p = row.p_by_language.find(lang);
      os << '\t' << (p == row.p_by_language.end() ? "-" : format_double(p->second));
    }
    os << '\t' << format_double(row.micro) << '\t' << format_double(row.macro)
       << "\n";
  }
  return os.str();
}

}  // namespace parsel
