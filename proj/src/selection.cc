#include "parsel/selection.h"

#include <algorithm>
#include <fstream>

#include "parsel/arborescence.h"
#include "parsel/io_util.h"

namespace parsel {

namespace {

// argmax with ties resolved toward the lowest parser id.
size_t argmax_lowest_id(const std::vector<double>& values,
                        const std::vector<int>& parser_ids) {
  require(!values.empty(), "argmax: empty score list");
  require(values.size() == parser_ids.size(), "argmax: id list mismatch");
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best] ||
        (values[i] == values[best] && parser_ids[i] < parser_ids[best])) {
      best = i;
    }
  }
  return best;
}

}  // namespace

void save_score_matrix(const ScoreMatrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  os << artifact_header("scores", 1) << "\n";
  os << "sentences";
  for (const auto& id : m.sentence_ids) os << '\t' << id;
  os << '\n';
  for (size_t p = 0; p < m.parsers(); ++p) {
    os << m.parser_ids[p] << '\t' << m.parser_languages[p];
    for (double v : m.scores[p]) os << '\t' << format_double(v);
    os << '\n';
  }
  if (!os) throw io_error("write failed: " + path);
}

ScoreMatrix load_score_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path);
  expect_artifact_header(is, "scores", 1, path);
  std::string line;
  if (!std::getline(is, line))
    throw io_error(path + ": missing sentence header row");
  auto head = split(line, '\t');
  if (head.empty() || head[0] != "sentences")
    throw io_error(path + ": bad sentence header row");
  ScoreMatrix m;
  m.sentence_ids.assign(head.begin() + 1, head.end());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != m.sentence_ids.size() + 2)
      throw io_error(path + ": score row has wrong column count");
    m.parser_ids.push_back(std::stoi(cols[0]));
    m.parser_languages.push_back(cols[1]);
    std::vector<double> row;
    row.reserve(m.sentence_ids.size());
    for (size_t i = 2; i < cols.size(); ++i) row.push_back(std::stod(cols[i]));
    m.scores.push_back(std::move(row));
  }
  return m;
}

size_t select_pure_ilps(const ScoreMatrix& m, size_t sentence) {
  require(sentence < m.sentences(), "select_pure_ilps: bad sentence index");
  std::vector<double> column;
  column.reserve(m.parsers());
  for (size_t p = 0; p < m.parsers(); ++p)
    column.push_back(m.scores[p][sentence]);
  return argmax_lowest_id(column, m.parser_ids);
}

std::vector<double> aggregate_sbps(const ScoreMatrix& m) {
  require(m.sentences() > 0, "aggregate_sbps: no sentences");
  std::vector<double> means(m.parsers(), 0.0);
  for (size_t p = 0; p < m.parsers(); ++p) {
    double sum = 0.0;
    for (double v : m.scores[p]) sum += v;
    means[p] = sum / static_cast<double>(m.sentences());
  }
  return means;
}

size_t select_sbps(const std::vector<double>& means,
                   const std::vector<int>& parser_ids) {
  return argmax_lowest_id(means, parser_ids);
}

std::vector<size_t> threshold_set(const std::vector<double>& scores,
                                  const std::vector<int>& parser_ids,
                                  double tau) {
  require(tau >= 0.0 && tau <= 1.0, "threshold_set: tau must be in [0, 1]");
  require(!scores.empty(), "threshold_set: empty score list");
  require(scores.size() == parser_ids.size(), "threshold_set: id list mismatch");
  double top = 0.0;  // negative scores clamp to zero
  for (double v : scores) top = std::max(top, v);
  const double cutoff = top * tau;
  std::vector<size_t> picked;
  for (size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= cutoff) picked.push_back(i);
  if (picked.empty()) picked.push_back(argmax_lowest_id(scores, parser_ids));
  return picked;
}

WeightedArcGraph::WeightedArcGraph(int n)
    : n(n),
      weight(static_cast<size_t>(n) + 1,
             std::vector<double>(static_cast<size_t>(n) + 1, kNoArc)) {
  require(n >= 1, "WeightedArcGraph: need at least one token");
}

void WeightedArcGraph::add_weight(int head, int dep, double w) {
  require(head >= 0 && head <= n, "add_weight: head out of range");
  require(dep >= 1 && dep <= n, "add_weight: dep out of range");
  require(head != dep, "add_weight: self-arc");
  require(w >= 0.0, "add_weight: negative weight");
  double& cell = weight[static_cast<size_t>(head)][static_cast<size_t>(dep)];
  cell = (cell == kNoArc) ? w : cell + w;
}

bool WeightedArcGraph::has_arc(int head, int dep) const {
  return weight[static_cast<size_t>(head)][static_cast<size_t>(dep)] != kNoArc;
}

std::vector<int> edmonds_mst(const WeightedArcGraph& g) {
  return max_arborescence(g.weight);
}

std::vector<int> reparse(const std::vector<std::vector<int>>& trees,
                         const std::vector<double>& weights) {
  require(!trees.empty(), "reparse: no voters");
  require(trees.size() == weights.size(), "reparse: weight list mismatch");
  const size_t n = trees[0].size();
  require(n >= 1, "reparse: empty trees");
  for (const auto& t : trees)
    require(t.size() == n, "reparse: voter tree length mismatch");
  for (double w : weights) require(w > 0.0, "reparse: weights must be positive");

  WeightedArcGraph g(static_cast<int>(n));
  for (size_t v = 0; v < trees.size(); ++v)
    for (size_t d = 1; d <= n; ++d)
      g.add_weight(trees[v][d - 1], static_cast<int>(d), weights[v]);
  return edmonds_mst(g);
}

void save_selection(const std::vector<SelectionEntry>& entries,
                    const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  os << artifact_header("selection", 1) << "\n";
  for (const auto& e : entries) {
    os << e.sentence_id << '\t';
    for (size_t i = 0; i < e.parser_ids.size(); ++i) {
      if (i) os << ',';
      os << e.parser_ids[i];
    }
    os << '\t';
    for (size_t i = 0; i < e.weights.size(); ++i) {
      if (i) os << ',';
      os << format_double(e.weights[i]);
    }
    os << '\n';
  }
  if (!os) throw io_error("write failed: " + path);
}

std::vector<SelectionEntry> load_selection(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path);
  expect_artifact_header(is, "selection", 1, path);
  std::vector<SelectionEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3)
      throw io_error(path + ": selection row needs 3 columns");
    SelectionEntry e;
    e.sentence_id = cols[0];
    for (const auto& s : split(cols[1], ','))
      e.parser_ids.push_back(std::stoi(s));
    for (const auto& s : split(cols[2], ','))
      e.weights.push_back(std::stod(s));
    if (e.parser_ids.size() != e.weights.size())
      throw io_error(path + ": parser/weight count mismatch");
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace parsel
