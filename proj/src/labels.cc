#include "parsel/labels.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "parsel/io_util.h"

namespace parsel {

namespace {

int count_correct(const std::vector<int>& pred, const std::vector<int>& gold) {
  int c = 0;
  for (size_t i = 0; i < pred.size() && i < gold.size(); ++i) {
    if (pred[i] == gold[i]) ++c;
  }
  return c;
}

}  // namespace

std::vector<CrossParseRecord> cross_parse(
    const std::vector<SourceParserModel>& parsers,
    const std::vector<Treebank>& tbs, int jobs) {
  require(!parsers.empty(), "cross_parse: no parsers");
  require(jobs >= 1, "cross_parse: jobs must be >= 1");

  // One work unit per (parser, treebank) pair; results land in preassigned
  // slots so the record order is independent of thread scheduling.
  struct Unit {
    size_t parser;
    size_t tb;
    size_t slot;
  };
  std::vector<Unit> units;
  size_t total = 0;
  for (size_t p = 0; p < parsers.size(); ++p) {
    for (size_t t = 0; t < tbs.size(); ++t) {
      if (tbs[t].language == parsers[p].language) continue;
      units.push_back({p, t, total});
      total += tbs[t].size();
    }
  }
  std::vector<CrossParseRecord> records(total);

  auto work = [&](size_t u) {
    const Unit& unit = units[u];
    const SourceParserModel& model = parsers[unit.parser];
    const Treebank& tb = tbs[unit.tb];
    for (size_t i = 0; i < tb.size(); ++i) {
      const Sentence& s = tb.sentences[i];
      std::vector<int> pred = parse(model, s);
      CrossParseRecord& rec = records[unit.slot + i];
      rec.parser_id = static_cast<int>(unit.parser) + 1;
      rec.sentence_id = s.id;
      rec.correct_heads = count_correct(pred, s.heads());
      rec.sentence_length = s.length();
    }
  };
  parallel_for(units.size(), jobs, work);
  return records;
}

std::vector<RegressionExample> make_labels(
    const std::vector<CrossParseRecord>& records,
    const std::vector<Treebank>& tbs) {
  std::unordered_map<std::string, const Sentence*> by_id;
  for (const auto& tb : tbs)
    for (const auto& s : tb.sentences) by_id[s.id] = &s;

  // Group records by sentence id, keeping first-seen order.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const CrossParseRecord*>> groups;
  for (const auto& rec : records) {
    auto [it, fresh] = groups.try_emplace(rec.sentence_id);
    if (fresh) order.push_back(rec.sentence_id);
    it->second.push_back(&rec);
  }

  size_t group_size = 0;
  std::vector<RegressionExample> out;
  for (const auto& id : order) {
    const auto& group = groups[id];
    if (group_size == 0) group_size = group.size();
    if (group.size() != group_size)
      throw io_error("make_labels: sentence " + id + " has " +
                     std::to_string(group.size()) + " records, expected " +
                     std::to_string(group_size));
    std::set<int> seen;
    double sum = 0.0;
    for (const auto* rec : group) {
      if (!seen.insert(rec->parser_id).second)
        throw io_error("make_labels: sentence " + id +
                       " has duplicate records for parser " +
                       std::to_string(rec->parser_id));
      sum += rec->correct_heads;
    }
    const double mean = sum / static_cast<double>(group.size());
    if (mean == 0.0) continue;  // no parser got anything right

    auto found = by_id.find(id);
    if (found == by_id.end())
      throw io_error("make_labels: sentence " + id + " not found in treebanks");
    const std::vector<std::string> tags = found->second->upos();
    for (const auto* rec : group) {
      RegressionExample ex;
      ex.parser_id = rec->parser_id;
      ex.upos = tags;
      ex.label = rec->correct_heads / mean;
      ex.sentence_id = id;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

namespace {

std::string language_of(const std::string& sentence_id) {
  auto pos = sentence_id.rfind('#');
  require(pos != std::string::npos,
          "sentence id '" + sentence_id + "' lacks a language prefix");
  return sentence_id.substr(0, pos);
}

}  // namespace

std::vector<RegressionExample> resample_examples_to_mean(
    const std::vector<RegressionExample>& examples, uint64_t seed) {
  require(!examples.empty(), "resample_examples_to_mean: no examples");

  // Per language: distinct sentence ids in first-seen order, each with the
  // contiguous rows that belong to it.
  std::vector<std::string> langs;
  std::map<std::string, std::vector<std::string>> ids_by_lang;
  std::unordered_map<std::string, std::vector<const RegressionExample*>> rows;
  for (const auto& ex : examples) {
    auto [it, fresh] = rows.try_emplace(ex.sentence_id);
    if (fresh) {
      const std::string lang = language_of(ex.sentence_id);
      auto [lit, lang_fresh] = ids_by_lang.try_emplace(lang);
      if (lang_fresh) langs.push_back(lang);
      lit->second.push_back(ex.sentence_id);
    }
    it->second.push_back(&ex);
  }
  std::sort(langs.begin(), langs.end());

  double total = 0;
  for (const auto& lang : langs) total += ids_by_lang[lang].size();
  const size_t target = static_cast<size_t>(
      std::floor(total / static_cast<double>(langs.size()) + 0.5));

  std::mt19937_64 rng(seed);
  std::vector<RegressionExample> out;
  for (const auto& lang : langs) {
    const auto& ids = ids_by_lang[lang];
    for (size_t i : resample_indices(ids.size(), target, rng))
      for (const auto* ex : rows[ids[i]]) out.push_back(*ex);
  }
  return out;
}

std::pair<std::vector<RegressionExample>, std::vector<RegressionExample>>
split_examples(const std::vector<RegressionExample>& examples,
               double dev_fraction, uint64_t seed) {
  require(dev_fraction > 0.0 && dev_fraction < 1.0,
          "split_examples: dev_fraction must be in (0, 1)");

  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& ex : examples)
    if (seen.insert(ex.sentence_id).second) ids.push_back(ex.sentence_id);
  require(ids.size() >= 2, "split_examples: need at least two sentences");

  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  size_t k = static_cast<size_t>(
      std::floor(static_cast<double>(ids.size()) * dev_fraction + 0.5));
  k = std::clamp<size_t>(k, 1, ids.size() - 1);
  std::set<std::string> dev_ids(ids.begin(), ids.begin() + k);

  std::pair<std::vector<RegressionExample>, std::vector<RegressionExample>> out;
  for (const auto& ex : examples) {
    (dev_ids.count(ex.sentence_id) ? out.second : out.first).push_back(ex);
  }
  return out;
}

void save_cross_parse(const std::vector<CrossParseRecord>& records,
                      const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  os << artifact_header("crossparse", 1) << "\n";
  for (const auto& rec : records) {
    os << rec.parser_id << '\t' << rec.sentence_id << '\t' << rec.correct_heads
       << '\t' << rec.sentence_length << '\n';
  }
  if (!os) throw io_error("write failed: " + path);
}

std::vector<CrossParseRecord> load_cross_parse(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path);
  expect_artifact_header(is, "crossparse", 1, path);
  std::vector<CrossParseRecord> records;
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4)
      throw io_error(path + ": line " + std::to_string(lineno) +
                     ": expected 4 columns");
    CrossParseRecord rec;
    rec.parser_id = std::stoi(cols[0]);
    rec.sentence_id = cols[1];
    rec.correct_heads = std::stoi(cols[2]);
    rec.sentence_length = std::stoi(cols[3]);
    records.push_back(std::move(rec));
  }
  return records;
}

void save_examples(const std::vector<RegressionExample>& examples,
                   const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  os << artifact_header("labels", 1) << "\n";
  for (const auto& ex : examples) {
    os << ex.parser_id << '\t' << join(ex.upos, " ") << '\t'
       << format_fixed(ex.label, 6) << '\n';
  }
  if (!os) throw io_error("write failed: " + path);
}

std::vector<RegressionExample> load_examples(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path);
  expect_artifact_header(is, "labels", 1, path);
  std::vector<RegressionExample> out;
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3)
      throw io_error(path + ": line " + std::to_string(lineno) +
                     ": expected 3 columns");
    RegressionExample ex;
    ex.parser_id = std::stoi(cols[0]);
    ex.upos = split(cols[1], ' ');
    ex.label = std::stod(cols[2]);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace parsel
