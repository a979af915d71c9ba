#include "parsel/treebank.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "parsel/io_util.h"

namespace parsel {

const std::vector<std::string>& upos_tags() {
  static const std::vector<std::string> tags = {
      "ADJ",  "ADP",  "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
      "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",  "VERB", "X"};
  return tags;
}

bool is_upos_tag(const std::string& tag) {
  const auto& tags = upos_tags();
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::vector<int> Sentence::heads() const {
  std::vector<int> h;
  h.reserve(tokens.size());
  for (const auto& t : tokens) h.push_back(t.head);
  return h;
}

std::vector<std::string> Sentence::upos() const {
  std::vector<std::string> u;
  u.reserve(tokens.size());
  for (const auto& t : tokens) u.push_back(t.upos);
  return u;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

bool is_valid_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  if (n < 1) return false;
  for (int d = 1; d <= n; ++d) {
    int h = heads[d - 1];
    if (h < 0 || h > n || h == d) return false;
  }
  // Walk each node towards the root, marking the path. A revisit within the
  // current walk means a cycle.
  std::vector<int> visited(n + 1, 0);
  for (int start = 1; start <= n; ++start) {
    int node = start;
    while (node != 0) {
      if (visited[node] == start) return false;  // cycle
      if (visited[node] != 0) break;             // joins an already-cleared path
      visited[node] = start;
      node = heads[node - 1];
    }
  }
  return true;
}

namespace {

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

void finish_sentence(Treebank& tb, std::vector<Token>& tokens, int& offset,
                     const std::string& language) {
  if (tokens.empty()) return;
  Sentence s;
  s.tokens = std::move(tokens);
  tokens.clear();
  s.language = language;
  s.id = language + "#" + std::to_string(offset++);
  if (!is_valid_tree(s.heads()))
    throw io_error("sentence " + s.id + ": cyclic or multi-root head structure");
  tb.sentences.push_back(std::move(s));
}

}  // namespace

Treebank read_conllu(const std::string& path, const std::string& language,
                     Split split) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path);

  Treebank tb;
  tb.language = language;
  tb.split = split;

  std::vector<Token> tokens;
  std::string line;
  int lineno = 0;
  int offset = 0;
  int expected_index = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish_sentence(tb, tokens, offset, language);
      expected_index = 1;
      continue;
    }
    if (line[0] == '#') continue;
    auto cols = parsel::split(line, '\t');
    if (cols.size() != 10)
      throw io_error(path + ": line " + std::to_string(lineno) + ": expected 10 columns, got " +
                     std::to_string(cols.size()));
    const std::string& id = cols[0];
    // Multiword ranges ("3-4") and empty nodes ("5.1") carry no head
    // annotation; skip them.
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
      continue;
    if (!is_integer(id))
      throw io_error(path + ": line " + std::to_string(lineno) + ": bad token id '" + id + "'");
    Token tok;
    tok.index = std::stoi(id);
    if (tok.index != expected_index)
      throw io_error(path + ": line " + std::to_string(lineno) + ": token id " + id +
                     " out of order, expected " + std::to_string(expected_index));
    ++expected_index;
    tok.form = cols[1];
    tok.upos = cols[3];
    if (!is_upos_tag(tok.upos))
      throw io_error(path + ": line " + std::to_string(lineno) + ": unknown UPOS tag '" +
                     tok.upos + "'");
    if (!is_integer(cols[6]))
      throw io_error(path + ": line " + std::to_string(lineno) + ": bad head '" + cols[6] + "'");
    tok.head = std::stoi(cols[6]);
    if (tok.head == tok.index)
      throw io_error(path + ": line " + std::to_string(lineno) + ": token is its own head");
    tok.deprel = cols[7];
    tokens.push_back(std::move(tok));
  }
  finish_sentence(tb, tokens, offset, language);
  return tb;
}

void write_conllu(const Treebank& tb, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  for (const auto& s : tb.sentences) {
    os << "# sent_id = " << s.id << "\n";
    for (const auto& t : s.tokens) {
      os << t.index << '\t' << t.form << "\t_\t" << t.upos << "\t_\t_\t"
         << t.head << '\t' << t.deprel << "\t_\t_\n";
    }
    os << "\n";
  }
  if (!os) throw io_error("write failed: " + path);
}

Treebank delexicalize(const Treebank& tb) {
  Treebank out = tb;
  for (auto& s : out.sentences)
    for (auto& t : s.tokens) t.form = "_";
  return out;
}

std::vector<Treebank> resample_to_mean(const std::vector<Treebank>& tbs,
                                       uint64_t seed) {
  require(!tbs.empty(), "resample_to_mean: no treebanks");
  double total = 0;
  for (const auto& tb : tbs) {
    if (tb.sentences.empty())
      throw io_error("resample_to_mean: treebank '" + tb.language +
                     "' is empty, cannot resample from zero sentences");
    total += static_cast<double>(tb.size());
  }
  const size_t target =
      static_cast<size_t>(std::floor(total / static_cast<double>(tbs.size()) + 0.5));

  std::mt19937_64 rng(seed);
  std::vector<Treebank> out;
  out.reserve(tbs.size());
  for (const auto& tb : tbs) {
    Treebank r;
    r.language = tb.language;
    r.split = tb.split;
    for (size_t i : resample_indices(tb.size(), target, rng))
      r.sentences.push_back(tb.sentences[i]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<size_t> resample_indices(size_t n, size_t target,
                                     std::mt19937_64& rng) {
  require(n > 0, "resample_indices: nothing to sample from");
  std::vector<size_t> pick;
  pick.reserve(target);
  if (n == target) {
    for (size_t i = 0; i < n; ++i) pick.push_back(i);
  } else if (n > target) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::sample(idx.begin(), idx.end(), std::back_inserter(pick), target, rng);
  } else {
    for (size_t i = 0; i < n; ++i) pick.push_back(i);
    std::uniform_int_distribution<size_t> uni(0, n - 1);
    while (pick.size() < target) pick.push_back(uni(rng));
  }
  return pick;
}

}  // namespace parsel
