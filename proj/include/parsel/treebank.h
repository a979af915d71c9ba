#ifndef PARSEL_TREEBANK_H
#define PARSEL_TREEBANK_H

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace parsel {

// The 17-tag universal POS inventory, in canonical (alphabetical) order.
const std::vector<std::string>& upos_tags();
bool is_upos_tag(const std::string& tag);

struct Token {
  int index = 0;        // 1-based position within the sentence
  std::string form = "_";
  std::string upos;
  int head = 0;         // 0 = artificial root
  std::string deprel = "_";
};

struct Sentence {
  std::vector<Token> tokens;
  std::string language;
  std::string id;  // treebank name + sentence offset, e.g. "sa1#12"

  int length() const { return static_cast<int>(tokens.size()); }
  std::vector<int> heads() const;
  std::vector<std::string> upos() const;
};

enum class Split { train, dev, test };
std::string split_name(Split s);

struct Treebank {
  std::vector<Sentence> sentences;
  std::string language;
  Split split = Split::train;

  size_t size() const { return sentences.size(); }
};

// True iff every token is reachable from the artificial root by following
// head pointers (exactly one head per token, no cycles). Multiple tokens
// may attach directly to the root; that is still one tree rooted at 0.
bool is_valid_tree(const std::vector<int>& heads);

// Reads a 10-column CoNLL-U file. Multiword-token ranges ("3-4") and empty
// nodes ("5.1") are skipped. Comment lines start with '#'; blank lines
// separate sentences. Throws io_error with a line number on malformed
// columns, and with the sentence id on cyclic or multi-root head structure.
Treebank read_conllu(const std::string& path, const std::string& language,
                     Split split = Split::train);

void write_conllu(const Treebank& tb, const std::string& path);

// Drops FORM/LEMMA content; upos/head/deprel and sentence structure are
// unchanged. Idempotent.
Treebank delexicalize(const Treebank& tb);

// Resamples every treebank to the mean sentence count (rounded half-up).
// Downsampling draws uniformly without replacement preserving order;
// upsampling keeps every original sentence once and appends uniform draws
// with replacement. Deterministic under a fixed seed.
std::vector<Treebank> resample_to_mean(const std::vector<Treebank>& tbs,
                                       uint64_t seed);

// The index form of the same policy, shared with label-set resampling.
std::vector<size_t> resample_indices(size_t n, size_t target,
                                     std::mt19937_64& rng);

}  // namespace parsel

#endif
