#ifndef PARSEL_SYNTHETIC_H
#define PARSEL_SYNTHETIC_H

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "parsel/treebank.h"

namespace parsel {

// Template grammar for fixture treebanks. Two families share one tag
// inventory but differ in visible word order: head-final clauses with
// postpositions and prenominal adjectives versus head-initial clauses with
// prepositions and postnominal adjectives. Within a family, grammars differ
// only in which side of its head noun a possessor noun takes. The possessor
// sits directly next to the head noun, so the UPOS surface is identical
// under both orders while the gold arcs of the pair flip.
struct GrammarSpec {
  std::string language;
  bool head_final = true;
  double possessor_after = 0.0;  // per-sentence chance of head-possessor order
  size_t sentences = 400;
  uint64_t seed = 1;
};

Sentence generate_sentence(const GrammarSpec& g, std::mt19937_64& rng);
Treebank generate_treebank(const GrammarSpec& g);

// The six-language fixture: per family, two single-order source grammars and
// one mixed-order target grammar.
struct FixtureSpec {
  uint64_t seed = 1;
  size_t train_sentences = 400;
  size_t target_sentences = 150;
};

std::vector<GrammarSpec> fixture_grammars(const FixtureSpec& spec);

// Writes <language>.conllu for every fixture grammar plus lang_vectors.tsv
// and fixture.conf into dir, creating it if missing.
void write_fixture(const std::string& dir, const FixtureSpec& spec);

}  // namespace parsel

#endif
