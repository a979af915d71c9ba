#include "parsel/synthetic.h"

#include <utility>

#include "parsel/io_util.h"

namespace parsel {

namespace {

// Parent is a local token index within the chunk being built, or one of the
// two placeholders resolved at sentence level.
constexpr int kParentVerb = -1;
constexpr int kParentRoot = -2;

struct Proto {
  std::string upos;
  std::string form;
  std::string deprel;
  int parent = kParentVerb;
};

struct Chunk {
  std::vector<Proto> tokens;
  int head = 0;  // local index of the token that attaches outside the chunk
};

bool flip(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::string word(std::mt19937_64& rng, const std::string& stem, int lexicon) {
  return stem + std::to_string(std::uniform_int_distribution<int>(1, lexicon)(rng));
}

// Appends src to dst, shifting local parent indices. Returns the global
// index of src's head token.
int append(Chunk& dst, const Chunk& src) {
  const int offset = static_cast<int>(dst.tokens.size());
  for (Proto t : src.tokens) {
    if (t.parent >= 0) t.parent += offset;
    dst.tokens.push_back(std::move(t));
  }
  return offset + src.head;
}

Chunk make_np(bool head_final, bool poss_after, const std::string& role,
              std::mt19937_64& rng) {
  Chunk c;
  const double kind = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (kind < 0.15) {
    c.tokens.push_back({"PRON", word(rng, "pn", 6), role, kParentVerb});
    return c;
  }
  if (kind < 0.30) {
    c.tokens.push_back({"PROPN", word(rng, "Name", 12), role, kParentVerb});
    return c;
  }

  const bool has_det = flip(rng, 0.6);
  const bool has_num = flip(rng, 0.15);
  const bool has_adj = flip(rng, 0.35);
  const bool has_poss = flip(rng, 0.3);

  auto push = [&](const char* upos, const char* stem, int lexicon,
                  const std::string& rel) {
    c.tokens.push_back({upos, word(rng, stem, lexicon), rel, kParentVerb});
    return static_cast<int>(c.tokens.size()) - 1;
  };

  // Every nominal modifier is on the family's side of the noun, so each one
  // contributes a family-distinctive arc. The possessor alone is governed by
  // the grammar's style.
  std::vector<int> mods;
  int head = -1;
  auto push_pair = [&] {
    if (has_poss && !poss_after) mods.push_back(push("NOUN", "noun", 20, "nmod:poss"));
    head = push("NOUN", "noun", 20, role);
    if (has_poss && poss_after) mods.push_back(push("NOUN", "noun", 20, "nmod:poss"));
  };
  if (head_final) {
    if (has_det) mods.push_back(push("DET", "det", 4, "det"));
    if (has_num) mods.push_back(push("NUM", "num", 8, "nummod"));
    if (has_adj) mods.push_back(push("ADJ", "adj", 10, "amod"));
    push_pair();
  } else {
    push_pair();
    if (has_adj) mods.push_back(push("ADJ", "adj", 10, "amod"));
    if (has_num) mods.push_back(push("NUM", "num", 8, "nummod"));
    if (has_det) mods.push_back(push("DET", "det", 4, "det"));
  }

  for (int m : mods) c.tokens[m].parent = head;
  c.head = head;
  return c;
}

Chunk make_pp(bool head_final, bool poss_after, std::mt19937_64& rng) {
  Chunk np = make_np(head_final, poss_after, "obl", rng);
  Chunk c;
  if (head_final) {
    const int h = append(c, np);
    c.tokens.push_back({"ADP", word(rng, "adp", 5), "case", h});
    c.head = h;
  } else {
    c.tokens.push_back({"ADP", word(rng, "adp", 5), "case", kParentVerb});
    const int h = append(c, np);
    c.tokens[0].parent = h;
    c.head = h;
  }
  return c;
}

}  // namespace

Sentence generate_sentence(const GrammarSpec& g, std::mt19937_64& rng) {
  const bool poss_after = flip(rng, g.possessor_after);
  const bool has_obj = flip(rng, 0.7);
  const bool has_pp = flip(rng, 0.6);
  const bool has_adv = flip(rng, 0.45);
  const bool has_aux = flip(rng, 0.5);

  Chunk cl;
  auto add_args = [&] {
    append(cl, make_np(g.head_final, poss_after, "nsubj", rng));
    if (has_obj) append(cl, make_np(g.head_final, poss_after, "obj", rng));
    if (has_pp) append(cl, make_pp(g.head_final, poss_after, rng));
    if (has_adv)
      cl.tokens.push_back({"ADV", word(rng, "adv", 6), "advmod", kParentVerb});
  };
  // The auxiliary follows the verb in the head-final family and precedes it
  // in the head-initial one, another per-clause family cue.
  int verb = -1;
  auto add_verb = [&] {
    if (has_aux && !g.head_final) {
      cl.tokens.push_back({"AUX", word(rng, "aux", 3), "aux", kParentVerb});
    }
    verb = static_cast<int>(cl.tokens.size());
    cl.tokens.push_back({"VERB", word(rng, "verb", 15), "root", kParentRoot});
    if (has_aux && g.head_final)
      cl.tokens.push_back({"AUX", word(rng, "aux", 3), "aux", verb});
  };

  if (g.head_final) {
    add_args();
    add_verb();
  } else {
    add_verb();
    add_args();
  }
  cl.tokens.push_back({"PUNCT", ".", "punct", kParentVerb});

  Sentence s;
  s.language = g.language;
  for (size_t i = 0; i < cl.tokens.size(); ++i) {
    const Proto& p = cl.tokens[i];
    Token t;
    t.index = static_cast<int>(i) + 1;
    t.form = p.form;
    t.upos = p.upos;
    t.deprel = p.deprel;
    t.head = p.parent == kParentRoot ? 0
             : p.parent == kParentVerb ? verb + 1
                                       : p.parent + 1;
    s.tokens.push_back(std::move(t));
  }
  return s;
}

Treebank generate_treebank(const GrammarSpec& g) {
  Treebank tb;
  tb.language = g.language;
  std::mt19937_64 rng(g.seed);
  for (size_t i = 0; i < g.sentences; ++i) {
    Sentence s = generate_sentence(g, rng);
    s.id = g.language + "#" + std::to_string(i);
    tb.sentences.push_back(std::move(s));
  }
  return tb;
}

std::vector<GrammarSpec> fixture_grammars(const FixtureSpec& spec) {
  auto gram = [&](const char* lang, bool head_final, double poss_after,
                  size_t n) {
    GrammarSpec g;
    g.language = lang;
    g.head_final = head_final;
    g.possessor_after = poss_after;
    g.sentences = n;
    g.seed = mix_seed(spec.seed, lang);
    return g;
  };
  return {
      gram("sa1", true, 0.0, spec.train_sentences),
      gram("sa2", true, 1.0, spec.train_sentences),
      gram("sb1", false, 0.0, spec.train_sentences),
      gram("sb2", false, 1.0, spec.train_sentences),
      gram("sat", true, 0.6, spec.target_sentences),
      gram("sbt", false, 0.6, spec.target_sentences),
  };
}

void write_fixture(const std::string& dir, const FixtureSpec& spec) {
  ensure_dir(dir);
  for (const auto& g : fixture_grammars(spec))
    write_conllu(generate_treebank(g), dir + "/" + g.language + ".conllu");

  // Family axes are signed so no row degenerates to the zero vector. One
  // missing cell (sbt's possessor_after) exercises column-mean imputation.
  std::string vectors;
  vectors += "language\tverb_final\tadp_after\tadj_before\tpossessor_after\tsubj_first\n";
  vectors += "sa1\t1\t1\t1\t0\t1\n";
  vectors += "sa2\t1\t1\t1\t1\t1\n";
  vectors += "sb1\t-1\t-1\t-1\t0\t-1\n";
  vectors += "sb2\t-1\t-1\t-1\t1\t-1\n";
  vectors += "sat\t1\t1\t1\t0.6\t1\n";
  vectors += "sbt\t-1\t-1\t-1\t\t-1\n";
  write_text_file(dir + "/lang_vectors.tsv", vectors);

  std::string conf;
  conf += "# fixture experiment configuration\n";
  conf += "source_languages = sa1,sa2,sb1,sb2\n";
  conf += "target_languages = sat,sbt\n";
  conf += "treebank.sa1 = sa1.conllu\n";
  conf += "treebank.sa2 = sa2.conllu\n";
  conf += "treebank.sb1 = sb1.conllu\n";
  conf += "treebank.sb2 = sb2.conllu\n";
  conf += "treebank.sat = sat.conllu\n";
  conf += "treebank.sbt = sbt.conllu\n";
  conf += "lang_vectors = lang_vectors.tsv\n";
  conf += "out_dir = out\n";
  conf += "seed = " + std::to_string(spec.seed) + "\n";
  conf += "jobs = 2\n";
  conf += "parser_epochs = 3\n";
  conf += "resample = true\n";
  conf += "embed_dim = 64\n";
  conf += "ffn_dim = 128\n";
  conf += "layers = 2\n";
  conf += "heads = 4\n";
  conf += "mlp_hidden = 64\n";
  conf += "max_len = 64\n";
  conf += "learning_rate = 0.0003\n";
  conf += "mlm_steps = 1200\n";
  conf += "batch_size = 16\n";
  conf += "eval_every = 100\n";
  conf += "patience = 6\n";
  conf += "max_epochs = 15\n";
  conf += "dev_fraction = 0.1\n";
  conf += "tau = 0.9\n";
  conf += "kl_alpha = 0.1\n";
  conf += "include_punct = true\n";
  conf += "reference_system = ilps\n";
  conf += "significance_alpha = 0.05\n";
  write_text_file(dir + "/fixture.conf", conf);
}

}  // namespace parsel
