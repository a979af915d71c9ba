#include "parsel/parser.h"

#include <random>

#include "doctest.h"
#include "parsel/io_util.h"
#include "parsel/synthetic.h"
#include "parsel/treebank.h"
#include "test_util.hpp"

using namespace parsel;

namespace {

Treebank pattern_bank(const std::string& lang, size_t copies) {
  // Two fixed clause shapes; enough signal for the perceptron to memorize.
  Treebank tb;
  tb.language = lang;
  for (size_t i = 0; i < copies; ++i) {
    tb.sentences.push_back(testutil::make_sentence(
        {"DET", "NOUN", "VERB", "NOUN", "PUNCT"}, {2, 3, 0, 3, 3}, lang,
        lang + "#" + std::to_string(2 * i)));
    tb.sentences.push_back(testutil::make_sentence(
        {"PRON", "VERB", "ADV", "PUNCT"}, {2, 0, 2, 2}, lang,
        lang + "#" + std::to_string(2 * i + 1)));
  }
  return tb;
}

}  // namespace

TEST_CASE("arc features") {
  const auto s = testutil::make_sentence({"DET", "NOUN", "VERB"}, {2, 3, 0});

  SUBCASE("expected templates fire") {
    const auto fv = extract_arc_features(s, 3, 2);
    CHECK(fv.contains(feature_id("hpos=VERB")));
    CHECK(fv.contains(feature_id("dpos=NOUN")));
    CHECK(fv.contains(feature_id("hpos|dpos=VERB|NOUN")));
    CHECK(fv.contains(feature_id("dist=-1")));
    CHECK_FALSE(fv.contains(feature_id("hpos=NOUN")));
  }

  SUBCASE("root and boundary context") {
    const auto fv = extract_arc_features(s, 0, 3);
    CHECK(fv.contains(feature_id("hpos=ROOT")));
    CHECK(fv.contains(feature_id("dist=+3")));
    CHECK(fv.contains(feature_id("dpos+1=_B_")));
  }

  SUBCASE("items are sorted and deterministic") {
    const auto a = extract_arc_features(s, 3, 1);
    const auto b = extract_arc_features(s, 3, 1);
    REQUIRE(a.items.size() == b.items.size());
    for (size_t i = 0; i < a.items.size(); ++i) {
      CHECK(a.items[i] == b.items[i]);
      if (i > 0) CHECK(a.items[i - 1].first < a.items[i].first);
    }
    int total = 0;
    for (const auto& it : a.items) total += it.second;
    CHECK(total == 12);  // twelve templates, duplicates folded into counts
  }

  SUBCASE("contract violations") {
    CHECK_THROWS_AS(extract_arc_features(s, 1, 1), contract_error);
    CHECK_THROWS_AS(extract_arc_features(s, 4, 1), contract_error);
    CHECK_THROWS_AS(extract_arc_features(s, 0, 0), contract_error);
    CHECK_THROWS_AS(extract_arc_features(s, 0, 4), contract_error);
  }
}

TEST_CASE("distance bins") {
  const auto s = testutil::make_sentence(
      {"NOUN", "NOUN", "NOUN", "NOUN", "NOUN", "NOUN", "NOUN", "NOUN", "NOUN",
       "NOUN", "NOUN", "NOUN"},
      {0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  CHECK(extract_arc_features(s, 1, 7).contains(feature_id("dist=+6:10")));
  CHECK(extract_arc_features(s, 1, 12).contains(feature_id("dist=+11")) ==
        false);
  CHECK(extract_arc_features(s, 1, 12).contains(feature_id("dist=+>10")));
  CHECK(extract_arc_features(s, 12, 1).contains(feature_id("dist=->10")));
}

TEST_CASE("training memorizes a small treebank") {
  const Treebank tb = pattern_bank("xx", 20);
  const SourceParserModel model = train_parser(tb, 5, 7);
  CHECK(model.language == "xx");
  CHECK(model.epochs_trained == 5);
  CHECK_FALSE(model.averaged_weights.empty());

  for (const auto& s : tb.sentences) {
    const auto pred = parse(model, s);
    CHECK(pred == s.heads());
    CHECK(is_valid_tree(pred));
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  const Treebank tb = pattern_bank("xx", 10);
  const auto a = train_parser(tb, 3, 42);
  const auto b = train_parser(tb, 3, 42);
  REQUIRE(a.averaged_weights.size() == b.averaged_weights.size());
  for (const auto& [id, w] : a.averaged_weights) {
    REQUIRE(b.averaged_weights.count(id) == 1);
    CHECK(b.averaged_weights.at(id) == w);
  }
}

TEST_CASE("parse output is always a valid tree") {
  GrammarSpec g;
  g.language = "zz";
  g.sentences = 30;
  g.seed = 9;
  const Treebank tb = generate_treebank(g);
  const auto model = train_parser(tb, 2, 1);

  GrammarSpec other = g;
  other.head_final = false;
  other.seed = 10;
  for (const auto& s : generate_treebank(other).sentences) {
    const auto pred = parse(model, s);
    REQUIRE(pred.size() == s.tokens.size());
    CHECK(is_valid_tree(pred));
  }
}

TEST_CASE("score_arcs shape and absent diagonal") {
  const auto s = testutil::make_sentence({"NOUN", "VERB"}, {2, 0});
  std::unordered_map<uint64_t, double> w;
  w[feature_id("hpos=ROOT")] = 1.0;
  const auto scores = score_arcs(w, s);
  REQUIRE(scores.size() == 3);
  for (const auto& row : scores) REQUIRE(row.size() == 3);
  CHECK(scores[1][2] == 0.0);
  CHECK(scores[0][1] == 1.0);
  CHECK(scores[0][2] == 1.0);
  // Self-arcs and the root column are unusable.
  CHECK(scores[1][1] == kNoArc);
  CHECK(scores[2][2] == kNoArc);
}

TEST_CASE("model save/load round-trips") {
  const auto dir = testutil::scratch_dir("parser_model");
  const Treebank tb = pattern_bank("yy", 8);
  const auto model = train_parser(tb, 4, 3);
  save_parser_model(model, dir + "/yy.model");

  const auto loaded = load_parser_model(dir + "/yy.model");
  CHECK(loaded.language == "yy");
  CHECK(loaded.epochs_trained == 4);
  REQUIRE(loaded.weights.size() == model.weights.size());
  REQUIRE(loaded.averaged_weights.size() == model.averaged_weights.size());
  for (const auto& [id, w] : model.averaged_weights) {
    CHECK(loaded.averaged_weights.at(id) == w);
  }
  for (const auto& s : tb.sentences) {
    CHECK(parse(loaded, s) == parse(model, s));
  }

  CHECK_THROWS_AS(load_parser_model(dir + "/missing.model"), io_error);
  write_text_file(dir + "/junk.model", "not a model");
  CHECK_THROWS_AS(load_parser_model(dir + "/junk.model"), io_error);
}

TEST_CASE("training rejects empty input") {
  Treebank empty;
  empty.language = "xx";
  CHECK_THROWS(train_parser(empty, 1, 1));
}
