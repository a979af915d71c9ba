#include "parsel/selection.h"

#include <random>

#include "doctest.h"
#include "parsel/arborescence.h"
#include "parsel/io_util.h"
#include "test_util.hpp"

using namespace parsel;

namespace {

ScoreMatrix matrix(const std::vector<std::vector<double>>& scores) {
  ScoreMatrix m;
  for (size_t p = 0; p < scores.size(); ++p) {
    m.parser_ids.push_back(static_cast<int>(p) + 1);
    m.parser_languages.push_back("l" + std::to_string(p + 1));
  }
  for (size_t j = 0; j < scores[0].size(); ++j) {
    m.sentence_ids.push_back("t#" + std::to_string(j));
  }
  m.scores = scores;
  return m;
}

}  // namespace

TEST_CASE("pure per-sentence selection") {
  const ScoreMatrix m = matrix({{0.2, 1.1}, {0.9, 0.3}, {0.9, 0.2}});
  // Column 0 ties between parsers 2 and 3: the lower parser id wins.
  CHECK(select_pure_ilps(m, 0) == 1);
  CHECK(select_pure_ilps(m, 1) == 0);
  CHECK_THROWS_AS(select_pure_ilps(m, 2), contract_error);
}

TEST_CASE("aggregate means and treebank-level selection") {
  const ScoreMatrix m = matrix({{0.8, 1.2}, {1.0, 1.0}});
  const auto means = aggregate_sbps(m);
  REQUIRE(means.size() == 2);
  CHECK(means[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(means[1] == doctest::Approx(1.0).epsilon(1e-12));
  // Equal means tie to the lower parser id.
  CHECK(select_sbps(means, m.parser_ids) == 0);
  CHECK(select_sbps({0.4, 0.9}, {1, 2}) == 1);
}

TEST_CASE("threshold set") {
  const std::vector<int> ids = {1, 2, 3};

  SUBCASE("worked example at tau 0.9") {
    const auto set = threshold_set({0.96, 0.90, 0.50}, ids, 0.9);
    CHECK(set == std::vector<size_t>{0, 1});
  }

  SUBCASE("tau 1 keeps exact ties with the maximum") {
    const auto set = threshold_set({0.7, 0.7, 0.1}, ids, 1.0);
    CHECK(set == std::vector<size_t>{0, 1});
  }

  SUBCASE("tau 0 admits every non-negative score") {
    const auto set = threshold_set({0.5, 0.0, -0.1}, ids, 0.0);
    CHECK(set == std::vector<size_t>{0, 1});
  }

  SUBCASE("all-negative scores fall back to the argmax singleton") {
    const auto set = threshold_set({-0.5, -0.2, -0.9}, ids, 0.9);
    CHECK(set == std::vector<size_t>{1});
  }

  SUBCASE("negative scores never join the set") {
    const auto set = threshold_set({1.0, -0.2, 0.95}, ids, 0.9);
    CHECK(set == std::vector<size_t>{0, 2});
  }

  SUBCASE("always contains the argmax and shrinks as tau grows") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> uni(-1.0, 1.5);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> scores(4);
      for (auto& s : scores) s = uni(rng);
      const std::vector<int> pid = {1, 2, 3, 4};
      size_t argmax = 0;
      for (size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[argmax]) argmax = i;
      }
      size_t prev = 5;
      for (double tau : {0.0, 0.5, 0.9, 1.0}) {
        const auto set = threshold_set(scores, pid, tau);
        REQUIRE_FALSE(set.empty());
        bool has_argmax = false;
        for (size_t i : set) {
          if (scores[i] == scores[argmax]) has_argmax = true;
        }
        CHECK(has_argmax);
        CHECK(set.size() <= prev);
        prev = set.size();
      }
    }
  }

  SUBCASE("contract checks") {
    CHECK_THROWS_AS(threshold_set({}, {}, 0.9), contract_error);
    CHECK_THROWS_AS(threshold_set({1.0}, {1}, -0.1), contract_error);
    CHECK_THROWS_AS(threshold_set({1.0}, {1}, 1.1), contract_error);
    CHECK_THROWS_AS(threshold_set({1.0, 2.0}, {1}, 0.9), contract_error);
  }
}

TEST_CASE("weighted arc graph") {
  WeightedArcGraph g(3);
  CHECK_FALSE(g.has_arc(0, 1));
  g.add_weight(0, 1, 1.5);
  CHECK(g.has_arc(0, 1));
  CHECK(g.weight[0][1] == 1.5);
  g.add_weight(0, 1, 2.0);  // accumulates
  CHECK(g.weight[0][1] == 3.5);

  CHECK_THROWS_AS(g.add_weight(1, 1, 1.0), contract_error);
  CHECK_THROWS_AS(g.add_weight(0, 0, 1.0), contract_error);
  CHECK_THROWS_AS(g.add_weight(0, 4, 1.0), contract_error);
  CHECK_THROWS_AS(g.add_weight(-1, 1, 1.0), contract_error);

  g.add_weight(1, 2, 1.0);
  g.add_weight(2, 3, 1.0);
  CHECK(edmonds_mst(g) == std::vector<int>{0, 1, 2});
}

TEST_CASE("reparse") {
  SUBCASE("two voters, weight decides the contested arc") {
    // Voter A (weight 2) says heads {0,1}; voter B (weight 1.5) says {2,0}.
    // Arcs: 0->1 (2), 1->2 (2), 2->1 (1.5), 0->2 (1.5). Tree {0,1} scores 4,
    // tree {2,0} scores 3, tree {0,0} scores 3.5: A's tree wins.
    const auto tree =
        reparse({{0, 1}, {2, 0}}, {2.0, 1.5});
    CHECK(tree == std::vector<int>{0, 1});
  }

  SUBCASE("single voter is the identity") {
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> w(0.1, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 10);
      const auto t = testutil::random_tree(n, rng);
      CHECK(reparse({t}, {w(rng)}) == t);
    }
  }

  SUBCASE("unanimous voters are the identity") {
    const std::vector<int> t = {2, 0, 2, 3};
    CHECK(reparse({t, t, t}, {1.0, 0.5, 2.0}) == t);
  }

  SUBCASE("weights scale-invariantly") {
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 8);
      const std::vector<std::vector<int>> votes = {
          testutil::random_tree(n, rng), testutil::random_tree(n, rng),
          testutil::random_tree(n, rng)};
      const std::vector<double> w = {1.0, 2.0, 0.5};
      std::vector<double> scaled = {7.0, 14.0, 3.5};
      CHECK(reparse(votes, w) == reparse(votes, scaled));
    }
  }

  SUBCASE("majority beats minority arc by arc") {
    // Two equal-weight voters agree on {0,1}; one dissenter says {2,0}.
    const auto tree = reparse({{0, 1}, {0, 1}, {2, 0}}, {1.0, 1.0, 1.0});
    CHECK(tree == std::vector<int>{0, 1});
  }

  SUBCASE("contract checks") {
    CHECK_THROWS_AS(reparse({}, {}), contract_error);
    CHECK_THROWS_AS(reparse({{0, 1}}, {1.0, 2.0}), contract_error);
    CHECK_THROWS_AS(reparse({{0, 1}}, {0.0}), contract_error);
    CHECK_THROWS_AS(reparse({{0, 1}}, {-1.0}), contract_error);
    CHECK_THROWS_AS(reparse({{0, 1}, {0}}, {1.0, 1.0}), contract_error);
    CHECK_THROWS_AS(reparse({{1, 1}}, {1.0}), contract_error);
  }
}

TEST_CASE("score matrix round-trip") {
  const auto dir = testutil::scratch_dir("selection_scores");
  ScoreMatrix m = matrix({{0.25, 1.0 / 3.0}, {2.0, -0.125}});
  m.parser_languages = {"aa", "bb"};
  save_score_matrix(m, dir + "/s.tsv");
  const auto loaded = load_score_matrix(dir + "/s.tsv");
  CHECK(loaded.parser_ids == m.parser_ids);
  CHECK(loaded.parser_languages == m.parser_languages);
  CHECK(loaded.sentence_ids == m.sentence_ids);
  REQUIRE(loaded.scores.size() == 2);
  for (size_t p = 0; p < 2; ++p) {
    for (size_t j = 0; j < 2; ++j) {
      CHECK(loaded.scores[p][j] == m.scores[p][j]);
    }
  }
  CHECK_THROWS_AS(load_score_matrix(dir + "/nope.tsv"), io_error);
}

TEST_CASE("selection entries round-trip") {
  const auto dir = testutil::scratch_dir("selection_entries");
  std::vector<SelectionEntry> entries;
  SelectionEntry all;
  all.sentence_id = "*";
  all.parser_ids = {1, 3};
  all.weights = {1.0, 0.5};
  entries.push_back(all);
  SelectionEntry one;
  one.sentence_id = "tt#4";
  one.parser_ids = {2};
  one.weights = {1.0};
  entries.push_back(one);

  save_selection(entries, dir + "/sel.tsv");
  const auto loaded = load_selection(dir + "/sel.tsv");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].sentence_id == "*");
  CHECK(loaded[0].parser_ids == std::vector<int>{1, 3});
  CHECK(loaded[0].weights == std::vector<double>{1.0, 0.5});
  CHECK(loaded[1].sentence_id == "tt#4");
  CHECK(loaded[1].parser_ids == std::vector<int>{2});
  CHECK_THROWS_AS(load_selection(dir + "/nope.tsv"), io_error);
}
