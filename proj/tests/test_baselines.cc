#include "parsel/baselines.h"

#include <cmath>
#include <random>

#include "doctest.h"
#include "parsel/io_util.h"
#include "test_util.hpp"

using namespace parsel;

namespace {

Treebank bank(const std::vector<std::vector<std::string>>& tagseqs,
              const std::string& lang = "xx") {
  Treebank tb;
  tb.language = lang;
  int i = 0;
  for (const auto& tags : tagseqs) {
    std::vector<int> heads(tags.size(), 0);
    tb.sentences.push_back(testutil::make_sentence(
        tags, heads, lang, lang + "#" + std::to_string(i++)));
  }
  return tb;
}

TrigramDistribution dist(const std::map<std::string, double>& prob) {
  TrigramDistribution d;
  d.prob = prob;
  return d;
}

}  // namespace

TEST_CASE("trigram counts pad with two boundary markers") {
  const auto counts = trigram_counts(bank({{"NOUN"}}));
  REQUIRE(counts.size() == 3);
  CHECK(counts.at("B B NOUN") == 1);
  CHECK(counts.at("B NOUN E") == 1);
  CHECK(counts.at("NOUN E E") == 1);

  const auto two = trigram_counts(bank({{"DET", "NOUN"}}));
  REQUIRE(two.size() == 4);
  CHECK(two.at("B B DET") == 1);
  CHECK(two.at("B DET NOUN") == 1);
  CHECK(two.at("DET NOUN E") == 1);
  CHECK(two.at("NOUN E E") == 1);
}

TEST_CASE("trigram counts are sentence-order invariant") {
  const auto a = trigram_counts(bank({{"NOUN", "VERB"}, {"DET", "NOUN"}}));
  const auto b = trigram_counts(bank({{"DET", "NOUN"}, {"NOUN", "VERB"}}));
  CHECK(a == b);
}

TEST_CASE("smoothed distribution sums to one and stays positive") {
  const auto counts = trigram_counts(bank({{"NOUN", "VERB", "PUNCT"}}));
  std::vector<std::string> support;
  for (const auto& [k, v] : counts) support.push_back(k);
  support.push_back("X X X");  // unseen trigram gets smoothed mass

  const auto d = smoothed_distribution(counts, support, 0.1);
  double sum = 0.0;
  for (const auto& [k, p] : d.prob) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.prob.at("X X X") < d.prob.at("B B NOUN"));
  CHECK_THROWS_AS(smoothed_distribution(counts, {}, 0.1), contract_error);
  CHECK_THROWS_AS(smoothed_distribution(counts, support, -1.0),
                  contract_error);
}

TEST_CASE("kl divergence") {
  SUBCASE("identical distributions diverge by zero") {
    const auto p = dist({{"a", 0.5}, {"b", 0.5}});
    CHECK(kl_divergence(p, p) == 0.0);
  }

  SUBCASE("worked example") {
    const auto p = dist({{"A", 0.5}, {"B", 0.5}});
    const auto q = dist({{"A", 0.25}, {"B", 0.75}});
    // 0.5 ln 2 + 0.5 ln(2/3)
    CHECK(kl_divergence(p, q) ==
          doctest::Approx(0.14384103622589045).epsilon(1e-10));
  }

  SUBCASE("asymmetric") {
    const auto p = dist({{"A", 0.5}, {"B", 0.5}});
    const auto q = dist({{"A", 0.25}, {"B", 0.75}});
    CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)));
  }

  SUBCASE("non-negative on random pairs") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> uni(0.01, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
      std::map<std::string, double> pm, qm;
      double ps = 0.0, qs = 0.0;
      for (int k = 0; k < 6; ++k) {
        const std::string key = "k" + std::to_string(k);
        pm[key] = uni(rng);
        qm[key] = uni(rng);
        ps += pm[key];
        qs += qm[key];
      }
      for (auto& [k, v] : pm) v /= ps;
      for (auto& [k, v] : qm) v /= qs;
      CHECK(kl_divergence(dist(pm), dist(qm)) >= 0.0);
    }
  }

  SUBCASE("q must cover p's support") {
    const auto p = dist({{"A", 1.0}});
    const auto q = dist({{"B", 1.0}});
    CHECK_THROWS_AS(kl_divergence(p, q), contract_error);
  }
}

TEST_CASE("kl_target_source smooths over the union support") {
  const auto target = trigram_counts(bank({{"NOUN", "VERB"}}));
  const auto source = trigram_counts(bank({{"DET", "NOUN"}}));
  const double kl = kl_target_source(target, source, 0.1);
  CHECK(kl > 0.0);
  CHECK(std::isfinite(kl));
  CHECK(kl_target_source(target, target, 0.1) == doctest::Approx(0.0));
}

TEST_CASE("kl similarity transform") {
  CHECK(kl_similarity(0.0, 1e-6) == doctest::Approx(1e6).epsilon(1e-12));
  CHECK(kl_similarity(1.0, 1e-6) == doctest::Approx(1.0 / (1.0 + 1e-6)));
  CHECK(kl_similarity(0.5) > kl_similarity(2.0));
}

TEST_CASE("kl_similarities ranks the matching source first") {
  const Treebank target = bank({{"NOUN", "VERB"}, {"NOUN", "VERB", "PUNCT"}},
                               "tt");
  const Treebank near = bank({{"NOUN", "VERB"}, {"NOUN", "VERB", "PUNCT"}},
                             "s1");
  const Treebank far = bank({{"PUNCT", "PUNCT", "ADJ"}, {"ADJ"}}, "s2");
  const auto sims = kl_similarities(target, {near, far});
  REQUIRE(sims.size() == 2);
  CHECK(sims[0] > sims[1]);
}

TEST_CASE("cosine") {
  CHECK(cosine({1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(cosine({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(cosine({1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}) ==
        doctest::Approx(0.7071067811865475).epsilon(1e-10));
  CHECK(cosine({1.0, 1.0}, {-1.0, -1.0}) == doctest::Approx(-1.0));
  // Scale invariance for positive c.
  CHECK(cosine({2.0, 6.0}, {1.0, 0.5}) ==
        doctest::Approx(cosine({4.0, 12.0}, {1.0, 0.5})).epsilon(1e-12));
  // Zero vectors have similarity zero by convention.
  CHECK(cosine({0.0, 0.0}, {1.0, 2.0}) == 0.0);
  CHECK_THROWS_AS(cosine({1.0}, {1.0, 2.0}), contract_error);
}

TEST_CASE("language vector file parsing") {
  const auto dir = testutil::scratch_dir("baselines_l2v");

  SUBCASE("parses and imputes missing cells with the column mean") {
    write_text_file(dir + "/v.tsv",
                    "language\tf1\tf2\tf3\n"
                    "aa\t1\t2\t\n"
                    "bb\t3\t\t5\n"
                    "cc\t\t4\t7\n");
    const auto vecs = read_language_vectors(dir + "/v.tsv");
    REQUIRE(vecs.size() == 3);
    CHECK(vecs[0].language == "aa");
    CHECK(vecs[0].values == std::vector<double>{1.0, 2.0, 6.0});
    CHECK(vecs[1].values == std::vector<double>{3.0, 3.0, 5.0});
    CHECK(vecs[2].values == std::vector<double>{2.0, 4.0, 7.0});

    const auto& aa = find_language_vector(vecs, "aa");
    CHECK(aa.values[0] == 1.0);
    CHECK_THROWS_AS(find_language_vector(vecs, "zz"), io_error);
  }

  SUBCASE("an all-empty column imputes to zero") {
    write_text_file(dir + "/z.tsv",
                    "language\tf1\tf2\n"
                    "aa\t1\t\n"
                    "bb\t2\t\n");
    const auto vecs = read_language_vectors(dir + "/z.tsv");
    CHECK(vecs[0].values == std::vector<double>{1.0, 0.0});
    CHECK(vecs[1].values == std::vector<double>{2.0, 0.0});
  }

  SUBCASE("malformed rows are rejected with line numbers") {
    write_text_file(dir + "/bad.tsv",
                    "language\tf1\tf2\n"
                    "aa\t1\n");
    CHECK_THROWS_WITH_AS(read_language_vectors(dir + "/bad.tsv"),
                         doctest::Contains("line 2"), io_error);
    write_text_file(dir + "/dup.tsv",
                    "language\tf1\n"
                    "aa\t1\n"
                    "aa\t2\n");
    CHECK_THROWS_AS(read_language_vectors(dir + "/dup.tsv"), io_error);
    write_text_file(dir + "/short.tsv", "language\n");
    CHECK_THROWS_AS(read_language_vectors(dir + "/short.tsv"), io_error);
    CHECK_THROWS_AS(read_language_vectors(dir + "/missing.tsv"), io_error);
  }
}

TEST_CASE("cosine_similarities keeps source order") {
  LanguageVector t{"tt", {1.0, 0.0}};
  LanguageVector s1{"s1", {1.0, 0.0}};
  LanguageVector s2{"s2", {1.0, 1.0}};
  const auto sims = cosine_similarities(t, {s1, s2});
  REQUIRE(sims.size() == 2);
  CHECK(sims[0] == doctest::Approx(1.0));
  CHECK(sims[1] == doctest::Approx(0.7071067811865475).epsilon(1e-10));
}
