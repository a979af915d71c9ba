#include "parsel/ilps.h"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "parsel/io_util.h"
#include "test_util.hpp"

using namespace parsel;

namespace {

IlpsConfig tiny_config() {
  IlpsConfig cfg;
  cfg.embed_dim = 16;
  cfg.ffn_dim = 32;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.mlp_hidden = 16;
  cfg.max_len = 16;
  cfg.lr = 3e-3;
  cfg.batch_size = 8;
  cfg.mlm_batch_size = 8;
  cfg.eval_every = 50;
  cfg.patience = 10;
  return cfg;
}

RegressionExample example(int parser, const std::vector<std::string>& tags,
                          double label, const std::string& sid) {
  RegressionExample e;
  e.parser_id = parser;
  e.upos = tags;
  e.label = label;
  e.sentence_id = sid;
  return e;
}

}  // namespace

TEST_CASE("vocab layout") {
  const auto& v = IlpsModel::vocab();
  REQUIRE(v.size() == IlpsModel::kVocabSize);
  CHECK(v[0] == "ADJ");
  CHECK(v[16] == "X");
  CHECK(v[IlpsModel::kMaskId] == "[MASK]");
  CHECK(v[IlpsModel::kSsId] == "[ss]");
  CHECK(v[IlpsModel::kPadId] == "[PAD]");

  CHECK(IlpsModel::tag_id("ADJ") == 0);
  CHECK(IlpsModel::tag_id("NOUN") == 7);
  CHECK(IlpsModel::tag_id("X") == 16);
  CHECK_THROWS_AS(IlpsModel::tag_id("WORD"), io_error);
  CHECK_THROWS_AS(IlpsModel::tag_id("[MASK]"), io_error);
}

TEST_CASE("masking plan counts") {
  std::mt19937_64 rng(41);
  SUBCASE("rounding and clamping") {
    CHECK(make_masking_plan(10, rng).items.size() == 2);   // 1.5 rounds up
    CHECK(make_masking_plan(3, rng).items.size() == 1);    // floor of 1
    CHECK(make_masking_plan(1, rng).items.size() == 1);
    CHECK(make_masking_plan(200, rng).items.size() == 20);  // cap
    CHECK(make_masking_plan(40, rng).items.size() == 6);
    CHECK_THROWS_AS(make_masking_plan(0, rng), contract_error);
  }

  SUBCASE("positions are distinct, in range, ascending") {
    for (int trial = 0; trial < 200; ++trial) {
      const auto plan = make_masking_plan(17, rng);
      std::set<int> seen;
      int prev = -1;
      for (const auto& [pos, action] : plan.items) {
        CHECK(pos >= 0);
        CHECK(pos < 17);
        CHECK(pos > prev);
        prev = pos;
        CHECK(seen.insert(pos).second);
      }
    }
  }

  SUBCASE("80/10/10 action split") {
    int mask = 0, keep = 0, random = 0, total = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const auto plan = make_masking_plan(20, rng);
      for (const auto& [pos, action] : plan.items) {
        ++total;
        if (action == MaskAction::mask) ++mask;
        if (action == MaskAction::keep) ++keep;
        if (action == MaskAction::random) ++random;
      }
    }
    CHECK(std::fabs(double(mask) / total - 0.8) < 0.02);
    CHECK(std::fabs(double(keep) / total - 0.1) < 0.02);
    CHECK(std::fabs(double(random) / total - 0.1) < 0.02);
  }
}

TEST_CASE("apply_masking_plan") {
  std::mt19937_64 rng(42);
  const std::vector<int> ids = {3, 7, 11, 2, 0};

  MaskingPlan plan;
  plan.items = {{0, MaskAction::mask},
                {2, MaskAction::keep},
                {4, MaskAction::random}};
  const auto out = apply_masking_plan(ids, plan, rng);
  REQUIRE(out.size() == ids.size());
  CHECK(out[0] == IlpsModel::kMaskId);
  CHECK(out[1] == 7);
  CHECK(out[2] == 11);
  CHECK(out[3] == 2);
  CHECK(out[4] >= 0);
  CHECK(out[4] <= 16);  // random draws stay within the real tags

  MaskingPlan bad;
  bad.items = {{9, MaskAction::mask}};
  CHECK_THROWS_AS(apply_masking_plan(ids, bad, rng), contract_error);
}

TEST_CASE("encode_tags") {
  const IlpsModel model(tiny_config(), {"aa", "bb"}, 1);

  const auto plain = model.encode_tags({"NOUN", "VERB"}, false);
  CHECK(plain == std::vector<int>{7, 15});

  const auto ss = model.encode_tags({"NOUN", "VERB"}, true);
  CHECK(ss == std::vector<int>{IlpsModel::kSsId, 7, 15});

  std::vector<std::string> longtags(30, "NOUN");
  std::ostringstream warn;
  const auto truncated = model.encode_tags(longtags, true, &warn, "aa#7");
  CHECK(truncated.size() == 16);
  CHECK(truncated[0] == IlpsModel::kSsId);
  CHECK(warn.str().find("aa#7") != std::string::npos);
  CHECK(warn.str().find("truncated") != std::string::npos);

  CHECK_THROWS_AS(model.encode_tags({"NOT_A_TAG"}, false), io_error);
}

TEST_CASE("encoder output") {
  const IlpsModel model(tiny_config(), {"aa", "bb"}, 2);
  const auto ids = model.encode_tags({"DET", "NOUN", "VERB"}, true);
  const Tensor enc = model.encode_ids(ids);
  CHECK(enc.rows() == 4);
  CHECK(enc.cols() == 16);

  // Deterministic and input-sensitive.
  const Tensor again = model.encode_ids(ids);
  for (size_t i = 0; i < enc.size(); ++i) {
    CHECK(enc.data()[i] == again.data()[i]);
  }
  const auto other = model.encode_tags({"DET", "NOUN", "NOUN"}, true);
  const Tensor diff = model.encode_ids(other);
  double delta = 0.0;
  for (size_t i = 0; i < enc.size(); ++i) {
    delta += std::fabs(enc.data()[i] - diff.data()[i]);
  }
  CHECK(delta > 1e-6);
}

TEST_CASE("predict_scores matches per-pair predict") {
  const IlpsModel model(tiny_config(), {"aa", "bb", "cc"}, 3);
  std::vector<Sentence> sents = {
      testutil::make_sentence({"NOUN", "VERB"}, {2, 0}, "tt", "tt#0"),
      testutil::make_sentence({"DET", "NOUN", "VERB"}, {2, 3, 0}, "tt",
                              "tt#1"),
  };
  const ScoreMatrix m = model.predict_scores(sents);
  CHECK(m.parser_ids == std::vector<int>{1, 2, 3});
  CHECK(m.parser_languages == std::vector<std::string>{"aa", "bb", "cc"});
  CHECK(m.sentence_ids == std::vector<std::string>{"tt#0", "tt#1"});
  REQUIRE(m.scores.size() == 3);
  REQUIRE(m.scores[0].size() == 2);

  for (size_t p = 0; p < 3; ++p) {
    for (size_t j = 0; j < sents.size(); ++j) {
      const double solo =
          model.predict(static_cast<int>(p) + 1, sents[j].upos());
      CHECK(m.scores[p][j] == doctest::Approx(solo).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(model.predict(0, {"NOUN"}), contract_error);
  CHECK_THROWS_AS(model.predict(4, {"NOUN"}), contract_error);
}

TEST_CASE("fresh model mlm loss is near uniform") {
  const IlpsModel model(tiny_config(), {"aa", "bb"}, 11);
  std::vector<std::vector<std::string>> seqs;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> tag(0, 16);
  std::uniform_int_distribution<int> len(3, 12);
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> tags;
    const int T = len(rng);
    for (int t = 0; t < T; ++t) tags.push_back(upos_tags()[tag(rng)]);
    seqs.push_back(tags);
  }
  const auto eval = model.evaluate_mlm(seqs, 7);
  CHECK(eval.positions > 0);
  const double uniform = std::log(IlpsModel::kVocabSize);
  CHECK(eval.loss > 0.8 * uniform);
  CHECK(eval.loss < 1.2 * uniform);

  // Same seed, same result; different seed, different masking.
  const auto again = model.evaluate_mlm(seqs, 7);
  CHECK(again.loss == eval.loss);
  CHECK(again.accuracy == eval.accuracy);
}

TEST_CASE("mlm pretraining reduces loss on a patterned corpus") {
  IlpsConfig cfg = tiny_config();
  const IlpsModel before(cfg, {"aa", "bb"}, 21);

  // Rigid alternation makes masked positions predictable.
  std::vector<std::vector<std::string>> seqs;
  for (int i = 0; i < 60; ++i) {
    std::vector<std::string> tags;
    for (int t = 0; t < 8; ++t) {
      tags.push_back(t % 2 == 0 ? "DET" : "NOUN");
    }
    tags.push_back("VERB");
    tags.push_back("PUNCT");
    seqs.push_back(tags);
  }

  IlpsModel model(cfg, {"aa", "bb"}, 21);
  const auto initial = model.evaluate_mlm(seqs, 99);
  std::ostringstream log;
  model.pretrain_mlm(seqs, 400, 13, &log);
  const auto trained = model.evaluate_mlm(seqs, 99);

  CHECK(trained.loss < 0.5 * initial.loss);
  CHECK(trained.accuracy > 0.8);
  CHECK(log.str().find("step") != std::string::npos);

  // Training is deterministic: a second model with the same seeds lands on
  // identical parameters.
  IlpsModel twin(cfg, {"aa", "bb"}, 21);
  twin.pretrain_mlm(seqs, 400, 13, nullptr);
  for (const auto& name : model.store().names()) {
    const Tensor& a = model.store().value(name);
    const Tensor& b = twin.store().value(name);
    REQUIRE(a.same_shape(b));
    for (size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a.data()[i] == b.data()[i]);
    }
  }
}

TEST_CASE("regressor learns parser-conditional labels") {
  IlpsConfig cfg = tiny_config();
  std::vector<RegressionExample> train, dev;
  // Parser 1 is always above the mean, parser 2 below; tags carry no signal,
  // so the parser embedding has to do the work.
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(3, 8);
  std::uniform_int_distribution<int> tag(0, 16);
  for (int j = 0; j < 60; ++j) {
    std::vector<std::string> tags;
    const int T = len(rng);
    for (int t = 0; t < T; ++t) tags.push_back(upos_tags()[tag(rng)]);
    const std::string sid = "xx#" + std::to_string(j);
    auto& side = j < 50 ? train : dev;
    side.push_back(example(1, tags, 1.5, sid));
    side.push_back(example(2, tags, 0.5, sid));
  }

  IlpsModel model(cfg, {"aa", "bb"}, 31);
  std::ostringstream log;
  const auto fit = model.train_regressor(train, dev, 40, 17, &log);
  CHECK(fit.steps > 0);
  CHECK(fit.evaluations > 0);
  CHECK(fit.best_dev_rmse < fit.initial_dev_rmse);
  CHECK(fit.best_dev_rmse < 0.15);

  const std::vector<std::string> probe = {"NOUN", "VERB", "PUNCT"};
  CHECK(model.predict(1, probe) > model.predict(2, probe));
  CHECK(model.predict(1, probe) == doctest::Approx(1.5).epsilon(0.15));
  CHECK(model.predict(2, probe) == doctest::Approx(0.5).scale(1.0).epsilon(0.3));

  // rmse_on agrees with the reported dev rmse after restore.
  CHECK(model.rmse_on(dev) == doctest::Approx(fit.best_dev_rmse).epsilon(1e-9));
}

TEST_CASE("save and load round-trip") {
  const auto dir = testutil::scratch_dir("ilps_io");
  IlpsConfig cfg = tiny_config();
  IlpsModel model(cfg, {"aa", "bb"}, 51);
  model.save(dir + "/m");
  CHECK(file_exists(dir + "/m.params"));
  CHECK(file_exists(dir + "/m.manifest"));

  const IlpsModel loaded = IlpsModel::load(dir + "/m");
  CHECK(loaded.parser_languages() == model.parser_languages());
  CHECK(loaded.config().embed_dim == cfg.embed_dim);
  CHECK(loaded.config().max_len == cfg.max_len);

  const std::vector<std::string> probe = {"DET", "NOUN", "VERB"};
  for (int p = 1; p <= 2; ++p) {
    CHECK(loaded.predict(p, probe) == model.predict(p, probe));
  }

  CHECK_THROWS_AS(IlpsModel::load(dir + "/missing"), io_error);

  // A manifest that disagrees with the parameter file must not load.
  auto manifest = read_text_file(dir + "/m.manifest");
  const auto pos = manifest.find("embed_dim = 16");
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, 14, "embed_dim = 32");
  write_text_file(dir + "/m.manifest", manifest);
  CHECK_THROWS_AS(IlpsModel::load(dir + "/m"), io_error);
}

TEST_CASE("config validation") {
  IlpsConfig cfg = tiny_config();
  cfg.heads = 3;  // does not divide embed_dim
  CHECK_THROWS_AS(IlpsModel(cfg, {"aa"}, 1), contract_error);
  IlpsConfig empty = tiny_config();
  CHECK_THROWS_AS(IlpsModel(empty, {}, 1), contract_error);
}
