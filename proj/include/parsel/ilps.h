#ifndef PARSEL_ILPS_H
#define PARSEL_ILPS_H

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "parsel/labels.h"
#include "parsel/nn.h"
#include "parsel/selection.h"
#include "parsel/treebank.h"

namespace parsel {

struct IlpsConfig {
  int embed_dim = 256;
  int ffn_dim = 256;
  int layers = 3;
  int heads = 8;
  int mlp_hidden = 256;
  int max_len = 256;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 16;
  int mlm_batch_size = 16;
  int eval_every = 2000;
  int patience = 3;
};

enum class MaskAction { mask, keep, random };

// Which positions of one sentence get perturbed before the MLM forward
// pass: 15% of positions (round half up, at least 1, at most 20), split
// 80/10/10 between masking, keeping, and random replacement.
struct MaskingPlan {
  std::vector<std::pair<int, MaskAction>> items;  // ascending positions
};

MaskingPlan make_masking_plan(int length, std::mt19937_64& rng);

// Applies a plan to a tag id sequence; `random` replacements draw uniformly
// from the 17 real tags.
std::vector<int> apply_masking_plan(const std::vector<int>& ids,
                                    const MaskingPlan& plan,
                                    std::mt19937_64& rng);

// Transformer encoder over UPOS tag sequences plus a per-parser quality
// regressor. Tag ids 0..16 follow the canonical tag order; 17 = [MASK],
// 18 = [ss] (sentence summary, prepended for regression), 19 = [PAD].
class IlpsModel {
 public:
  static constexpr int kMaskId = 17;
  static constexpr int kSsId = 18;
  static constexpr int kPadId = 19;
  static constexpr int kVocabSize = 20;

  static const std::vector<std::string>& vocab();
  static int tag_id(const std::string& tag);  // io_error on unknown tags

  IlpsModel(const IlpsConfig& cfg, std::vector<std::string> parser_languages,
            uint64_t init_seed);

  const IlpsConfig& config() const { return cfg_; }
  const std::vector<std::string>& parser_languages() const { return langs_; }
  int parser_count() const { return static_cast<int>(langs_.size()); }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }

  // Tag ids, optionally with [ss] in front, truncated to max_len positions
  // (a warning naming `ref` goes to `warn` when truncation happens).
  std::vector<int> encode_tags(const std::vector<std::string>& tags,
                               bool prepend_ss, std::ostream* warn = nullptr,
                               const std::string& ref = "") const;

  // Encoder output, one row per position.
  Tensor encode_ids(const std::vector<int>& ids) const;

  // Predicted quality of parser `parser_id` (1-based) on the tag sequence.
  double predict(int parser_id, const std::vector<std::string>& tags) const;

  // Scores every (parser, sentence) pair; each sentence is encoded once and
  // the encoding shared across parsers.
  ScoreMatrix predict_scores(const std::vector<Sentence>& sentences,
                             std::ostream* warn = nullptr) const;

  void pretrain_mlm(const std::vector<std::vector<std::string>>& tag_seqs,
                    int steps, uint64_t seed, std::ostream* log = nullptr);

  struct MlmEval {
    double loss = 0.0;
    double accuracy = 0.0;
    int positions = 0;
  };
  MlmEval evaluate_mlm(const std::vector<std::vector<std::string>>& tag_seqs,
                       uint64_t seed) const;

  struct FitResult {
    double initial_dev_rmse = 0.0;
    double best_dev_rmse = 0.0;
    double initial_train_rmse = 0.0;
    double final_train_rmse = 0.0;
    int steps = 0;
    int evaluations = 0;
  };
  // Adam on the batched RMSE objective with early stopping on dev RMSE
  // (patience evaluations, cadence cfg.eval_every steps). The best
  // checkpoint is restored before returning.
  FitResult train_regressor(const std::vector<RegressionExample>& train,
                            const std::vector<RegressionExample>& dev,
                            int max_epochs, uint64_t seed,
                            std::ostream* log = nullptr);

  double rmse_on(const std::vector<RegressionExample>& examples) const;

  // Writes <prefix>.params and <prefix>.manifest.
  void save(const std::string& prefix) const;
  static IlpsModel load(const std::string& prefix);

 private:
  struct EncCtx {
    std::vector<int> ids;
    LinearLayer::Ctx proj;
    std::vector<TransformerLayer::Ctx> layers;
  };
  Tensor encode_forward(const std::vector<int>& ids, EncCtx* ctx) const;
  void encode_backward(const EncCtx& ctx, const Tensor& grad);

  struct RegCtx {
    EncCtx enc;
    MlpHead::Ctx mlp;
    int parser_row = 0;
    int length = 0;
  };
  double reg_forward(const std::vector<int>& ids, int parser_id, RegCtx* ctx) const;
  void reg_backward(const RegCtx& ctx, double grad);

  IlpsConfig cfg_;
  std::vector<std::string> langs_;
  ParameterStore store_;
  EmbeddingTable tag_emb_;
  EmbeddingTable parser_emb_;
  LinearLayer proj_;
  std::vector<TransformerLayer> encoder_;
  LinearLayer mlm_head_;
  MlpHead regressor_;
  Tensor positions_;
};

}  // namespace parsel

#endif
