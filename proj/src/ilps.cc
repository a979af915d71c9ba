#include "parsel/ilps.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "parsel/io_util.h"

namespace parsel {

namespace {

constexpr uint32_t kManifestVersion = 1;

std::vector<int> iota_order(size_t n) {
  std::vector<int> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}

}  // namespace

MaskingPlan make_masking_plan(int length, std::mt19937_64& rng) {
  require(length >= 1, "make_masking_plan: empty sentence");
  int k = static_cast<int>(std::floor(0.15 * length + 0.5));
  k = std::clamp(k, 1, std::min(20, length));

  std::vector<int> all(static_cast<size_t>(length));
  for (int i = 0; i < length; ++i) all[static_cast<size_t>(i)] = i;
  std::vector<int> picked;
  std::sample(all.begin(), all.end(), std::back_inserter(picked), k, rng);

  MaskingPlan plan;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int pos : picked) {
    const double u = uni(rng);
    MaskAction action = u < 0.8   ? MaskAction::mask
                        : u < 0.9 ? MaskAction::keep
                                  : MaskAction::random;
    plan.items.emplace_back(pos, action);
  }
  return plan;
}

std::vector<int> apply_masking_plan(const std::vector<int>& ids,
                                    const MaskingPlan& plan,
                                    std::mt19937_64& rng) {
  std::vector<int> out = ids;
  std::uniform_int_distribution<int> tag(0, static_cast<int>(upos_tags().size()) - 1);
  for (const auto& [pos, action] : plan.items) {
    require(pos >= 0 && pos < static_cast<int>(ids.size()),
            "apply_masking_plan: position out of range");
    switch (action) {
      case MaskAction::mask: out[static_cast<size_t>(pos)] = IlpsModel::kMaskId; break;
      case MaskAction::keep: break;
      case MaskAction::random: out[static_cast<size_t>(pos)] = tag(rng); break;
    }
  }
  return out;
}

const std::vector<std::string>& IlpsModel::vocab() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out = upos_tags();
    out.push_back("[MASK]");
    out.push_back("[ss]");
    out.push_back("[PAD]");
    return out;
  }();
  return v;
}

int IlpsModel::tag_id(const std::string& tag) {
  const auto& tags = upos_tags();
  for (size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == tag) return static_cast<int>(i);
  throw io_error("unknown UPOS tag '" + tag + "'");
}

IlpsModel::IlpsModel(const IlpsConfig& cfg,
                     std::vector<std::string> parser_languages,
                     uint64_t init_seed)
    : cfg_(cfg),
      langs_(std::move(parser_languages)),
      tag_emb_("tag_emb", kVocabSize, cfg.embed_dim),
      parser_emb_("parser_emb", static_cast<int>(langs_.size()), cfg.embed_dim),
      proj_("proj", 2 * cfg.embed_dim, cfg.embed_dim),
      mlm_head_("mlm", cfg.embed_dim, kVocabSize),
      regressor_("reg", 2 * cfg.embed_dim, cfg.mlp_hidden) {
  require(!langs_.empty(), "IlpsModel: no parser languages");
  require(std::set<std::string>(langs_.begin(), langs_.end()).size() ==
              langs_.size(),
          "IlpsModel: duplicate parser languages");
  require(cfg.embed_dim > 0 && cfg.ffn_dim > 0 && cfg.mlp_hidden > 0,
          "IlpsModel: dimensions must be positive");
  require(cfg.layers >= 1, "IlpsModel: need at least one encoder layer");
  require(cfg.heads >= 1 && cfg.embed_dim % cfg.heads == 0,
          "IlpsModel: embed_dim must be divisible by heads");
  require(cfg.max_len >= 2, "IlpsModel: max_len too small");
  require(cfg.batch_size >= 1 && cfg.mlm_batch_size >= 1,
          "IlpsModel: batch sizes must be positive");
  require(cfg.eval_every >= 1 && cfg.patience >= 1,
          "IlpsModel: eval cadence and patience must be positive");

  for (int l = 0; l < cfg.layers; ++l) {
    encoder_.emplace_back("enc" + std::to_string(l), cfg.embed_dim, cfg.heads,
                          cfg.ffn_dim);
  }

  std::mt19937_64 rng(init_seed);
  tag_emb_.register_params(store_, rng);
  parser_emb_.register_params(store_, rng);
  proj_.register_params(store_, rng);
  for (const auto& layer : encoder_) layer.register_params(store_, rng);
  // Near-zero logits keep the initial MLM loss at ln(vocab).
  mlm_head_.register_params(store_, rng, Init::normal002);
  regressor_.register_params(store_, rng);

  positions_ = sinusoidal_positions(cfg.max_len, cfg.embed_dim);
}

std::vector<int> IlpsModel::encode_tags(const std::vector<std::string>& tags,
                                        bool prepend_ss, std::ostream* warn,
                                        const std::string& ref) const {
  std::vector<int> ids;
  ids.reserve(tags.size() + 1);
  if (prepend_ss) ids.push_back(kSsId);
  for (const auto& t : tags) ids.push_back(tag_id(t));
  if (static_cast<int>(ids.size()) > cfg_.max_len) {
    if (warn) {
      *warn << "warning: " << (ref.empty() ? "sentence" : ref)
            << " truncated from " << ids.size() << " to " << cfg_.max_len
            << " positions\n";
    }
    ids.resize(static_cast<size_t>(cfg_.max_len));
  }
  return ids;
}

Tensor IlpsModel::encode_forward(const std::vector<int>& ids,
                                 EncCtx* ctx) const {
  require(!ids.empty(), "encode: empty id sequence");
  require(static_cast<int>(ids.size()) <= cfg_.max_len,
          "encode: sequence exceeds max_len");
  Tensor emb = tag_emb_.forward(store_, ids);
  Tensor pos(emb.rows(), emb.cols());
  for (int r = 0; r < pos.rows(); ++r)
    for (int c = 0; c < pos.cols(); ++c) pos(r, c) = positions_(r, c);
  Tensor x = hconcat(emb, pos);

  if (ctx) {
    ctx->ids = ids;
    ctx->layers.resize(encoder_.size());
  }
  Tensor h = proj_.forward(store_, x, ctx ? &ctx->proj : nullptr);
  for (size_t l = 0; l < encoder_.size(); ++l) {
    h = encoder_[l].forward(store_, h, {}, ctx ? &ctx->layers[l] : nullptr);
  }
  return h;
}

void IlpsModel::encode_backward(const EncCtx& ctx, const Tensor& grad) {
  Tensor g = grad;
  for (size_t l = encoder_.size(); l-- > 0;)
    g = encoder_[l].backward(store_, ctx.layers[l], g);
  Tensor dx = proj_.backward(store_, ctx.proj, g);
  auto [demb, dpos] = hsplit(dx, cfg_.embed_dim);
  tag_emb_.backward(store_, ctx.ids, demb);  // position table is fixed
}

Tensor IlpsModel::encode_ids(const std::vector<int>& ids) const {
  return encode_forward(ids, nullptr);
}

double IlpsModel::reg_forward(const std::vector<int>& ids, int parser_id,
                              RegCtx* ctx) const {
  require(parser_id >= 1 && parser_id <= parser_count(),
          "predict: parser id out of range");
  require(!ids.empty() && ids[0] == kSsId,
          "predict: sequence must start with [ss]");
  Tensor h = encode_forward(ids, ctx ? &ctx->enc : nullptr);
  Tensor tt0(1, cfg_.embed_dim);
  for (int c = 0; c < cfg_.embed_dim; ++c) tt0(0, c) = h(0, c);
  Tensor feat = hconcat(tt0, parser_emb_.row(store_, parser_id - 1));
  if (ctx) {
    ctx->parser_row = parser_id - 1;
    ctx->length = h.rows();
  }
  return regressor_.forward(store_, feat, ctx ? &ctx->mlp : nullptr);
}

void IlpsModel::reg_backward(const RegCtx& ctx, double grad) {
  Tensor dfeat = regressor_.backward(store_, ctx.mlp, grad);
  auto [dtt0, dpemb] = hsplit(dfeat, cfg_.embed_dim);
  Tensor dh(ctx.length, cfg_.embed_dim);
  for (int c = 0; c < cfg_.embed_dim; ++c) dh(0, c) = dtt0(0, c);
  encode_backward(ctx.enc, dh);
  parser_emb_.backward(store_, {ctx.parser_row}, dpemb);
}

double IlpsModel::predict(int parser_id,
                          const std::vector<std::string>& tags) const {
  return reg_forward(encode_tags(tags, true), parser_id, nullptr);
}

ScoreMatrix IlpsModel::predict_scores(const std::vector<Sentence>& sentences,
                                      std::ostream* warn) const {
  require(!sentences.empty(), "predict_scores: no sentences");
  ScoreMatrix m;
  for (int p = 0; p < parser_count(); ++p) {
    m.parser_ids.push_back(p + 1);
    m.parser_languages.push_back(langs_[static_cast<size_t>(p)]);
  }
  m.scores.assign(langs_.size(), {});

  for (const auto& s : sentences) {
    m.sentence_ids.push_back(s.id);
    const std::vector<int> ids = encode_tags(s.upos(), true, warn, s.id);
    Tensor h = encode_forward(ids, nullptr);
    Tensor tt0(1, cfg_.embed_dim);
    for (int c = 0; c < cfg_.embed_dim; ++c) tt0(0, c) = h(0, c);
    // One encoder pass per sentence, shared by every parser column.
    for (int p = 0; p < parser_count(); ++p) {
      Tensor feat = hconcat(tt0, parser_emb_.row(store_, p));
      m.scores[static_cast<size_t>(p)].push_back(
          regressor_.forward(store_, feat, nullptr));
    }
  }
  return m;
}

void IlpsModel::pretrain_mlm(
    const std::vector<std::vector<std::string>>& tag_seqs, int steps,
    uint64_t seed, std::ostream* log) {
  require(steps >= 0, "pretrain_mlm: negative step count");
  std::vector<std::vector<int>> seqs;
  for (const auto& tags : tag_seqs) {
    if (tags.empty()) continue;
    seqs.push_back(encode_tags(tags, false));
  }
  require(!seqs.empty(), "pretrain_mlm: no usable sentences");

  std::mt19937_64 order_rng(mix_seed(seed, "order"));
  std::mt19937_64 mask_rng(mix_seed(seed, "mask"));
  std::vector<int> order = iota_order(seqs.size());
  size_t cursor = order.size();

  struct Item {
    EncCtx enc;
    LinearLayer::Ctx head;
    Tensor logits;
    std::vector<std::pair<int, int>> targets;
  };

  for (int step = 1; step <= steps; ++step) {
    std::vector<Item> batch;
    for (int b = 0; b < cfg_.mlm_batch_size; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const std::vector<int>& ids = seqs[static_cast<size_t>(order[cursor++])];
      MaskingPlan plan = make_masking_plan(static_cast<int>(ids.size()), mask_rng);
      std::vector<int> masked = apply_masking_plan(ids, plan, mask_rng);

      Item item;
      Tensor h = encode_forward(masked, &item.enc);
      item.logits = mlm_head_.forward(store_, h, &item.head);
      for (const auto& [pos, action] : plan.items)
        item.targets.emplace_back(pos, ids[static_cast<size_t>(pos)]);
      batch.push_back(std::move(item));
    }

    size_t total = 0;
    for (const auto& item : batch) total += item.targets.size();
    double loss = 0.0;
    for (auto& item : batch) {
      const double scale =
          static_cast<double>(item.targets.size()) / static_cast<double>(total);
      CrossEntropyResult ce =
          masked_cross_entropy(item.logits, item.targets, scale);
      loss += ce.loss;
      Tensor dh = mlm_head_.backward(store_, item.head, ce.dlogits);
      encode_backward(item.enc, dh);
    }
    store_.adam_step(cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);

    if (log && (step == 1 || step % 250 == 0 || step == steps)) {
      *log << "mlm step " << step << " loss " << format_fixed(loss, 4) << "\n";
    }
  }
}

IlpsModel::MlmEval IlpsModel::evaluate_mlm(
    const std::vector<std::vector<std::string>>& tag_seqs,
    uint64_t seed) const {
  std::mt19937_64 mask_rng(seed);
  MlmEval ev;
  double loss_sum = 0.0;
  int correct = 0;
  for (const auto& tags : tag_seqs) {
    if (tags.empty()) continue;
    const std::vector<int> ids = encode_tags(tags, false);
    MaskingPlan plan = make_masking_plan(static_cast<int>(ids.size()), mask_rng);
    std::vector<int> masked = apply_masking_plan(ids, plan, mask_rng);
    Tensor h = encode_forward(masked, nullptr);
    Tensor logits = mlm_head_.forward(store_, h, nullptr);
    std::vector<std::pair<int, int>> targets;
    for (const auto& [pos, action] : plan.items)
      targets.emplace_back(pos, ids[static_cast<size_t>(pos)]);
    CrossEntropyResult ce = masked_cross_entropy(logits, targets);
    loss_sum += ce.loss * static_cast<double>(targets.size());
    correct += ce.correct;
    ev.positions += static_cast<int>(targets.size());
  }
  require(ev.positions > 0, "evaluate_mlm: no usable sentences");
  ev.loss = loss_sum / ev.positions;
  ev.accuracy = static_cast<double>(correct) / ev.positions;
  return ev;
}

double IlpsModel::rmse_on(const std::vector<RegressionExample>& examples) const {
  require(!examples.empty(), "rmse_on: no examples");
  std::vector<double> preds, targets;
  preds.reserve(examples.size());
  targets.reserve(examples.size());
  for (const auto& ex : examples) {
    preds.push_back(reg_forward(encode_tags(ex.upos, true), ex.parser_id, nullptr));
    targets.push_back(ex.label);
  }
  return rmse_loss(preds, targets).loss;
}

IlpsModel::FitResult IlpsModel::train_regressor(
    const std::vector<RegressionExample>& train,
    const std::vector<RegressionExample>& dev, int max_epochs, uint64_t seed,
    std::ostream* log) {
  require(!train.empty(), "train_regressor: empty training set");
  require(!dev.empty(), "train_regressor: empty dev set");
  require(max_epochs >= 1, "train_regressor: max_epochs must be >= 1");

  struct Encoded {
    std::vector<int> ids;
    int parser_id;
    double label;
  };
  std::vector<Encoded> data;
  data.reserve(train.size());
  for (const auto& ex : train)
    data.push_back({encode_tags(ex.upos, true), ex.parser_id, ex.label});

  FitResult fr;
  fr.initial_train_rmse = rmse_on(train);
  fr.initial_dev_rmse = rmse_on(dev);
  double best = fr.initial_dev_rmse;
  auto best_values = store_.snapshot_values();
  if (log) {
    *log << "regressor init train_rmse " << format_fixed(fr.initial_train_rmse, 4)
         << " dev_rmse " << format_fixed(fr.initial_dev_rmse, 4) << "\n";
  }

  std::mt19937_64 order_rng(mix_seed(seed, "order"));
  std::vector<int> order = iota_order(data.size());
  int bad = 0;
  bool stop = false;

  auto evaluate = [&]() {
    const double dev_rmse = rmse_on(dev);
    ++fr.evaluations;
    if (dev_rmse < best) {
      best = dev_rmse;
      best_values = store_.snapshot_values();
      bad = 0;
    } else {
      ++bad;
    }
    if (log) {
      *log << "regressor step " << fr.steps << " dev_rmse "
           << format_fixed(dev_rmse, 4) << " best " << format_fixed(best, 4)
           << " patience " << bad << "/" << cfg_.patience << "\n";
    }
    if (bad >= cfg_.patience) stop = true;
  };

  for (int epoch = 1; epoch <= max_epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    for (size_t at = 0; at < order.size() && !stop; at += cfg_.batch_size) {
      const size_t end = std::min(order.size(), at + cfg_.batch_size);
      std::vector<RegCtx> ctxs(end - at);
      std::vector<double> preds(end - at), targets(end - at);
      for (size_t i = at; i < end; ++i) {
        const Encoded& ex = data[static_cast<size_t>(order[i])];
        preds[i - at] = reg_forward(ex.ids, ex.parser_id, &ctxs[i - at]);
        targets[i - at] = ex.label;
      }
      RmseResult rmse = rmse_loss(preds, targets);
      for (size_t i = 0; i < ctxs.size(); ++i)
        reg_backward(ctxs[i], rmse.grads[i]);
      store_.adam_step(cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);
      ++fr.steps;
      if (fr.steps % cfg_.eval_every == 0) evaluate();
    }
  }
  if (!stop && fr.steps % cfg_.eval_every != 0) evaluate();

  store_.restore_values(best_values);
  fr.best_dev_rmse = best;
  fr.final_train_rmse = rmse_on(train);
  if (log) {
    *log << "regressor done steps " << fr.steps << " best_dev_rmse "
         << format_fixed(best, 4) << " final_train_rmse "
         << format_fixed(fr.final_train_rmse, 4) << "\n";
  }
  return fr;
}

void IlpsModel::save(const std::string& prefix) const {
  store_.save(prefix + ".params");
  std::string manifest;
  manifest += artifact_header("ilps-manifest", kManifestVersion) + "\n";
  manifest += "languages = " + join(langs_, ",") + "\n";
  manifest += "vocab = " + join(vocab(), " ") + "\n";
  manifest += "embed_dim = " + std::to_string(cfg_.embed_dim) + "\n";
  manifest += "ffn_dim = " + std::to_string(cfg_.ffn_dim) + "\n";
  manifest += "layers = " + std::to_string(cfg_.layers) + "\n";
  manifest += "heads = " + std::to_string(cfg_.heads) + "\n";
  manifest += "mlp_hidden = " + std::to_string(cfg_.mlp_hidden) + "\n";
  manifest += "max_len = " + std::to_string(cfg_.max_len) + "\n";
  manifest += "lr = " + format_double(cfg_.lr) + "\n";
  manifest += "beta1 = " + format_double(cfg_.beta1) + "\n";
  manifest += "beta2 = " + format_double(cfg_.beta2) + "\n";
  manifest += "adam_eps = " + format_double(cfg_.adam_eps) + "\n";
  manifest += "batch_size = " + std::to_string(cfg_.batch_size) + "\n";
  manifest += "mlm_batch_size = " + std::to_string(cfg_.mlm_batch_size) + "\n";
  manifest += "eval_every = " + std::to_string(cfg_.eval_every) + "\n";
  manifest += "patience = " + std::to_string(cfg_.patience) + "\n";
  write_text_file(prefix + ".manifest", manifest);
}

IlpsModel IlpsModel::load(const std::string& prefix) {
  const std::string manifest_path = prefix + ".manifest";
  {
    std::ifstream is(manifest_path);
    if (!is) throw io_error("cannot open " + manifest_path);
    expect_artifact_header(is, "ilps-manifest", kManifestVersion, manifest_path);
  }
  auto kv = read_kv_file(manifest_path);
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end())
      throw io_error(manifest_path + ": missing key '" + key + "'");
    return it->second;
  };
  if (need("vocab") != join(vocab(), " "))
    throw io_error(manifest_path + ": vocabulary mismatch");

  IlpsConfig cfg;
  cfg.embed_dim = std::stoi(need("embed_dim"));
  cfg.ffn_dim = std::stoi(need("ffn_dim"));
  cfg.layers = std::stoi(need("layers"));
  cfg.heads = std::stoi(need("heads"));
  cfg.mlp_hidden = std::stoi(need("mlp_hidden"));
  cfg.max_len = std::stoi(need("max_len"));
  cfg.lr = std::stod(need("lr"));
  cfg.beta1 = std::stod(need("beta1"));
  cfg.beta2 = std::stod(need("beta2"));
  cfg.adam_eps = std::stod(need("adam_eps"));
  cfg.batch_size = std::stoi(need("batch_size"));
  cfg.mlm_batch_size = std::stoi(need("mlm_batch_size"));
  cfg.eval_every = std::stoi(need("eval_every"));
  cfg.patience = std::stoi(need("patience"));

  IlpsModel model(cfg, split(need("languages"), ','), 0);
  const std::vector<std::string> expected = model.store_.names();
  model.store_.load(prefix + ".params");
  if (model.store_.names() != expected)
    throw io_error(prefix + ".params: parameter set does not match manifest");
  return model;
}

}  // namespace parsel
