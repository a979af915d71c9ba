#include "parsel/nn.h"

#include <cmath>
#include <fstream>
#include <limits>

namespace parsel {

namespace {

const char* kParamsMagic = "PARSELNN";
constexpr uint32_t kParamsVersion = 1;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Tensor col_slice(const Tensor& t, int start, int len) {
  Tensor out(t.rows(), len);
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < len; ++c) out(r, c) = t(r, start + c);
  return out;
}

void col_slice_add(Tensor& dest, const Tensor& src, int start) {
  for (int r = 0; r < src.rows(); ++r)
    for (int c = 0; c < src.cols(); ++c) dest(r, start + c) += src(r, c);
}

}  // namespace

Tensor& ParameterStore::add(const std::string& name, int rows, int cols) {
  auto [it, fresh] = entries_.try_emplace(name);
  require(fresh, "ParameterStore: duplicate parameter '" + name + "'");
  it->second.value = Tensor(rows, cols);
  it->second.grad = Tensor(rows, cols);
  it->second.m = Tensor(rows, cols);
  it->second.v = Tensor(rows, cols);
  return it->second.value;
}

bool ParameterStore::has(const std::string& name) const {
  return entries_.count(name) != 0;
}

Tensor& ParameterStore::value(const std::string& name) {
  auto it = entries_.find(name);
  require(it != entries_.end(), "ParameterStore: unknown parameter '" + name + "'");
  return it->second.value;
}

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  require(it != entries_.end(), "ParameterStore: unknown parameter '" + name + "'");
  return it->second.value;
}

Tensor& ParameterStore::grad(const std::string& name) {
  auto it = entries_.find(name);
  require(it != entries_.end(), "ParameterStore: unknown parameter '" + name + "'");
  return it->second.grad;
}

void ParameterStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.zero();
}

void ParameterStore::adam_step(double lr, double beta1, double beta2,
                               double eps) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, e] : entries_) {
    double* val = e.value.data();
    double* g = e.grad.data();
    double* m = e.m.data();
    double* v = e.v.data();
    const size_t n = e.value.size();
    for (size_t i = 0; i < n; ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      val[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      g[i] = 0.0;
    }
  }
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

size_t ParameterStore::parameter_count() const {
  size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

void ParameterStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write " + path);
  os.write(kParamsMagic, 8);
  write_u32(os, kParamsVersion);
  write_u64(os, entries_.size());
  for (const auto& [name, e] : entries_) {
    write_string(os, name);
    write_u32(os, static_cast<uint32_t>(e.value.rows()));
    write_u32(os, static_cast<uint32_t>(e.value.cols()));
    for (size_t i = 0; i < e.value.size(); ++i) write_f64(os, e.value.data()[i]);
  }
  if (!os) throw io_error("short write to " + path);
}

void ParameterStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot read " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != kParamsMagic)
    throw io_error(path + ": not a parameter file");
  uint32_t version = read_u32(is);
  if (version != kParamsVersion)
    throw io_error(path + ": unsupported parameter file version " +
                   std::to_string(version));
  // An empty store adopts the file; a populated one demands an exact match
  // of names and shapes so a foreign parameter file cannot slip in.
  const bool adopt = entries_.empty();
  step_ = 0;
  uint64_t count = read_u64(is);
  if (!adopt && count != entries_.size())
    throw io_error(path + ": has " + std::to_string(count) +
                   " parameters, expected " + std::to_string(entries_.size()));
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(is);
    const int rows = static_cast<int>(read_u32(is));
    const int cols = static_cast<int>(read_u32(is));
    Tensor* val = nullptr;
    if (adopt) {
      val = &add(name, rows, cols);
    } else {
      auto it = entries_.find(name);
      if (it == entries_.end())
        throw io_error(path + ": unexpected parameter '" + name + "'");
      Entry& e = it->second;
      if (e.value.rows() != rows || e.value.cols() != cols)
        throw io_error(path + ": parameter '" + name + "' has shape " +
                       std::to_string(rows) + "x" + std::to_string(cols) +
                       ", expected " + std::to_string(e.value.rows()) + "x" +
                       std::to_string(e.value.cols()));
      e.grad.zero();
      e.m.zero();
      e.v.zero();
      val = &e.value;
    }
    for (size_t j = 0; j < val->size(); ++j) val->data()[j] = read_f64(is);
  }
  if (!is) throw io_error(path + ": truncated parameter file");
}

std::map<std::string, Tensor> ParameterStore::snapshot_values() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, e] : entries_) out.emplace(name, e.value);
  return out;
}

void ParameterStore::restore_values(
    const std::map<std::string, Tensor>& values) {
  for (const auto& [name, t] : values) {
    Tensor& val = value(name);
    require(val.same_shape(t), "restore_values: shape mismatch for '" + name + "'");
    val = t;
  }
}

void xavier_uniform(Tensor& t, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (t.rows() + t.cols()));
  std::uniform_real_distribution<double> uni(-limit, limit);
  for (size_t i = 0; i < t.size(); ++i) t.data()[i] = uni(rng);
}

void normal_init(Tensor& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> norm(0.0, stddev);
  for (size_t i = 0; i < t.size(); ++i) t.data()[i] = norm(rng);
}

Tensor sinusoidal_positions(int length, int dim) {
  require(length >= 0 && dim > 0, "sinusoidal_positions: bad shape");
  Tensor pe(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int c = 0; c < dim; ++c) {
      const double exponent = static_cast<double>(2 * (c / 2)) / dim;
      const double angle = pos / std::pow(10000.0, exponent);
      pe(pos, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (size_t i = 0; i < y.size(); ++i)
    if (y.data()[i] < 0.0) y.data()[i] = 0.0;
  return y;
}

Tensor relu_backward(const Tensor& grad, const Tensor& x) {
  require(grad.same_shape(x), "relu_backward: shape mismatch");
  Tensor dx = grad;
  for (size_t i = 0; i < dx.size(); ++i)
    if (x.data()[i] <= 0.0) dx.data()[i] = 0.0;
  return dx;
}

Tensor softmax_rows(const Tensor& scores) {
  Tensor out(scores.rows(), scores.cols());
  for (int r = 0; r < scores.rows(); ++r) {
    double best = kNegInf;
    for (int c = 0; c < scores.cols(); ++c) best = std::max(best, scores(r, c));
    require(best > kNegInf, "softmax_rows: fully masked row");
    double sum = 0.0;
    for (int c = 0; c < scores.cols(); ++c) {
      const double e = std::exp(scores(r, c) - best);
      out(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < scores.cols(); ++c) out(r, c) /= sum;
  }
  return out;
}

RmseResult rmse_loss(const std::vector<double>& preds,
                     const std::vector<double>& targets) {
  require(!preds.empty(), "rmse_loss: empty batch");
  require(preds.size() == targets.size(), "rmse_loss: size mismatch");
  const double n = static_cast<double>(preds.size());
  double mse = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    mse += d * d;
  }
  mse /= n;
  RmseResult res;
  res.loss = std::sqrt(mse);
  res.grads.assign(preds.size(), 0.0);
  if (res.loss > 0.0) {
    for (size_t i = 0; i < preds.size(); ++i)
      res.grads[i] = (preds[i] - targets[i]) / (n * res.loss);
  }
  return res;
}

CrossEntropyResult masked_cross_entropy(
    const Tensor& logits, const std::vector<std::pair<int, int>>& targets,
    double scale) {
  require(!targets.empty(), "masked_cross_entropy: no targets");
  CrossEntropyResult res;
  res.dlogits = Tensor(logits.rows(), logits.cols());
  const double inv_n = scale / static_cast<double>(targets.size());
  for (const auto& [row, cls] : targets) {
    require(row >= 0 && row < logits.rows(), "masked_cross_entropy: bad row");
    require(cls >= 0 && cls < logits.cols(), "masked_cross_entropy: bad class");
    double best = logits(row, 0);
    int argmax = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(row, c) > best) {
        best = logits(row, c);
        argmax = c;
      }
    }
    double sum = 0.0;
    for (int c = 0; c < logits.cols(); ++c)
      sum += std::exp(logits(row, c) - best);
    const double lse = best + std::log(sum);
    res.loss += (lse - logits(row, cls)) * inv_n;
    if (argmax == cls) ++res.correct;
    for (int c = 0; c < logits.cols(); ++c) {
      const double p = std::exp(logits(row, c) - lse);
      res.dlogits(row, c) += (p - (c == cls ? 1.0 : 0.0)) * inv_n;
    }
  }
  return res;
}

LinearLayer::LinearLayer(std::string prefix, int in, int out)
    : w_(prefix + ".w"), b_(prefix + ".b"), in_(in), out_(out) {
  require(in > 0 && out > 0, "LinearLayer: bad shape");
}

void LinearLayer::register_params(ParameterStore& ps, std::mt19937_64& rng,
                                  Init init) const {
  Tensor& w = ps.add(w_, in_, out_);
  switch (init) {
    case Init::xavier: xavier_uniform(w, rng); break;
    case Init::normal002: normal_init(w, 0.02, rng); break;
    case Init::zeros: break;
  }
  ps.add(b_, 1, out_);
}

Tensor LinearLayer::forward(const ParameterStore& ps, const Tensor& x,
                            Ctx* ctx) const {
  require(x.cols() == in_, "LinearLayer: input width mismatch");
  Tensor y = matmul(x, ps.value(w_));
  const Tensor& b = ps.value(b_);
  for (int r = 0; r < y.rows(); ++r)
    for (int c = 0; c < y.cols(); ++c) y(r, c) += b(0, c);
  if (ctx) ctx->x = x;
  return y;
}

Tensor LinearLayer::backward(ParameterStore& ps, const Ctx& ctx,
                             const Tensor& grad) const {
  add_inplace(ps.grad(w_), matmul_tn(ctx.x, grad));
  Tensor& db = ps.grad(b_);
  for (int r = 0; r < grad.rows(); ++r)
    for (int c = 0; c < grad.cols(); ++c) db(0, c) += grad(r, c);
  return matmul_nt(grad, ps.value(w_));
}

LayerNormLayer::LayerNormLayer(std::string prefix, int dim)
    : gamma_(prefix + ".g"), beta_(prefix + ".b"), dim_(dim) {
  require(dim > 0, "LayerNormLayer: bad dim");
}

void LayerNormLayer::register_params(ParameterStore& ps) const {
  Tensor& g = ps.add(gamma_, 1, dim_);
  g.fill(1.0);
  ps.add(beta_, 1, dim_);
}

Tensor LayerNormLayer::forward(const ParameterStore& ps, const Tensor& x,
                               Ctx* ctx) const {
  require(x.cols() == dim_, "LayerNormLayer: width mismatch");
  const Tensor& gamma = ps.value(gamma_);
  const Tensor& beta = ps.value(beta_);
  Tensor y(x.rows(), x.cols());
  Tensor xhat(x.rows(), x.cols());
  std::vector<double> inv_std(static_cast<size_t>(x.rows()));
  for (int r = 0; r < x.rows(); ++r) {
    double mean = 0.0;
    for (int c = 0; c < dim_; ++c) mean += x(r, c);
    mean /= dim_;
    double var = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double d = x(r, c) - mean;
      var += d * d;
    }
    var /= dim_;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[static_cast<size_t>(r)] = is;
    for (int c = 0; c < dim_; ++c) {
      xhat(r, c) = (x(r, c) - mean) * is;
      y(r, c) = gamma(0, c) * xhat(r, c) + beta(0, c);
    }
  }
  if (ctx) {
    ctx->xhat = std::move(xhat);
    ctx->inv_std = std::move(inv_std);
  }
  return y;
}

Tensor LayerNormLayer::backward(ParameterStore& ps, const Ctx& ctx,
                                const Tensor& grad) const {
  const Tensor& gamma = ps.value(gamma_);
  Tensor& dgamma = ps.grad(gamma_);
  Tensor& dbeta = ps.grad(beta_);
  Tensor dx(grad.rows(), grad.cols());
  for (int r = 0; r < grad.rows(); ++r) {
    double mean_g = 0.0, mean_gx = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double go = grad(r, c);
      const double xh = ctx.xhat(r, c);
      dgamma(0, c) += go * xh;
      dbeta(0, c) += go;
      const double gp = go * gamma(0, c);
      mean_g += gp;
      mean_gx += gp * xh;
    }
    mean_g /= dim_;
    mean_gx /= dim_;
    const double is = ctx.inv_std[static_cast<size_t>(r)];
    for (int c = 0; c < dim_; ++c) {
      const double gp = grad(r, c) * gamma(0, c);
      dx(r, c) = is * (gp - mean_g - ctx.xhat(r, c) * mean_gx);
    }
  }
  return dx;
}

EmbeddingTable::EmbeddingTable(std::string name, int vocab, int dim)
    : name_(std::move(name)), vocab_(vocab), dim_(dim) {
  require(vocab > 0 && dim > 0, "EmbeddingTable: bad shape");
}

void EmbeddingTable::register_params(ParameterStore& ps,
                                     std::mt19937_64& rng) const {
  Tensor& t = ps.add(name_, vocab_, dim_);
  normal_init(t, 0.02, rng);
}

Tensor EmbeddingTable::forward(const ParameterStore& ps,
                               const std::vector<int>& ids) const {
  const Tensor& table = ps.value(name_);
  Tensor out(static_cast<int>(ids.size()), dim_);
  for (size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && ids[r] < vocab_, "EmbeddingTable: id out of range");
    for (int c = 0; c < dim_; ++c)
      out(static_cast<int>(r), c) = table(ids[r], c);
  }
  return out;
}

void EmbeddingTable::backward(ParameterStore& ps, const std::vector<int>& ids,
                              const Tensor& grad) const {
  require(grad.rows() == static_cast<int>(ids.size()) && grad.cols() == dim_,
          "EmbeddingTable: grad shape mismatch");
  Tensor& dt = ps.grad(name_);
  for (size_t r = 0; r < ids.size(); ++r)
    for (int c = 0; c < dim_; ++c)
      dt(ids[r], c) += grad(static_cast<int>(r), c);
}

Tensor EmbeddingTable::row(const ParameterStore& ps, int id) const {
  require(id >= 0 && id < vocab_, "EmbeddingTable: id out of range");
  const Tensor& table = ps.value(name_);
  Tensor out(1, dim_);
  for (int c = 0; c < dim_; ++c) out(0, c) = table(id, c);
  return out;
}

AttentionLayer::AttentionLayer(std::string prefix, int dim, int heads)
    : q_(prefix + ".q", dim, dim),
      k_(prefix + ".k", dim, dim),
      v_(prefix + ".v", dim, dim),
      o_(prefix + ".o", dim, dim),
      dim_(dim),
      heads_(heads) {
  require(heads > 0, "AttentionLayer: bad head count");
  require(dim % heads == 0, "AttentionLayer: dim must be divisible by heads");
  head_dim_ = dim / heads;
}

void AttentionLayer::register_params(ParameterStore& ps,
                                     std::mt19937_64& rng) const {
  q_.register_params(ps, rng);
  k_.register_params(ps, rng);
  v_.register_params(ps, rng);
  o_.register_params(ps, rng);
}

Tensor AttentionLayer::forward(const ParameterStore& ps, const Tensor& x,
                               const std::vector<char>& key_mask,
                               Ctx* ctx) const {
  require(x.cols() == dim_, "AttentionLayer: width mismatch");
  const int t = x.rows();
  require(key_mask.empty() || static_cast<int>(key_mask.size()) == t,
          "AttentionLayer: mask length mismatch");

  Ctx local;
  Ctx& c = ctx ? *ctx : local;
  c.q = q_.forward(ps, x, ctx ? &c.q_ctx : nullptr);
  c.k = k_.forward(ps, x, ctx ? &c.k_ctx : nullptr);
  c.v = v_.forward(ps, x, ctx ? &c.v_ctx : nullptr);
  c.attn.clear();

  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  Tensor merged(t, dim_);
  for (int h = 0; h < heads_; ++h) {
    const int off = h * head_dim_;
    Tensor qh = col_slice(c.q, off, head_dim_);
    Tensor kh = col_slice(c.k, off, head_dim_);
    Tensor vh = col_slice(c.v, off, head_dim_);
    Tensor scores = matmul_nt(qh, kh);
    for (int i = 0; i < t; ++i)
      for (int j = 0; j < t; ++j) {
        scores(i, j) *= scale;
        if (!key_mask.empty() && !key_mask[static_cast<size_t>(j)])
          scores(i, j) = kNegInf;
      }
    Tensor a = softmax_rows(scores);
    Tensor oh = matmul(a, vh);
    col_slice_add(merged, oh, off);
    c.attn.push_back(std::move(a));
  }
  c.merged = merged;
  return o_.forward(ps, merged, ctx ? &c.o_ctx : nullptr);
}

Tensor AttentionLayer::backward(ParameterStore& ps, const Ctx& ctx,
                                const Tensor& grad) const {
  const int t = ctx.q.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

  Tensor dmerged = o_.backward(ps, ctx.o_ctx, grad);
  Tensor dq(t, dim_), dk(t, dim_), dv(t, dim_);
  for (int h = 0; h < heads_; ++h) {
    const int off = h * head_dim_;
    Tensor doh = col_slice(dmerged, off, head_dim_);
    const Tensor& a = ctx.attn[static_cast<size_t>(h)];
    Tensor qh = col_slice(ctx.q, off, head_dim_);
    Tensor kh = col_slice(ctx.k, off, head_dim_);
    Tensor vh = col_slice(ctx.v, off, head_dim_);

    col_slice_add(dv, matmul_tn(a, doh), off);
    Tensor da = matmul_nt(doh, vh);
    // Softmax backward: ds = a * (da - rowsum(da * a)).
    Tensor ds(t, t);
    for (int i = 0; i < t; ++i) {
      double dot = 0.0;
      for (int j = 0; j < t; ++j) dot += da(i, j) * a(i, j);
      for (int j = 0; j < t; ++j) ds(i, j) = a(i, j) * (da(i, j) - dot);
    }
    for (size_t i = 0; i < ds.size(); ++i) ds.data()[i] *= scale;
    col_slice_add(dq, matmul(ds, kh), off);
    col_slice_add(dk, matmul_tn(ds, qh), off);
  }
  Tensor dx = q_.backward(ps, ctx.q_ctx, dq);
  add_inplace(dx, k_.backward(ps, ctx.k_ctx, dk));
  add_inplace(dx, v_.backward(ps, ctx.v_ctx, dv));
  return dx;
}

TransformerLayer::TransformerLayer(std::string prefix, int dim, int heads,
                                   int ffn_dim)
    : attn_(prefix + ".attn", dim, heads),
      f1_(prefix + ".ffn1", dim, ffn_dim),
      f2_(prefix + ".ffn2", ffn_dim, dim),
      ln1_(prefix + ".ln1", dim),
      ln2_(prefix + ".ln2", dim),
      dim_(dim) {}

void TransformerLayer::register_params(ParameterStore& ps,
                                       std::mt19937_64& rng) const {
  attn_.register_params(ps, rng);
  ln1_.register_params(ps);
  f1_.register_params(ps, rng);
  f2_.register_params(ps, rng);
  ln2_.register_params(ps);
}

Tensor TransformerLayer::forward(const ParameterStore& ps, const Tensor& x,
                                 const std::vector<char>& key_mask,
                                 Ctx* ctx) const {
  Tensor sum1 = attn_.forward(ps, x, key_mask, ctx ? &ctx->attn : nullptr);
  add_inplace(sum1, x);
  Tensor h1 = ln1_.forward(ps, sum1, ctx ? &ctx->ln1 : nullptr);

  Tensor pre = f1_.forward(ps, h1, ctx ? &ctx->f1 : nullptr);
  Tensor ffn = f2_.forward(ps, relu(pre), ctx ? &ctx->f2 : nullptr);
  add_inplace(ffn, h1);
  Tensor h2 = ln2_.forward(ps, ffn, ctx ? &ctx->ln2 : nullptr);
  if (ctx) ctx->relu_in = std::move(pre);
  return h2;
}

Tensor TransformerLayer::backward(ParameterStore& ps, const Ctx& ctx,
                                  const Tensor& grad) const {
  Tensor g2 = ln2_.backward(ps, ctx.ln2, grad);
  Tensor dhid = f2_.backward(ps, ctx.f2, g2);
  Tensor dpre = relu_backward(dhid, ctx.relu_in);
  Tensor dh1 = f1_.backward(ps, ctx.f1, dpre);
  add_inplace(dh1, g2);
  Tensor g1 = ln1_.backward(ps, ctx.ln1, dh1);
  Tensor dx = attn_.backward(ps, ctx.attn, g1);
  add_inplace(dx, g1);
  return dx;
}

MlpHead::MlpHead(std::string prefix, int in, int hidden)
    : l1_(prefix + ".l1", in, hidden),
      l2_(prefix + ".l2", hidden, hidden),
      l3_(prefix + ".l3", hidden, 1) {}

void MlpHead::register_params(ParameterStore& ps, std::mt19937_64& rng) const {
  l1_.register_params(ps, rng);
  l2_.register_params(ps, rng);
  l3_.register_params(ps, rng);
}

double MlpHead::forward(const ParameterStore& ps, const Tensor& x,
                        Ctx* ctx) const {
  require(x.rows() == 1, "MlpHead: expected a single row");
  Tensor z1 = l1_.forward(ps, x, ctx ? &ctx->l1 : nullptr);
  Tensor a1 = relu(z1);
  Tensor z2 = l2_.forward(ps, a1, ctx ? &ctx->l2 : nullptr);
  Tensor a2 = relu(z2);
  Tensor y = l3_.forward(ps, a2, ctx ? &ctx->l3 : nullptr);
  if (ctx) {
    ctx->a1_in = std::move(z1);
    ctx->a2_in = std::move(z2);
  }
  return y(0, 0);
}

Tensor MlpHead::backward(ParameterStore& ps, const Ctx& ctx,
                         double grad) const {
  Tensor g(1, 1);
  g(0, 0) = grad;
  Tensor da2 = l3_.backward(ps, ctx.l3, g);
  Tensor dz2 = relu_backward(da2, ctx.a2_in);
  Tensor da1 = l2_.backward(ps, ctx.l2, dz2);
  Tensor dz1 = relu_backward(da1, ctx.a1_in);
  return l1_.backward(ps, ctx.l1, dz1);
}

}  // namespace parsel
