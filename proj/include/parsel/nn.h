#ifndef PARSEL_NN_H
#define PARSEL_NN_H

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "parsel/tensor.h"

namespace parsel {

constexpr double kLayerNormEps = 1e-5;

// Named parameters with their gradient accumulators and Adam moments.
// Iteration order is the sorted name order, which also fixes the
// serialization layout and makes training bit-reproducible.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, int rows, int cols);
  bool has(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  void zero_grads();

  // One Adam update over every parameter; gradients are zeroed afterwards.
  void adam_step(double lr, double beta1, double beta2, double eps);
  int64_t step() const { return step_; }

  std::vector<std::string> names() const;
  size_t parameter_count() const;

  // Values only; moments and step are transient. Bit-exact round-trip.
  void save(const std::string& path) const;
  void load(const std::string& path);

  std::map<std::string, Tensor> snapshot_values() const;
  void restore_values(const std::map<std::string, Tensor>& values);

 private:
  struct Entry {
    Tensor value, grad, m, v;
  };
  std::map<std::string, Entry> entries_;
  int64_t step_ = 0;
};

enum class Init { xavier, normal002, zeros };

void xavier_uniform(Tensor& t, std::mt19937_64& rng);
void normal_init(Tensor& t, double stddev, std::mt19937_64& rng);

// Fixed sinusoidal position table: sin on even dims, cos on odd dims,
// wavelength 10000^(2k/dim).
Tensor sinusoidal_positions(int length, int dim);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad, const Tensor& x);

// Row-wise softmax. Rows must contain at least one finite entry.
Tensor softmax_rows(const Tensor& scores);

// loss = sqrt(mean((pred - target)^2)); grads[i] = d loss / d pred[i].
// A perfect batch has zero loss and zero gradients.
struct RmseResult {
  double loss = 0.0;
  std::vector<double> grads;
};
RmseResult rmse_loss(const std::vector<double>& preds,
                     const std::vector<double>& targets);

// Mean cross-entropy over (row, class) targets of a logits matrix. `scale`
// multiplies loss and gradients (used to weight every position of a batch
// equally when sentences contribute different target counts).
struct CrossEntropyResult {
  double loss = 0.0;
  Tensor dlogits;
  int correct = 0;  // argmax hits among the targets
};
CrossEntropyResult masked_cross_entropy(
    const Tensor& logits, const std::vector<std::pair<int, int>>& targets,
    double scale = 1.0);

class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::string prefix, int in, int out);
  void register_params(ParameterStore& ps, std::mt19937_64& rng,
                       Init init = Init::xavier) const;
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

  struct Ctx {
    Tensor x;
  };
  Tensor forward(const ParameterStore& ps, const Tensor& x,
                 Ctx* ctx = nullptr) const;
  // Accumulates weight grads in the store, returns grad wrt the input.
  Tensor backward(ParameterStore& ps, const Ctx& ctx,
                  const Tensor& grad) const;

 private:
  std::string w_, b_;
  int in_ = 0, out_ = 0;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(std::string prefix, int dim);
  void register_params(ParameterStore& ps) const;  // gamma = 1, beta = 0

  struct Ctx {
    Tensor xhat;
    std::vector<double> inv_std;
  };
  Tensor forward(const ParameterStore& ps, const Tensor& x,
                 Ctx* ctx = nullptr) const;
  Tensor backward(ParameterStore& ps, const Ctx& ctx,
                  const Tensor& grad) const;

 private:
  std::string gamma_, beta_;
  int dim_ = 0;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::string name, int vocab, int dim);
  void register_params(ParameterStore& ps, std::mt19937_64& rng) const;
  int vocab() const { return vocab_; }
  int dim() const { return dim_; }

  Tensor forward(const ParameterStore& ps, const std::vector<int>& ids) const;
  // Scatter-add of row grads back into the table gradient.
  void backward(ParameterStore& ps, const std::vector<int>& ids,
                const Tensor& grad) const;
  Tensor row(const ParameterStore& ps, int id) const;  // 1 x dim

 private:
  std::string name_;
  int vocab_ = 0, dim_ = 0;
};

// Scaled dot-product self-attention with h heads over a T x dim sequence.
// key_mask marks valid positions (1 = attend); empty means all valid.
// Masked keys get an additive -inf before the softmax, so they carry zero
// attention weight and zero gradient.
class AttentionLayer {
 public:
  AttentionLayer() = default;
  AttentionLayer(std::string prefix, int dim, int heads);
  void register_params(ParameterStore& ps, std::mt19937_64& rng) const;

  struct Ctx {
    LinearLayer::Ctx q_ctx, k_ctx, v_ctx, o_ctx;
    Tensor q, k, v;
    std::vector<Tensor> attn;  // per head, T x T softmax output
    Tensor merged;
  };
  Tensor forward(const ParameterStore& ps, const Tensor& x,
                 const std::vector<char>& key_mask, Ctx* ctx = nullptr) const;
  Tensor backward(ParameterStore& ps, const Ctx& ctx,
                  const Tensor& grad) const;

 private:
  LinearLayer q_, k_, v_, o_;
  int dim_ = 0, heads_ = 0, head_dim_ = 0;
};

// Post-norm block: LN(x + Attention(x)), then LN(h + FFN(h)) with a
// ReLU-activated two-layer FFN.
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(std::string prefix, int dim, int heads, int ffn_dim);
  void register_params(ParameterStore& ps, std::mt19937_64& rng) const;

  struct Ctx {
    AttentionLayer::Ctx attn;
    LayerNormLayer::Ctx ln1, ln2;
    LinearLayer::Ctx f1, f2;
    Tensor relu_in;  // FFN hidden pre-activation
  };
  Tensor forward(const ParameterStore& ps, const Tensor& x,
                 const std::vector<char>& key_mask, Ctx* ctx = nullptr) const;
  Tensor backward(ParameterStore& ps, const Ctx& ctx,
                  const Tensor& grad) const;

 private:
  AttentionLayer attn_;
  LinearLayer f1_, f2_;
  LayerNormLayer ln1_, ln2_;
  int dim_ = 0;
};

// in -> hidden -> hidden -> 1 with ReLU activations; scalar output.
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(std::string prefix, int in, int hidden);
  void register_params(ParameterStore& ps, std::mt19937_64& rng) const;
  int in_dim() const { return l1_.in_dim(); }

  struct Ctx {
    LinearLayer::Ctx l1, l2, l3;
    Tensor a1_in, a2_in;
  };
  double forward(const ParameterStore& ps, const Tensor& x,
                 Ctx* ctx = nullptr) const;
  Tensor backward(ParameterStore& ps, const Ctx& ctx, double grad) const;

 private:
  LinearLayer l1_, l2_, l3_;
};

}  // namespace parsel

#endif
