#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echeat/encoder/encoder.hpp"
#include "echeat/model/layers.hpp"

namespace echeat {

/// Common contract of the DenseLSTM and the baselines: [b x input_len] rows
/// in, [b x C] logits out.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t input_len() const = 0;

  /// Inference. No dropout, no cached state; safe to call concurrently.
  virtual Tensor logits(const Tensor& x) const = 0;

  /// Training pass: caches activations for backward().
  virtual Tensor forward_train(const Tensor& x, Prng& rng, bool use_dropout = true) = 0;

  /// Accumulates parameter gradients for the last forward_train().
  virtual void backward(const Tensor& grad_logits) = 0;

  virtual std::vector<Parameter*> parameters() = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;

  std::vector<const Parameter*> parameters() const {
    auto ps = const_cast<Model*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (Parameter* p : parameters()) p->zero_grad();
  }

 protected:
  void check_input(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(0) == 0 || x.dim(1) != input_len()) {
      throw DimensionError(kind() + ": expected input [b x " + std::to_string(input_len()) + "], got " +
                           shape_string(x.shape()));
    }
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + " config must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ValidationError(what + " config: unknown key '" + key + "'");
  }
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

// [b x H x len] -> [b x (len*H)], position-major.
inline Tensor flatten_positions(const Tensor& x) {
  const std::size_t b = x.dim(0), h = x.dim(1), len = x.dim(2);
  Tensor out({b, len * h});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t c = 0; c < h; ++c)
      for (std::size_t t = 0; t < len; ++t) out.raw()[i * len * h + t * h + c] = x.raw()[(i * h + c) * len + t];
  return out;
}

inline Tensor unflatten_positions(const Tensor& g, std::size_t h, std::size_t len) {
  const std::size_t b = g.dim(0);
  Tensor out({b, h, len});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t c = 0; c < h; ++c)
      for (std::size_t t = 0; t < len; ++t) out.raw()[(i * h + c) * len + t] = g.raw()[i * len * h + t * h + c];
  return out;
}

}  // namespace detail

// ----------------------------------------------------------------- DenseLSTM

struct DenseLstmConfig {
  std::size_t input_len = kFeatureLength;
  std::size_t stem_channels = 64;
  std::size_t growth = 64;
  std::vector<std::size_t> block_layers{4, 8};
  std::size_t final_hidden = 512;
  std::size_t classes = kNumClasses;
  double dropout_rate = 0.2;
  double compression = 0.5;  // transition output channels = floor(compression * input channels)
  bool dense = true;         // false: each layer sees only its predecessor
  std::uint64_t seed = 0;

  void validate() const {
    if (input_len < 2) throw ValidationError("denselstm: input_len must be >= 2");
    if (stem_channels < 1 || growth < 1 || final_hidden < 1) throw ValidationError("denselstm: widths must be >= 1");
    if (block_layers.size() != 2 || block_layers[0] < 1 || block_layers[1] < 1) {
      throw ValidationError("denselstm: block_layers must be two positive counts");
    }
    if (classes < 2) throw ValidationError("denselstm: classes must be >= 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("denselstm: dropout_rate must be in [0, 1)");
    if (!(compression > 0.0 && compression <= 1.0)) throw ValidationError("denselstm: compression must be in (0, 1]");
  }

  std::size_t block_out_channels(std::size_t in, std::size_t layers) const {
    return dense ? in + layers * growth : growth;
  }
  std::size_t transition_channels() const {
    const auto c = static_cast<std::size_t>(compression * static_cast<double>(block_out_channels(stem_channels, block_layers[0])));
    return c < 1 ? 1 : c;
  }
  std::size_t stem_len() const { return same_output_length(input_len, 2); }
  std::size_t final_len() const { return same_output_length(stem_len(), 2); }
  std::size_t flatten_dim() const { return final_len() * final_hidden; }

  nlohmann::json to_json() const {
    return {{"kind", "denselstm"},     {"input_len", input_len},       {"stem_channels", stem_channels},
            {"growth", growth},        {"block_layers", block_layers}, {"final_hidden", final_hidden},
            {"classes", classes},      {"dropout_rate", dropout_rate}, {"compression", compression},
            {"dense", dense},          {"seed", seed}};
  }

  static DenseLstmConfig from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"kind", "input_len", "stem_channels", "growth", "block_layers", "final_hidden",
                                 "classes", "dropout_rate", "compression", "dense", "seed"},
                                "denselstm");
    DenseLstmConfig c;
    detail::read_key(j, "input_len", c.input_len);
    detail::read_key(j, "stem_channels", c.stem_channels);
    detail::read_key(j, "growth", c.growth);
    detail::read_key(j, "block_layers", c.block_layers);
    detail::read_key(j, "final_hidden", c.final_hidden);
    detail::read_key(j, "classes", c.classes);
    detail::read_key(j, "dropout_rate", c.dropout_rate);
    detail::read_key(j, "compression", c.compression);
    detail::read_key(j, "dense", c.dense);
    detail::read_key(j, "seed", c.seed);
    c.validate();
    return c;
  }
};

/// l layers of LSTM -> conv(k=2) -> ReLU -> dropout. With dense connectivity
/// layer i reads the concatenation of the block input and all earlier layer
/// outputs, and the block emits the concatenation of everything.
class DenseBlock {
 public:
  DenseBlock() = default;
  DenseBlock(const std::string& name, std::size_t in_channels, std::size_t layers, std::size_t growth,
             double dropout_rate, bool dense, Prng& rng)
      : in_channels_(in_channels), growth_(growth), dense_(dense) {
    for (std::size_t i = 0; i < layers; ++i) {
      const std::string ln = name + ".layer" + std::to_string(i + 1);
      lstm_.emplace_back(ln + ".lstm", layer_input_channels(i), growth, rng);
      conv_.emplace_back(ln + ".conv", growth, growth, 2, 1, rng);
      act_.emplace_back(dropout_rate);
    }
  }

  std::size_t layer_input_channels(std::size_t i) const {
    if (dense_) return in_channels_ + i * growth_;
    return i == 0 ? in_channels_ : growth_;
  }

  std::size_t layers() const { return lstm_.size(); }

  Tensor infer(const Tensor& x) const {
    std::vector<Tensor> feats{x};
    for (std::size_t i = 0; i < layers(); ++i) {
      const Tensor in = dense_ ? concat_channels(feats) : feats.back();
      feats.push_back(act_[i].infer(conv_[i].infer(lstm_[i].infer(in))));
    }
    return dense_ ? concat_channels(feats) : feats.back();
  }

  Tensor forward(const Tensor& x, Prng& rng, bool training) {
    std::vector<Tensor> feats{x};
    for (std::size_t i = 0; i < layers(); ++i) {
      const Tensor in = dense_ ? concat_channels(feats) : feats.back();
      feats.push_back(act_[i].forward(conv_[i].forward(lstm_[i].forward(in)), rng, training));
    }
    return dense_ ? concat_channels(feats) : feats.back();
  }

  Tensor backward(const Tensor& grad_out) {
    const std::size_t l = layers();
    std::vector<Tensor> g(l + 1);
    std::vector<std::size_t> offset(l + 1, 0);
    for (std::size_t i = 1; i <= l; ++i) offset[i] = in_channels_ + (i - 1) * growth_;
    if (dense_) {
      g[0] = slice_channels(grad_out, 0, in_channels_);
      for (std::size_t i = 1; i <= l; ++i) g[i] = slice_channels(grad_out, offset[i], growth_);
    } else {
      g[l] = grad_out;
    }
    for (std::size_t i = l; i >= 1; --i) {
      const Tensor gin = lstm_[i - 1].backward(conv_[i - 1].backward(act_[i - 1].backward(g[i])));
      if (!dense_) {
        g[i - 1] = gin;
        continue;
      }
      accumulate_channels(g[0], 0, slice_channels(gin, 0, in_channels_));
      for (std::size_t j = 1; j < i; ++j) accumulate_channels(g[j], 0, slice_channels(gin, offset[j], growth_));
    }
    return g[0];
  }

  void collect(std::vector<Parameter*>& out) {
    for (std::size_t i = 0; i < layers(); ++i) {
      lstm_[i].collect(out);
      conv_[i].collect(out);
    }
  }

 private:
  std::size_t in_channels_ = 0;
  std::size_t growth_ = 0;
  bool dense_ = true;
  std::vector<LstmLayer> lstm_;
  std::vector<ConvLayer> conv_;
  std::vector<ReluDropout> act_;
};

/// conv stem (k=3, stride 2) -> dense block 1 -> transition (1x1 conv, avgpool
/// stride 2) -> dense block 2 -> LSTM(final_hidden) over the remaining
/// positions -> flatten -> affine head.
class DenseLstm : public Model {
 public:
  explicit DenseLstm(DenseLstmConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Prng rng(cfg_.seed);
    const std::size_t b1_out = cfg_.block_out_channels(cfg_.stem_channels, cfg_.block_layers[0]);
    const std::size_t t_out = cfg_.transition_channels();
    const std::size_t b2_out = cfg_.block_out_channels(t_out, cfg_.block_layers[1]);
    stem_ = ConvLayer("stem", 1, cfg_.stem_channels, 3, 2, rng);
    block1_ = DenseBlock("block1", cfg_.stem_channels, cfg_.block_layers[0], cfg_.growth, cfg_.dropout_rate,
                         cfg_.dense, rng);
    transition_ = ConvLayer("transition", b1_out, t_out, 1, 1, rng);
    block2_ = DenseBlock("block2", t_out, cfg_.block_layers[1], cfg_.growth, cfg_.dropout_rate, cfg_.dense, rng);
    final_ = LstmLayer("final_lstm", b2_out, cfg_.final_hidden, rng);
    head_ = AffineLayer("head", cfg_.flatten_dim(), cfg_.classes, rng);
  }

  const DenseLstmConfig& config() const { return cfg_; }
  const DenseBlock& block(std::size_t i) const { return i == 0 ? block1_ : block2_; }

  std::string kind() const override { return "denselstm"; }
  std::size_t num_classes() const override { return cfg_.classes; }
  std::size_t input_len() const override { return cfg_.input_len; }

  Tensor logits(const Tensor& x) const override {
    check_input(x);
    Tensor h = stem_.infer(x.reshaped({x.dim(0), 1, cfg_.input_len}));
    h = block1_.infer(h);
    h = avgpool1d(transition_.infer(h), 2);
    h = block2_.infer(h);
    return head_.infer(detail::flatten_positions(final_.infer(h)));
  }

  Tensor forward_train(const Tensor& x, Prng& rng, bool use_dropout = true) override {
    check_input(x);
    Tensor h = stem_.forward(x.reshaped({x.dim(0), 1, cfg_.input_len}));
    h = block1_.forward(h, rng, use_dropout);
    h = transition_.forward(h);
    pool_in_ = h.shape();
    h = block2_.forward(avgpool1d(h, 2), rng, use_dropout);
    return head_.forward(detail::flatten_positions(final_.forward(h)));
  }

  void backward(const Tensor& grad_logits) override {
    Tensor g = detail::unflatten_positions(head_.backward(grad_logits), cfg_.final_hidden, cfg_.final_len());
    g = block2_.backward(final_.backward(g));
    g = block1_.backward(transition_.backward(avgpool1d_backward(pool_in_, 2, g)));
    stem_.backward(g);
  }

  using Model::parameters;
  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    stem_.collect(out);
    block1_.collect(out);
    transition_.collect(out);
    block2_.collect(out);
    final_.collect(out);
    head_.collect(out);
    return out;
  }

  nlohmann::json config_json() const override { return cfg_.to_json(); }
  std::unique_ptr<Model> clone() const override { return std::make_unique<DenseLstm>(*this); }

 private:
  DenseLstmConfig cfg_;
  ConvLayer stem_;
  DenseBlock block1_;
  ConvLayer transition_;
  DenseBlock block2_;
  LstmLayer final_;
  AffineLayer head_;
  Shape pool_in_;
};

// ----------------------------------------------------------------- baselines

struct BaselineConfig {
  std::string kind = "dnn";  // dnn | rnn | lstm
  std::vector<std::size_t> hidden;  // dnn: layer widths; rnn/lstm: one entry
  std::size_t input_len = kFeatureLength;
  std::size_t classes = kNumClasses;
  std::uint64_t seed = 0;

  static BaselineConfig defaults(const std::string& kind, std::size_t classes = kNumClasses, std::uint64_t seed = 0) {
    BaselineConfig c;
    c.kind = kind;
    c.classes = classes;
    c.seed = seed;
    if (kind == "dnn") {
      c.hidden = {64, 64};
    } else if (kind == "rnn" || kind == "lstm") {
      c.hidden = {128};
    } else {
      throw ValidationError("unknown baseline kind '" + kind + "' (expected dnn|rnn|lstm)");
    }
    return c;
  }

  void validate() const {
    if (kind != "dnn" && kind != "rnn" && kind != "lstm") {
      throw ValidationError("unknown baseline kind '" + kind + "' (expected dnn|rnn|lstm)");
    }
    if (hidden.empty() || (kind != "dnn" && hidden.size() != 1)) {
      throw ValidationError(kind + ": hidden must list " + (kind == "dnn" ? "one or more widths" : "one width"));
    }
    for (auto h : hidden)
      if (h < 1) throw ValidationError(kind + ": hidden widths must be >= 1");
    if (classes < 2) throw ValidationError(kind + ": classes must be >= 2");
    if (input_len < 1) throw ValidationError(kind + ": input_len must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"kind", kind}, {"hidden", hidden}, {"input_len", input_len}, {"classes", classes}, {"seed", seed}};
  }

  static BaselineConfig from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"kind", "hidden", "input_len", "classes", "seed"}, "baseline");
    std::string kind = j.value("kind", std::string("dnn"));
    BaselineConfig c = defaults(kind);
    detail::read_key(j, "hidden", c.hidden);
    detail::read_key(j, "input_len", c.input_len);
    detail::read_key(j, "classes", c.classes);
    detail::read_key(j, "seed", c.seed);
    c.validate();
    return c;
  }
};

/// Affine + ReLU stack.
class DnnModel : public Model {
 public:
  explicit DnnModel(BaselineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Prng rng(cfg_.seed);
    std::size_t in = cfg_.input_len;
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
      layers_.emplace_back("dense" + std::to_string(i + 1), in, cfg_.hidden[i], rng);
      in = cfg_.hidden[i];
    }
    head_ = AffineLayer("head", in, cfg_.classes, rng);
  }

  std::string kind() const override { return "dnn"; }
  std::size_t num_classes() const override { return cfg_.classes; }
  std::size_t input_len() const override { return cfg_.input_len; }

  Tensor logits(const Tensor& x) const override {
    check_input(x);
    Tensor h = x;
    for (const auto& l : layers_) h = relu(l.infer(h));
    return head_.infer(h);
  }

  Tensor forward_train(const Tensor& x, Prng&, bool = true) override {
    check_input(x);
    pre_.clear();
    Tensor h = x;
    for (auto& l : layers_) {
      pre_.push_back(l.forward(h));
      h = relu(pre_.back());
    }
    return head_.forward(h);
  }

  void backward(const Tensor& grad_logits) override {
    Tensor g = head_.backward(grad_logits);
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].backward(relu_backward(pre_[i], g));
  }

  using Model::parameters;
  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    for (auto& l : layers_) l.collect(out);
    head_.collect(out);
    return out;
  }

  nlohmann::json config_json() const override { return cfg_.to_json(); }
  std::unique_ptr<Model> clone() const override { return std::make_unique<DnnModel>(*this); }

 private:
  BaselineConfig cfg_;
  std::vector<AffineLayer> layers_;
  AffineLayer head_;
  std::vector<Tensor> pre_;
};

/// Elman recurrence h_t = tanh(w_x x_t + W_h h_{t-1} + b) over the scalar
/// inputs, classified from the final hidden state.
class RnnModel : public Model {
 public:
  explicit RnnModel(BaselineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Prng rng(cfg_.seed);
    const std::size_t h = cfg_.hidden[0];
    w_x_ = Parameter("rnn.w_x", xavier_uniform({h, 1}, 1, h, rng));
    w_h_ = Parameter("rnn.w_h", xavier_uniform({h, h}, h, h, rng));
    b_ = Parameter("rnn.bias", Tensor({h}));
    head_ = AffineLayer("head", h, cfg_.classes, rng);
  }

  std::string kind() const override { return "rnn"; }
  std::size_t num_classes() const override { return cfg_.classes; }
  std::size_t input_len() const override { return cfg_.input_len; }

  /// Hidden state after the last step, [b x H].
  Tensor final_hidden(const Tensor& x) const {
    check_input(x);
    std::vector<RowMatrix> hs;
    run(x, hs);
    return from_matrix(hs.back());
  }

  Tensor logits(const Tensor& x) const override { return head_.infer(final_hidden(x)); }

  Tensor forward_train(const Tensor& x, Prng&, bool = true) override {
    check_input(x);
    x_ = x;
    run(x, hs_);
    return head_.forward(from_matrix(hs_.back()));
  }

  void backward(const Tensor& grad_logits) override {
    const Tensor gh = head_.backward(grad_logits);
    RowMatrix dh = as_matrix(gh);
    const auto xm = as_matrix(x_);
    auto gwx = as_matrix(w_x_.grad);
    auto gwh = as_matrix(w_h_.grad);
    auto gb = as_matrix(b_.grad, 1, b_.grad.size());
    const auto wh = as_matrix(w_h_.value);
    for (std::size_t t = cfg_.input_len; t-- > 0;) {
      const RowMatrix& h = hs_[t + 1];
      const RowMatrix dz = dh.array() * (1.0 - h.array().square());
      gwx.noalias() += dz.transpose() * xm.col(static_cast<Eigen::Index>(t));
      gwh.noalias() += dz.transpose() * hs_[t];
      gb += dz.colwise().sum();
      dh.noalias() = dz * wh;
    }
  }

  using Model::parameters;
  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out{&w_x_, &w_h_, &b_};
    head_.collect(out);
    return out;
  }

  nlohmann::json config_json() const override { return cfg_.to_json(); }
  std::unique_ptr<Model> clone() const override { return std::make_unique<RnnModel>(*this); }

 private:
  // hs[0] is the zero initial state; hs[t+1] follows input t.
  void run(const Tensor& x, std::vector<RowMatrix>& hs) const {
    const auto b = static_cast<Eigen::Index>(x.dim(0));
    const auto h = static_cast<Eigen::Index>(cfg_.hidden[0]);
    const auto xm = as_matrix(x);
    const auto wx = as_matrix(w_x_.value, w_x_.value.size(), 1);
    const auto wh = as_matrix(w_h_.value);
    const auto bias = as_matrix(b_.value, 1, b_.value.size()).row(0);
    hs.assign(1, RowMatrix::Zero(b, h));
    for (std::size_t t = 0; t < cfg_.input_len; ++t) {
      RowMatrix z = xm.col(static_cast<Eigen::Index>(t)) * wx.transpose();
      z.noalias() += hs.back() * wh.transpose();
      z.rowwise() += bias;
      hs.push_back(z.array().tanh().matrix());
    }
  }

  BaselineConfig cfg_;
  Parameter w_x_;
  Parameter w_h_;
  Parameter b_;
  AffineLayer head_;
  Tensor x_;
  std::vector<RowMatrix> hs_;
};

/// LSTM over the scalar inputs, classified from the final hidden state.
class LstmModel : public Model {
 public:
  explicit LstmModel(BaselineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Prng rng(cfg_.seed);
    lstm_ = LstmLayer("lstm", 1, cfg_.hidden[0], rng);
    head_ = AffineLayer("head", cfg_.hidden[0], cfg_.classes, rng);
  }

  std::string kind() const override { return "lstm"; }
  std::size_t num_classes() const override { return cfg_.classes; }
  std::size_t input_len() const override { return cfg_.input_len; }

  Tensor logits(const Tensor& x) const override {
    check_input(x);
    return head_.infer(last_step(lstm_.infer(x.reshaped({x.dim(0), 1, cfg_.input_len}))));
  }

  Tensor forward_train(const Tensor& x, Prng&, bool = true) override {
    check_input(x);
    return head_.forward(last_step(lstm_.forward(x.reshaped({x.dim(0), 1, cfg_.input_len}))));
  }

  void backward(const Tensor& grad_logits) override {
    const Tensor gh = head_.backward(grad_logits);
    const std::size_t b = gh.dim(0), h = gh.dim(1), len = cfg_.input_len;
    Tensor g({b, h, len});
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t c = 0; c < h; ++c) g.raw()[(i * h + c) * len + len - 1] = gh.raw()[i * h + c];
    lstm_.backward(g);
  }

  using Model::parameters;
  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    lstm_.collect(out);
    head_.collect(out);
    return out;
  }

  nlohmann::json config_json() const override { return cfg_.to_json(); }
  std::unique_ptr<Model> clone() const override { return std::make_unique<LstmModel>(*this); }

 private:
  static Tensor last_step(const Tensor& seq) {
    const std::size_t b = seq.dim(0), h = seq.dim(1), len = seq.dim(2);
    Tensor out({b, h});
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t c = 0; c < h; ++c) out.raw()[i * h + c] = seq.raw()[(i * h + c) * len + len - 1];
    return out;
  }

  BaselineConfig cfg_;
  LstmLayer lstm_;
  AffineLayer head_;
};

// ----------------------------------------------------------------- factory

inline std::unique_ptr<Model> build_baseline(const std::string& kind, std::size_t classes = kNumClasses,
                                             std::uint64_t seed = 0) {
  BaselineConfig c = BaselineConfig::defaults(kind, classes, seed);
  if (kind == "dnn") return std::make_unique<DnnModel>(c);
  if (kind == "rnn") return std::make_unique<RnnModel>(c);
  return std::make_unique<LstmModel>(c);
}

/// Rebuilds a freshly initialized model from config_json().
inline std::unique_ptr<Model> make_model(const nlohmann::json& cfg) {
  if (!cfg.is_object()) throw ValidationError("model config must be a JSON object");
  const std::string kind = cfg.value("kind", std::string("denselstm"));
  if (kind == "denselstm") return std::make_unique<DenseLstm>(DenseLstmConfig::from_json(cfg));
  BaselineConfig c = BaselineConfig::from_json(cfg);
  if (kind == "dnn") return std::make_unique<DnnModel>(c);
  if (kind == "rnn") return std::make_unique<RnnModel>(c);
  return std::make_unique<LstmModel>(c);
}

inline const std::vector<std::string>& model_kinds() {
  static const std::vector<std::string> kinds{"denselstm", "dnn", "rnn", "lstm"};
  return kinds;
}

}  // namespace echeat
