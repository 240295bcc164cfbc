#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "echeat/dataset/dataset.hpp"
#include "echeat/model/model.hpp"

namespace echeat {

struct TrainConfig {
  double lr = 1e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 250;
  std::uint64_t seed = 0;
  /// Stop once an epoch ends with at least this training accuracy.
  std::optional<double> target_train_accuracy;

  void validate() const {
    if (!(lr > 0.0)) throw ValidationError("train: lr must be positive");
    if (weight_decay < 0.0) throw ValidationError("train: weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ValidationError("train: betas must be in [0, 1)");
    }
    if (!(eps > 0.0)) throw ValidationError("train: eps must be positive");
    if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  }

  AdamConfig adam() const { return {lr, beta1, beta2, eps, weight_decay}; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"lr", lr},       {"weight_decay", weight_decay}, {"beta1", beta1},
                     {"beta2", beta2}, {"eps", eps},                   {"batch_size", batch_size},
                     {"epochs", epochs}, {"seed", seed}};
    if (target_train_accuracy) j["target_train_accuracy"] = *target_train_accuracy;
    return j;
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(
        j, {"lr", "weight_decay", "beta1", "beta2", "eps", "batch_size", "epochs", "seed", "target_train_accuracy"},
        "train");
    TrainConfig c;
    detail::read_key(j, "lr", c.lr);
    detail::read_key(j, "weight_decay", c.weight_decay);
    detail::read_key(j, "beta1", c.beta1);
    detail::read_key(j, "beta2", c.beta2);
    detail::read_key(j, "eps", c.eps);
    detail::read_key(j, "batch_size", c.batch_size);
    detail::read_key(j, "epochs", c.epochs);
    detail::read_key(j, "seed", c.seed);
    if (j.contains("target_train_accuracy")) {
      double t = 0.0;
      detail::read_key(j, "target_train_accuracy", t);
      c.target_train_accuracy = t;
    }
    c.validate();
    return c;
  }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

inline nlohmann::json to_json(const EpochStats& e) {
  nlohmann::json j{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"train_accuracy", e.train_accuracy}};
  j["val_accuracy"] = e.val_accuracy ? nlohmann::json(*e.val_accuracy) : nlohmann::json(nullptr);
  return j;
}

inline EpochStats epoch_from_json(const nlohmann::json& j) {
  EpochStats e;
  e.epoch = j.at("epoch").get<std::size_t>();
  e.mean_loss = j.at("mean_loss").get<double>();
  e.train_accuracy = j.at("train_accuracy").get<double>();
  if (!j.at("val_accuracy").is_null()) e.val_accuracy = j.at("val_accuracy").get<double>();
  return e;
}

// ----------------------------------------------------------------- batching

inline Tensor features_tensor(const Dataset& ds, std::span<const std::size_t> idx) {
  Tensor x({idx.size(), kFeatureLength});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& bits = ds.samples.at(idx[r]).features.bits;
    for (std::size_t j = 0; j < kFeatureLength; ++j) x.at(r, j) = bits[j];
  }
  return x;
}

inline Tensor features_tensor(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return features_tensor(ds, idx);
}

inline Tensor features_tensor(std::span<const FeatureVector> fvs) {
  Tensor x({fvs.size(), kFeatureLength});
  for (std::size_t r = 0; r < fvs.size(); ++r)
    for (std::size_t j = 0; j < kFeatureLength; ++j) x.at(r, j) = fvs[r].bits[j];
  return x;
}

inline Tensor targets_tensor(const Dataset& ds, std::span<const std::size_t> idx, std::size_t classes) {
  std::vector<std::size_t> cls(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) cls[r] = class_index(ds.samples.at(idx[r]).label);
  return one_hot(cls, classes);
}

// ----------------------------------------------------------------- inference

struct Prediction {
  Label label = Label::normal;
  std::vector<double> probabilities;
};

/// argmax; exact ties resolve to the lower class index (normal).
inline Label label_from_probabilities(std::span<const double> probs) {
  if (probs.size() < 2) throw ValidationError("predict: need at least two class probabilities");
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j)
    if (probs[j] > probs[best]) best = j;
  if (best > 1) throw ValidationError("predict: class index " + std::to_string(best) + " has no behavioral label");
  return static_cast<Label>(best);
}

inline std::vector<Prediction> predict_batch(const Model& model, const Tensor& x, std::size_t chunk = 256) {
  std::vector<Prediction> out;
  out.reserve(x.dim(0));
  const std::size_t n = x.dim(0), d = x.dim(1);
  for (std::size_t s = 0; s < n; s += chunk) {
    const std::size_t m = std::min(chunk, n - s);
    Tensor part({m, d}, std::vector<double>(x.raw() + s * d, x.raw() + (s + m) * d));
    const Tensor p = softmax(model.logits(part));
    const std::size_t c = p.dim(1);
    for (std::size_t r = 0; r < m; ++r) {
      std::vector<double> probs(p.raw() + r * c, p.raw() + (r + 1) * c);
      out.push_back({label_from_probabilities(probs), std::move(probs)});
    }
  }
  return out;
}

inline Prediction predict(const Model& model, const FeatureVector& fv) {
  fv.validate();
  return predict_batch(model, features_tensor(std::span<const FeatureVector>(&fv, 1))).front();
}

inline std::vector<Prediction> predict(const Model& model, const Dataset& ds) {
  if (ds.empty()) return {};
  return predict_batch(model, features_tensor(ds));
}

inline double accuracy(const Model& model, const Dataset& ds) {
  if (ds.empty()) return 0.0;
  const auto preds = predict(model, ds);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hit += preds[i].label == ds.samples[i].label;
  return static_cast<double>(hit) / static_cast<double>(ds.size());
}

// ----------------------------------------------------------------- training

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  std::size_t epoch = 0;        // completed epochs
  std::uint64_t adam_step = 0;  // completed optimizer steps
  std::uint64_t rng_state = 0;
  std::vector<EpochStats> history;
  std::optional<double> best_val_accuracy;
  std::size_t best_epoch = 0;
  std::vector<Tensor> best_values;  // parameter snapshot, same order as parameters()
};

/// Mini-batch Adam on mean-reduced softmax cross-entropy.
class Trainer {
 public:
  using EpochCallback = std::function<void(const EpochStats&)>;

  Trainer(std::unique_ptr<Model> model, TrainConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) {
    if (!model_) throw ValidationError("trainer: model is null");
    cfg_.validate();
    state_.rng_state = Prng(cfg_.seed).state();
  }

  Trainer(std::unique_ptr<Model> model, TrainConfig cfg, TrainState state)
      : model_(std::move(model)), cfg_(std::move(cfg)), state_(std::move(state)) {
    if (!model_) throw ValidationError("trainer: model is null");
    cfg_.validate();
  }

  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  std::unique_ptr<Model> release_model() { return std::move(model_); }
  const TrainConfig& config() const { return cfg_; }
  TrainConfig& config() { return cfg_; }
  const TrainState& state() const { return state_; }
  const std::vector<EpochStats>& history() const { return state_.history; }

  bool target_reached() const {
    return cfg_.target_train_accuracy && !state_.history.empty() &&
           state_.history.back().train_accuracy >= *cfg_.target_train_accuracy;
  }

  /// Runs epochs until cfg.epochs are complete (or the accuracy target is hit).
  const std::vector<EpochStats>& fit(const Dataset& train, const Dataset* val = nullptr,
                                     const EpochCallback& on_epoch = {}) {
    if (train.empty()) throw ValidationError("train: training set is empty");
    while (state_.epoch < cfg_.epochs && !target_reached()) {
      const EpochStats s = run_epoch(train, val);
      if (on_epoch) on_epoch(s);
    }
    return state_.history;
  }

  EpochStats run_epoch(const Dataset& train, const Dataset* val = nullptr) {
    if (train.empty()) throw ValidationError("train: training set is empty");
    Prng rng;
    rng.set_state(state_.rng_state);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    const auto params = model_->parameters();
    const AdamConfig adam = cfg_.adam();
    const std::size_t classes = model_->num_classes();
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += cfg_.batch_size) {
      const std::span<const std::size_t> idx(order.data() + s, std::min(cfg_.batch_size, order.size() - s));
      const Tensor x = features_tensor(train, idx);
      const Tensor y = targets_tensor(train, idx, classes);
      model_->zero_grad();
      auto ce = cross_entropy(model_->forward_train(x, rng), y);
      loss_sum += ce.loss;
      const double inv = 1.0 / static_cast<double>(idx.size());
      for (double& g : ce.grad.data()) g *= inv;
      model_->backward(ce.grad);
      adam_step(params, ++state_.adam_step, adam);
    }
    state_.rng_state = rng.state();

    EpochStats st;
    st.epoch = ++state_.epoch;
    st.mean_loss = loss_sum / static_cast<double>(train.size());
    st.train_accuracy = accuracy(*model_, train);
    if (val && !val->empty()) {
      st.val_accuracy = accuracy(*model_, *val);
      if (!state_.best_val_accuracy || *st.val_accuracy > *state_.best_val_accuracy) {
        state_.best_val_accuracy = st.val_accuracy;
        state_.best_epoch = st.epoch;
        state_.best_values.clear();
        for (const Parameter* p : params) state_.best_values.push_back(p->value);
      }
    }
    state_.history.push_back(st);
    return st;
  }

  /// Copies the best-validation snapshot into the model; false if none exists.
  bool restore_best() {
    if (state_.best_values.empty()) return false;
    const auto params = model_->parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = state_.best_values.at(i);
    return true;
  }

 private:
  std::unique_ptr<Model> model_;
  TrainConfig cfg_;
  TrainState state_;
};

/// Convenience wrapper: trains a fresh copy of `model` and returns it with its history.
struct TrainResult {
  std::unique_ptr<Model> model;
  std::vector<EpochStats> history;
  TrainState state;
};

inline TrainResult train(const Model& model, const Dataset& train_ds, const Dataset* val_ds, const TrainConfig& cfg) {
  Trainer t(model.clone(), cfg);
  t.fit(train_ds, val_ds);
  TrainResult r;
  r.history = t.history();
  r.state = t.state();
  r.model = t.release_model();
  return r;
}

}  // namespace echeat
