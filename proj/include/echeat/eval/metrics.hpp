#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echeat/model/train.hpp"

namespace echeat {

/// Suspected is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const { return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct AccuracyResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

inline AccuracyResult accuracy_confusion(std::span<const Label> preds, std::span<const Label> truth) {
  if (preds.size() != truth.size()) {
    throw DimensionError("accuracy: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " labels");
  }
  if (preds.empty()) throw ValidationError("accuracy: no samples");
  AccuracyResult r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Label::suspected, t = truth[i] == Label::suspected;
    if (p && t) ++r.confusion.tp;
    else if (p) ++r.confusion.fp;
    else if (t) ++r.confusion.fn;
    else ++r.confusion.tn;
  }
  r.accuracy = r.confusion.accuracy();
  return r;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // score >= threshold counts as suspected
};

struct RocResult {
  std::vector<RocPoint> curve;
  double auc = 0.0;
};

/// Threshold sweep over distinct scores, descending. Tied scores move both
/// rates at once, so the trapezoid gives ties half credit.
inline RocResult roc_auc(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) throw DimensionError("roc: scores and labels differ in length");
  std::size_t pos = 0;
  for (Label l : truth) pos += l == Label::suspected;
  const std::size_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("roc: both classes must be present");
  for (double s : scores)
    if (!std::isfinite(s)) throw ValidationError("roc: scores must be finite");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult r;
  r.curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  double area2 = 0.0;  // twice the area, in units of 1/(pos*neg)
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (truth[order[i]] == Label::suspected ? tp : fp) += 1;
    area2 += static_cast<double>((fp - fp0) * (tp + tp0));
    r.curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                       static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  r.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return r;
}

/// Mann-Whitney form: P(score_s > score_n) + 0.5 P(score_s == score_n).
inline double pairwise_auc(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) throw DimensionError("auc: scores and labels differ in length");
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i] != Label::suspected) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[j] != Label::normal) continue;
      ++pairs;
      wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  if (pairs == 0) throw ValidationError("auc: both classes must be present");
  return wins / static_cast<double>(pairs);
}

// ----------------------------------------------------------------- reports

struct TestSetResult {
  std::string name;
  std::size_t n = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::optional<double> auc;  // absent when the set has a single class
  std::vector<RocPoint> roc;
};

struct ModelRun {
  std::string model;
  std::uint64_t seed = 0;
  std::vector<TestSetResult> test_sets;
  TestSetResult overall;  // pooled over all test sets
  std::vector<EpochStats> history;
};

struct MetricsReport {
  std::vector<std::string> models;
  std::vector<std::string> test_sets;
  std::vector<std::uint64_t> seeds;
  std::vector<ModelRun> runs;

  /// Mean over seeds; test_set "overall" selects the pooled figure.
  double mean_accuracy(const std::string& model, const std::string& test_set) const {
    return mean_of(model, test_set, [](const TestSetResult& r) { return std::optional<double>(r.accuracy); }).value();
  }

  std::optional<double> mean_auc(const std::string& model, const std::string& test_set) const {
    return mean_of(model, test_set, [](const TestSetResult& r) { return r.auc; });
  }

  const ModelRun& run(const std::string& model, std::uint64_t seed) const {
    for (const auto& r : runs)
      if (r.model == model && r.seed == seed) return r;
    throw ValidationError("report has no run for model '" + model + "' seed " + std::to_string(seed));
  }

 private:
  std::optional<double> mean_of(const std::string& model, const std::string& test_set,
                                const std::function<std::optional<double>(const TestSetResult&)>& f) const {
    double sum = 0.0;
    std::size_t n = 0;
    bool found = false;
    for (const auto& r : runs) {
      if (r.model != model) continue;
      const TestSetResult* t = test_set == "overall" ? &r.overall : nullptr;
      for (const auto& ts : r.test_sets)
        if (ts.name == test_set) t = &ts;
      if (!t) continue;
      found = true;
      if (auto v = f(*t)) {
        sum += *v;
        ++n;
      }
    }
    if (!found) throw ValidationError("report has no entry for " + model + " / " + test_set);
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

inline TestSetResult score_predictions(const std::string& name, std::span<const Prediction> preds,
                                       std::span<const Label> truth) {
  std::vector<Label> labels;
  std::vector<double> scores;
  for (const auto& p : preds) {
    labels.push_back(p.label);
    scores.push_back(p.probabilities.at(class_index(Label::suspected)));
  }
  const auto acc = accuracy_confusion(labels, truth);
  TestSetResult r{name, truth.size(), acc.accuracy, acc.confusion, std::nullopt, {}};
  const bool both = acc.confusion.tp + acc.confusion.fn > 0 && acc.confusion.tn + acc.confusion.fp > 0;
  if (both) {
    auto roc = roc_auc(scores, truth);
    r.auc = roc.auc;
    r.roc = std::move(roc.curve);
  }
  return r;
}

/// Per-set metrics plus the pooled "overall" entry.
inline ModelRun evaluate(const Model& model, const std::vector<Dataset>& test_sets, const std::string& model_name = "",
                         std::uint64_t seed = 0) {
  if (test_sets.empty()) throw ValidationError("evaluate: no test sets");
  ModelRun run{model_name.empty() ? model.kind() : model_name, seed, {}, {}, {}};
  std::vector<Prediction> all_preds;
  std::vector<Label> all_truth;
  for (const auto& ts : test_sets) {
    if (ts.empty()) throw ValidationError("evaluate: test set '" + ts.name + "' is empty");
    const auto preds = predict(model, ts);
    std::vector<Label> truth;
    for (const auto& s : ts.samples) truth.push_back(s.label);
    run.test_sets.push_back(score_predictions(ts.name, preds, truth));
    all_preds.insert(all_preds.end(), preds.begin(), preds.end());
    all_truth.insert(all_truth.end(), truth.begin(), truth.end());
  }
  run.overall = score_predictions("overall", all_preds, all_truth);
  return run;
}

/// Model config for a kind name with the given seed.
inline nlohmann::json model_config_for(const std::string& kind, std::uint64_t seed) {
  nlohmann::json cfg = kind == "denselstm" ? DenseLstmConfig{}.to_json() : BaselineConfig::defaults(kind).to_json();
  cfg["seed"] = seed;
  return cfg;
}

struct CompareProgress {
  std::string model;
  std::uint64_t seed = 0;
  EpochStats epoch;
};

/// Trains every model once per seed on `train_ds` and evaluates it on every
/// test set. Model configs are JSON as accepted by make_model(); their seed
/// is replaced by the run seed.
inline MetricsReport compare_models(const std::vector<nlohmann::json>& model_configs, const Dataset& train_ds,
                                    const std::vector<Dataset>& test_sets, const TrainConfig& tcfg,
                                    const std::vector<std::uint64_t>& seeds, const Dataset* val_ds = nullptr,
                                    const std::function<void(const CompareProgress&)>& progress = {}) {
  if (model_configs.empty()) throw ValidationError("compare: no models");
  if (seeds.empty()) throw ValidationError("compare: no seeds");
  MetricsReport report;
  for (const auto& c : model_configs) report.models.push_back(c.value("kind", std::string("denselstm")));
  for (const auto& t : test_sets) report.test_sets.push_back(t.name);
  report.seeds = seeds;
  for (std::uint64_t seed : seeds) {
    for (std::size_t m = 0; m < model_configs.size(); ++m) {
      nlohmann::json cfg = model_configs[m];
      cfg["seed"] = seed;
      TrainConfig t = tcfg;
      t.seed = seed;
      Trainer trainer(make_model(cfg), t);
      const std::string name = report.models[m];
      trainer.fit(train_ds, val_ds, [&](const EpochStats& e) {
        if (progress) progress({name, seed, e});
      });
      ModelRun run = evaluate(trainer.model(), test_sets, name, seed);
      run.history = trainer.history();
      report.runs.push_back(std::move(run));
    }
  }
  return report;
}

// ----------------------------------------------------------------- JSON

inline nlohmann::ordered_json to_json(const ConfusionMatrix& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline nlohmann::ordered_json to_json(const TestSetResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["auc"] = r.auc ? nlohmann::ordered_json(*r.auc) : nlohmann::ordered_json();
  j["confusion"] = to_json(r.confusion);
  nlohmann::ordered_json roc = nlohmann::ordered_json::array();
  for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr});
  j["roc"] = roc;
  return j;
}

inline TestSetResult test_set_from_json(const nlohmann::json& j) {
  TestSetResult r;
  r.name = j.at("name").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
  const auto& c = j.at("confusion");
  r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                 c.at("fn").get<std::size_t>()};
  for (const auto& p : j.at("roc")) r.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>(), 0.0});
  return r;
}

inline nlohmann::ordered_json to_json(const MetricsReport& rep) {
  nlohmann::ordered_json j;
  j["models"] = rep.models;
  j["test_sets"] = rep.test_sets;
  j["seeds"] = rep.seeds;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& m : rep.models) {
    std::vector<std::string> names = rep.test_sets;
    names.push_back("overall");
    for (const auto& t : names) {
      const auto auc = rep.mean_auc(m, t);
      summary.push_back({{"model", m},
                         {"testset", t},
                         {"accuracy", rep.mean_accuracy(m, t)},
                         {"auc", auc ? nlohmann::ordered_json(*auc) : nlohmann::ordered_json()}});
    }
  }
  j["summary"] = summary;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : rep.runs) {
    nlohmann::ordered_json jr;
    jr["model"] = r.model;
    jr["seed"] = r.seed;
    nlohmann::ordered_json sets = nlohmann::ordered_json::array();
    for (const auto& t : r.test_sets) sets.push_back(to_json(t));
    jr["test_sets"] = sets;
    jr["overall"] = to_json(r.overall);
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& e : r.history) hist.push_back(nlohmann::ordered_json::parse(to_json(e).dump()));
    jr["history"] = hist;
    runs.push_back(jr);
  }
  j["runs"] = runs;
  return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport rep;
  try {
    rep.models = j.at("models").get<std::vector<std::string>>();
    rep.test_sets = j.at("test_sets").get<std::vector<std::string>>();
    rep.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& jr : j.at("runs")) {
      ModelRun r;
      r.model = jr.at("model").get<std::string>();
      r.seed = jr.at("seed").get<std::uint64_t>();
      for (const auto& t : jr.at("test_sets")) r.test_sets.push_back(test_set_from_json(t));
      r.overall = test_set_from_json(jr.at("overall"));
      if (jr.contains("history"))
        for (const auto& e : jr.at("history")) r.history.push_back(epoch_from_json(e));
      rep.runs.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("metrics report: ") + e.what());
  }
  return rep;
}

}  // namespace echeat
