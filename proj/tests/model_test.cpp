#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "echeat/model.hpp"

using namespace echeat;
namespace fs = std::filesystem;

namespace {

std::size_t lstm_params(std::size_t in, std::size_t h) { return 4 * h * in + 4 * h * h + 4 * h; }
std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k) { return out * in * k + out; }

// Parameter count written out layer by layer from the architecture description.
std::size_t census_oracle(std::size_t stem, std::size_t growth, std::size_t l1, std::size_t l2, std::size_t fin,
                          std::size_t classes, bool dense) {
  std::size_t n = conv_params(1, stem, 3);
  std::size_t c = stem;
  for (std::size_t i = 0; i < l1; ++i) {
    const std::size_t in = dense ? stem + i * growth : (i == 0 ? stem : growth);
    n += lstm_params(in, growth) + conv_params(growth, growth, 2);
  }
  c = dense ? stem + l1 * growth : growth;
  const std::size_t t = c / 2;
  n += conv_params(c, t, 1);
  for (std::size_t i = 0; i < l2; ++i) {
    const std::size_t in = dense ? t + i * growth : (i == 0 ? t : growth);
    n += lstm_params(in, growth) + conv_params(growth, growth, 2);
  }
  c = dense ? t + l2 * growth : growth;
  n += lstm_params(c, fin);
  n += 6 * fin * classes + classes;
  return n;
}

DenseLstmConfig tiny(bool dense = true, std::uint64_t seed = 1) {
  DenseLstmConfig c;
  c.stem_channels = 4;
  c.growth = 3;
  c.block_layers = {2, 3};
  c.final_hidden = 4;
  c.dense = dense;
  c.seed = seed;
  return c;
}

Tensor random_batch(std::size_t b, std::uint64_t seed) {
  Prng rng(seed);
  Tensor x({b, kFeatureLength});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < kNumQuestions; ++j) x.at(i, j) = rng.bernoulli(0.7) ? 1.0 : 0.0;
    x.at(i, kNumQuestions + rng.uniform(3)) = 1.0;
  }
  return x;
}

Dataset balanced(std::size_t per_class, std::uint64_t seed) {
  const Dataset pool = generate_synthetic({per_class * 10, 0.5, seed, AssessmentManifest::uniform()});
  Dataset out{"balanced", Provenance::synthetic, {}};
  std::size_t s = 0, n = 0;
  for (const auto& x : pool.samples) {
    if (x.label == Label::suspected && s < per_class) {
      out.samples.push_back(x);
      ++s;
    } else if (x.label == Label::normal && n < per_class) {
      out.samples.push_back(x);
      ++n;
    }
  }
  return out;
}

GradCheckReport check_model(Model& m, const Tensor& x, const std::vector<std::size_t>& labels,
                            std::size_t max_coords = 0) {
  const Tensor y = one_hot(labels, m.num_classes());
  Prng rng(3);
  // Zero biases put ReLU inputs exactly on the kink wherever a layer input is all zero.
  for (Parameter* p : m.parameters()) {
    if (p->value.rank() == 1) {
      for (double& v : p->value.data()) v += rng.uniform_real(-0.1, 0.1);
    }
  }
  m.zero_grad();
  auto ce = cross_entropy(m.forward_train(x, rng, false), y);
  for (double& g : ce.grad.data()) g /= static_cast<double>(x.dim(0));
  m.backward(ce.grad);
  auto loss = [&] { return cross_entropy(m.logits(x), y).loss / static_cast<double>(x.dim(0)); };
  const auto params = m.parameters();
  GradCheckOptions opt;
  opt.max_coords = max_coords;
  return grad_check(loss, params, opt);
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "echeat_model_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.raw(), b.raw(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(DenseLstm, DefaultCensusAndShapeTrace) {
  DenseLstm m(DenseLstmConfig{});
  EXPECT_EQ(m.config().flatten_dim(), 3072u);
  EXPECT_EQ(m.config().stem_len(), 12u);
  EXPECT_EQ(m.config().final_len(), 6u);
  EXPECT_EQ(m.block(0).layer_input_channels(2), 192u);
  EXPECT_EQ(m.block(1).layer_input_channels(0), 160u);
  EXPECT_EQ(m.parameter_count(), census_oracle(64, 64, 4, 8, 512, 2, true));
  // Names are unique.
  std::set<std::string> names;
  for (const Parameter* p : std::as_const(m).parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
}

TEST(DenseLstm, AblationChangesCensusByPredictedAmount) {
  DenseLstmConfig c;
  c.dense = false;
  DenseLstm sparse(c);
  DenseLstm dense(DenseLstmConfig{});
  const auto want = census_oracle(64, 64, 4, 8, 512, 2, true) - census_oracle(64, 64, 4, 8, 512, 2, false);
  EXPECT_EQ(dense.parameter_count() - sparse.parameter_count(), want);
  EXPECT_EQ(sparse.block(0).layer_input_channels(3), 64u);
}

TEST(DenseLstm, ConfigValidation) {
  DenseLstmConfig c;
  c.classes = 1;
  EXPECT_THROW(DenseLstm{c}, ValidationError);
  c = DenseLstmConfig{};
  c.block_layers = {4};
  EXPECT_THROW(DenseLstm{c}, ValidationError);
  c = DenseLstmConfig{};
  c.dropout_rate = 1.0;
  EXPECT_THROW(DenseLstm{c}, ValidationError);
  EXPECT_THROW(make_model({{"kind", "denselstm"}, {"grwoth", 3}}), ValidationError);
  EXPECT_THROW(make_model({{"kind", "cnn"}}), ValidationError);
}

TEST(DenseLstm, ConfigJsonRoundTrip) {
  DenseLstmConfig c = tiny(false, 9);
  c.classes = 3;
  const auto m = make_model(c.to_json());
  EXPECT_EQ(m->config_json(), c.to_json());
  EXPECT_EQ(m->parameter_count(), DenseLstm(c).parameter_count());
}

TEST(DenseLstm, OutputShapes) {
  DenseLstm m(DenseLstmConfig{});
  EXPECT_EQ(m.logits(random_batch(16, 1)).shape(), (Shape{16, 2}));
  DenseLstmConfig c = tiny();
  c.classes = 3;
  EXPECT_EQ(DenseLstm(c).logits(random_batch(1, 2)).shape(), (Shape{1, 3}));
  EXPECT_THROW(m.logits(Tensor({2, 22})), DimensionError);
}

TEST(DenseLstm, InferenceDeterministicAndPerSample) {
  DenseLstm m(tiny());
  const Tensor x = random_batch(8, 4);
  EXPECT_TRUE(bit_equal(m.logits(x), m.logits(x)));
  const Tensor y = m.logits(x);
  for (std::size_t i = 0; i < 8; ++i) {
    Tensor row({1, kFeatureLength});
    for (std::size_t j = 0; j < kFeatureLength; ++j) row.at(0, j) = x.at(i, j);
    const Tensor yi = m.logits(row);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(yi.at(0, c), y.at(i, c), 1e-12);
  }
  // Duplicating a row duplicates its logits.
  Tensor d({2, kFeatureLength});
  for (std::size_t j = 0; j < kFeatureLength; ++j) d.at(0, j) = d.at(1, j) = x.at(3, j);
  const Tensor yd = m.logits(d);
  EXPECT_NEAR(yd.at(0, 0), yd.at(1, 0), 1e-12);
  EXPECT_NEAR(yd.at(0, 1), yd.at(1, 1), 1e-12);
}

TEST(DenseLstm, TrainingPassMatchesInferenceWithoutDropout) {
  DenseLstm m(tiny());
  const Tensor x = random_batch(5, 6);
  Prng rng(1);
  const Tensor a = m.forward_train(x, rng, false);
  const Tensor b = m.logits(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
}

TEST(DenseLstm, GradientCheckTinyAllCoordinates) {
  for (bool dense : {true, false}) {
    DenseLstm m(tiny(dense, 5));
    const auto report = check_model(m, random_batch(2, 7), {0, 1});
    EXPECT_TRUE(report.passed) << "dense=" << dense << " max rel " << report.max_relative_error;
    for (const auto& p : report.params) EXPECT_LT(p.relative_error, 1e-4) << p.name;
  }
}

TEST(Baselines, GradientCheck) {
  for (const char* kind : {"dnn", "rnn", "lstm"}) {
    BaselineConfig c = BaselineConfig::defaults(kind, 2, 4);
    c.hidden = std::string(kind) == "dnn" ? std::vector<std::size_t>{6, 5} : std::vector<std::size_t>{5};
    auto m = make_model(c.to_json());
    const auto report = check_model(*m, random_batch(3, 8), {1, 0, 1});
    EXPECT_TRUE(report.passed) << kind << " max rel " << report.max_relative_error;
  }
}

TEST(Baselines, ShapesAndContract) {
  for (const char* kind : {"dnn", "rnn", "lstm"}) {
    auto m = build_baseline(kind);
    EXPECT_EQ(m->kind(), kind);
    EXPECT_EQ(m->logits(random_batch(1, 1)).shape(), (Shape{1, 2}));
    EXPECT_EQ(m->logits(random_batch(16, 1)).shape(), (Shape{16, 2}));
  }
  EXPECT_THROW(build_baseline("svm"), ValidationError);
  // dnn 23->64->64->2
  EXPECT_EQ(build_baseline("dnn")->parameter_count(), (23u * 64 + 64) + (64u * 64 + 64) + (64u * 2 + 2));
  EXPECT_EQ(build_baseline("rnn")->parameter_count(), (128u + 128 * 128 + 128) + (128u * 2 + 2));
  EXPECT_EQ(build_baseline("lstm")->parameter_count(), lstm_params(1, 128) + 128 * 2 + 2);
}

TEST(Baselines, RnnZeroWeightsGiveZeroState) {
  RnnModel m(BaselineConfig::defaults("rnn"));
  for (Parameter* p : m.parameters()) p->value.fill(0.0);
  const Tensor h = m.final_hidden(random_batch(4, 2));
  for (double v : h.data()) EXPECT_EQ(v, 0.0);
}

TEST(Predict, ArgmaxWithTieToNormal) {
  const std::vector<double> a{0.9, 0.1}, b{0.5, 0.5}, c{0.2, 0.8};
  EXPECT_EQ(label_from_probabilities(a), Label::normal);
  EXPECT_EQ(label_from_probabilities(b), Label::normal);
  EXPECT_EQ(label_from_probabilities(c), Label::suspected);

  DnnModel m(BaselineConfig::defaults("dnn"));
  for (Parameter* p : m.parameters()) p->value.fill(0.0);
  FeatureVector fv;
  fv.set_bin(DurationBin::normal);
  const auto pred = predict(m, fv);
  EXPECT_EQ(pred.probabilities, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(pred.label, Label::normal);
}

TEST(Predict, InterleavedThreadsMatchSequential) {
  DenseLstm m(tiny());
  const Dataset ds = balanced(20, 3);
  const auto expect = predict(m, ds);
  std::vector<std::vector<Prediction>> got(4);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < got.size(); ++t) {
    threads.emplace_back([&, t] {
      for (const auto& s : ds.samples) got[t].push_back(predict(m, s.features));
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& g : got) {
    ASSERT_EQ(g.size(), expect.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_EQ(g[i].label, expect[i].label);
      EXPECT_NEAR(g[i].probabilities[1], expect[i].probabilities[1], 1e-12);
    }
  }
}

TEST(Loss, PerfectPredictionAndPermutationInvariance) {
  const Tensor logits = Tensor::matrix({{60, -60}, {-60, 60}});
  const std::vector<std::size_t> cls{0, 1};
  EXPECT_LT(cross_entropy(logits, one_hot(cls, 2)).loss / 2.0, 1e-9);

  DenseLstm m(tiny());
  const Tensor x = random_batch(6, 9);
  const std::vector<std::size_t> labels{0, 1, 1, 0, 1, 0};
  const double a = cross_entropy(m.logits(x), one_hot(labels, 2)).loss / 6.0;
  const std::vector<std::size_t> perm{5, 3, 1, 0, 4, 2};
  Tensor xp({6, kFeatureLength});
  std::vector<std::size_t> lp(6);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < kFeatureLength; ++j) xp.at(i, j) = x.at(perm[i], j);
    lp[i] = labels[perm[i]];
  }
  EXPECT_NEAR(cross_entropy(m.logits(xp), one_hot(lp, 2)).loss / 6.0, a, 1e-12);
}

TEST(Train, EmptySetIsError) {
  Trainer t(std::make_unique<DenseLstm>(tiny()), TrainConfig{});
  const Dataset empty{"e", Provenance::synthetic, {}};
  EXPECT_THROW(t.fit(empty), ValidationError);
}

TEST(Train, HistoryLengthAndDescent) {
  const Dataset ds = balanced(24, 5);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 30;
  cfg.seed = 2;
  Trainer t(std::make_unique<DenseLstm>(tiny()), cfg);
  const auto& h = t.fit(ds, &ds);
  ASSERT_EQ(h.size(), 30u);
  EXPECT_LT(h.back().mean_loss, h.front().mean_loss);
  EXPECT_TRUE(h.back().val_accuracy.has_value());
  ASSERT_TRUE(t.state().best_val_accuracy.has_value());
  EXPECT_EQ(t.state().best_values.size(), t.model().parameters().size());
}

TEST(Train, FixedSeedRunsAreBitIdentical) {
  const Dataset ds = balanced(10, 6);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 5;
  cfg.seed = 11;
  const DenseLstm init(tiny());
  const auto a = train(init, ds, nullptr, cfg);
  const auto b = train(init, ds, nullptr, cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i], b.history[i]);
  EXPECT_TRUE(bit_equal(a.model->logits(features_tensor(ds)), b.model->logits(features_tensor(ds))));
}

TEST(Train, OverfitSixteenSamplesAllModels) {
  const Dataset ds = balanced(8, 7);
  ASSERT_EQ(ds.size(), 16u);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.target_train_accuracy = 1.0;
  std::vector<std::unique_ptr<Model>> models;
  models.push_back(std::make_unique<DenseLstm>(tiny()));
  for (const char* k : {"dnn", "rnn", "lstm"}) models.push_back(build_baseline(k));
  for (const auto& m : models) {
    const auto r = train(*m, ds, nullptr, cfg);
    EXPECT_EQ(r.history.back().train_accuracy, 1.0) << m->kind();
    EXPECT_LE(r.history.size(), 250u);
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto p = temp_path("roundtrip.ptbm");
  for (const auto& cfg : {tiny().to_json(), BaselineConfig::defaults("rnn", 2, 3).to_json()}) {
    auto m = make_model(cfg);
    save_checkpoint(p.string(), *m);
    const auto ck = load_checkpoint(p.string());
    const Tensor x = random_batch(7, 2);
    EXPECT_TRUE(bit_equal(ck.model->logits(x), m->logits(x)));
    EXPECT_FALSE(ck.state.has_value());
  }
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST(Checkpoint, DistinctLoadErrors) {
  const auto p = temp_path("errors.ptbm");
  DenseLstm m(tiny());
  save_checkpoint(p.string(), m);
  const std::string good = read_bytes(p);

  auto expect_kind = [&](const std::string& bytes, CheckpointError::Kind kind) {
    write_bytes(p, bytes);
    try {
      load_checkpoint(p.string());
      ADD_FAILURE() << "no error";
    } catch (const CheckpointError& e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  };
  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  expect_kind(bad, CheckpointError::Kind::bad_magic);
  bad = good;
  bad[4] = 0x02;
  expect_kind(bad, CheckpointError::Kind::bad_version);
  expect_kind(good.substr(0, good.size() - 8), CheckpointError::Kind::truncated);
  expect_kind(good.substr(0, 20), CheckpointError::Kind::truncated);

  // Same tensor table, different architecture in the config.
  std::uint32_t hlen = 0;
  for (int i = 0; i < 4; ++i) hlen |= static_cast<std::uint32_t>(static_cast<unsigned char>(good[5 + i])) << (8 * i);
  auto header = nlohmann::json::parse(good.substr(9, hlen));
  header["config"]["growth"] = 5;
  const std::string hs = header.dump();
  std::string rebuilt = good.substr(0, 5);
  for (int i = 0; i < 4; ++i) rebuilt.push_back(static_cast<char>((hs.size() >> (8 * i)) & 0xFF));
  rebuilt += hs + good.substr(9 + hlen);
  expect_kind(rebuilt, CheckpointError::Kind::shape_mismatch);

  EXPECT_THROW(load_checkpoint("/nonexistent/x.ptbm"), CheckpointError);
}

TEST(Checkpoint, ResumeEqualsUninterrupted) {
  const Dataset ds = balanced(10, 8);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 6;
  cfg.seed = 5;
  Trainer full(std::make_unique<DenseLstm>(tiny()), cfg);
  full.fit(ds, &ds);

  TrainConfig half = cfg;
  half.epochs = 3;
  Trainer first(std::make_unique<DenseLstm>(tiny()), half);
  first.fit(ds, &ds);
  const auto p = temp_path("resume.ptbm");
  save_checkpoint(p.string(), first);

  auto ck = load_checkpoint(p.string());
  ASSERT_TRUE(ck.state.has_value());
  Trainer resumed = ck.resume();
  resumed.config().epochs = 6;
  resumed.fit(ds, &ds);

  ASSERT_EQ(resumed.history().size(), full.history().size());
  for (std::size_t i = 0; i < full.history().size(); ++i) EXPECT_EQ(resumed.history()[i], full.history()[i]) << i;
  EXPECT_EQ(resumed.history().back().mean_loss, full.history().back().mean_loss);
  EXPECT_EQ(resumed.state().best_epoch, full.state().best_epoch);
  const Tensor x = features_tensor(ds);
  EXPECT_TRUE(bit_equal(resumed.model().logits(x), full.model().logits(x)));
}
