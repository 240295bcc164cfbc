#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "echeat/cli/config.hpp"
#include "echeat/echeat.hpp"

using namespace echeat;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string need(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
  return value;
}

CliConfig load_config(const std::string& path) { return path.empty() ? CliConfig{} : CliConfig::load(path); }

AssessmentManifest load_manifest(const CliConfig& cfg, const std::string& flag) {
  return AssessmentManifest::load(need(cfg.path_or("manifest", flag), "--manifest"));
}

Dataset load_nonempty(const std::string& path, const AssessmentManifest& m, const EncoderConfig& enc) {
  Dataset ds = load_csv(path, m, enc);
  if (ds.empty()) throw LoadError("'" + path + "' contains no records");
  ds.name = fs::path(path).stem().string();
  return ds;
}

std::unique_ptr<Model> load_model(const std::string& path) { return load_checkpoint(path).model; }

void write_file(const std::string& path, const std::string& text) { detail::write_text_file(path, text); }

void print_epoch(const std::string& prefix, const EpochStats& e) {
  std::cerr << prefix << "epoch " << e.epoch << " loss " << e.mean_loss << " train_acc " << e.train_accuracy;
  if (e.val_accuracy) std::cerr << " val_acc " << *e.val_accuracy;
  std::cerr << '\n';
}

std::map<IpAddress, Label> read_labels(const std::string& path) {
  std::map<IpAddress, Label> out;
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open labels '" + path + "'");
  if (fs::path(path).extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("labels '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw LoadError("labels '" + path + "' must map IP to label");
    for (const auto& [k, v] : j.items()) out[IpAddress::parse(k)] = parse_label(v.get<std::string>());
    return out;
  }
  std::string line;
  std::getline(in, line);
  if (detail::split_csv_line(line) != std::vector<std::string>{"ip", "label"}) {
    throw LoadError(path, 1, "header", "expected columns ip,label");
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 2) throw LoadError(path, row, "ip", "expected 2 fields");
    out[IpAddress::parse(f[0])] = parse_label(f[1]);
  }
  return out;
}

// ----------------------------------------------------------------- commands

struct EncodeOpts {
  std::string data, manifest, out, config;
};

int cmd_encode(const EncodeOpts& o) {
  const CliConfig cfg = load_config(o.config);
  const Dataset ds = load_nonempty(need(cfg.path_or("data", o.data), "--data"), load_manifest(cfg, o.manifest), cfg.encoder);
  write_features_csv(ds, o.out);
  std::cout << nlohmann::json{{"records", ds.size()}, {"normal", ds.count(Label::normal)},
                              {"suspected", ds.count(Label::suspected)}}
                   .dump()
            << '\n';
  return 0;
}

struct SynthOpts {
  std::size_t n = 0;
  double prior = 0.5;
  std::uint64_t seed = 0;
  std::string out, manifest, config;
};

int cmd_synth(const SynthOpts& o) {
  const CliConfig cfg = load_config(o.config);
  const std::string mpath = cfg.path_or("manifest", o.manifest);
  SynthSpec spec{o.n, o.prior, o.seed, mpath.empty() ? AssessmentManifest::uniform() : AssessmentManifest::load(mpath)};
  const Dataset ds = generate_synthetic(spec, cfg.encoder);
  write_csv(ds, o.out);
  std::cout << nlohmann::json{{"records", ds.size()}, {"normal", ds.count(Label::normal)},
                              {"suspected", ds.count(Label::suspected)}}
                   .dump()
            << '\n';
  return 0;
}

struct TrainOpts {
  std::string data, manifest, config, out_model, kind, resume;
  std::uint64_t seed = 0;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  double val_fraction = 0.0;
  bool augment = false;
};

int cmd_train(const TrainOpts& o) {
  CliConfig cfg = load_config(o.config);
  const std::string out = need(cfg.path_or("out_model", o.out_model), "--out-model");
  const Dataset ds = load_nonempty(need(cfg.path_or("data", o.data), "--data"), load_manifest(cfg, o.manifest), cfg.encoder);

  TrainConfig tc = cfg.train;
  tc.seed = o.seed;
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.lr) tc.lr = *o.lr;
  tc.validate();

  Dataset train_ds = ds;
  std::optional<Dataset> val;
  if (o.val_fraction > 0.0) {
    auto sp = split(ds, {1.0 - o.val_fraction, o.seed, true});
    train_ds = std::move(sp.train);
    val = std::move(sp.validation);
  }
  if (o.augment) train_ds = augment_minority(train_ds, o.seed, cfg.encoder);

  std::unique_ptr<Trainer> trainer;
  if (!o.resume.empty()) {
    Checkpoint ck = load_checkpoint(o.resume);
    if (!ck.state || !ck.train_config) throw ValidationError("checkpoint '" + o.resume + "' cannot be resumed");
    TrainConfig rc = *ck.train_config;
    if (o.epochs) rc.epochs = *o.epochs;
    trainer = std::make_unique<Trainer>(std::move(ck.model), rc, *ck.state);
  } else {
    nlohmann::json mc = cfg.model;
    if (!o.kind.empty()) {
      if (mc.contains("kind") && mc["kind"] != o.kind) mc = nlohmann::json::object();
      mc["kind"] = o.kind;
    }
    mc["seed"] = o.seed;
    trainer = std::make_unique<Trainer>(make_model(mc), tc);
  }
  std::cerr << "training " << trainer->model().kind() << " (" << trainer->model().parameter_count()
            << " parameters) on " << train_ds.size() << " samples\n";
  trainer->fit(train_ds, val ? &*val : nullptr, [](const EpochStats& e) { print_epoch("", e); });
  if (val) trainer->restore_best();
  save_checkpoint(out, *trainer);

  const auto& h = trainer->history();
  nlohmann::json summary{{"model", trainer->model().kind()}, {"epochs", h.size()}, {"checkpoint", out}};
  if (!h.empty()) {
    summary["final_loss"] = h.back().mean_loss;
    summary["train_accuracy"] = h.back().train_accuracy;
  }
  if (val && trainer->state().best_val_accuracy) summary["best_val_accuracy"] = *trainer->state().best_val_accuracy;
  std::cout << summary.dump() << '\n';
  return 0;
}

struct EvalOpts {
  std::string model, manifest, report, json, roc_svg, config;
  std::vector<std::string> tests;
};

int cmd_eval(const EvalOpts& o) {
  const CliConfig cfg = load_config(o.config);
  const auto manifest = load_manifest(cfg, o.manifest);
  const auto model = load_model(need(cfg.path_or("model", o.model), "--model"));
  std::vector<Dataset> tests;
  for (const auto& t : o.tests) tests.push_back(load_nonempty(t, manifest, cfg.encoder));
  MetricsReport rep;
  rep.models = {model->kind()};
  for (const auto& t : tests) rep.test_sets.push_back(t.name);
  rep.seeds = {0};
  rep.runs.push_back(evaluate(*model, tests, model->kind(), 0));
  const std::string report = cfg.path_or("report", o.report);
  if (!report.empty()) write_file(report, report_csv(rep));
  if (!o.json.empty()) write_file(o.json, to_json(rep).dump(2) + "\n");
  if (!o.roc_svg.empty()) write_file(o.roc_svg, roc_svg(report_curves(rep)));
  std::cout << report_table_csv(rep);
  return 0;
}

struct CompareOpts {
  std::string models = "dnn,rnn,lstm,denselstm";
  std::string train, manifest, report, table, json, roc_svg, config;
  std::vector<std::string> tests;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  bool augment = false;
};

int cmd_compare(const CompareOpts& o) {
  const CliConfig cfg = load_config(o.config);
  const auto manifest = load_manifest(cfg, o.manifest);
  Dataset train_ds = load_nonempty(need(cfg.path_or("data", o.train), "--train"), manifest, cfg.encoder);
  if (o.augment) train_ds = augment_minority(train_ds, o.seeds.front(), cfg.encoder);
  std::vector<Dataset> tests;
  for (const auto& t : o.tests) tests.push_back(load_nonempty(t, manifest, cfg.encoder));

  std::vector<nlohmann::json> configs;
  std::stringstream names(o.models);
  for (std::string kind; std::getline(names, kind, ',');) {
    if (std::find(model_kinds().begin(), model_kinds().end(), kind) == model_kinds().end()) {
      throw UsageError("unknown model '" + kind + "'");
    }
    nlohmann::json c = cfg.model.value("kind", std::string("denselstm")) == kind && !cfg.model.empty()
                           ? cfg.model
                           : model_config_for(kind, 0);
    c["kind"] = kind;
    configs.push_back(c);
  }
  TrainConfig tc = cfg.train;
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.lr) tc.lr = *o.lr;
  tc.validate();

  const auto rep = compare_models(configs, train_ds, tests, tc, o.seeds, nullptr, [](const CompareProgress& p) {
    print_epoch(p.model + " seed " + std::to_string(p.seed) + " ", p.epoch);
  });
  const std::string report = cfg.path_or("report", o.report);
  if (!report.empty()) write_file(report, report_csv(rep));
  if (!o.table.empty()) write_file(o.table, report_table_csv(rep));
  if (!o.json.empty()) write_file(o.json, to_json(rep).dump(2) + "\n");
  if (!o.roc_svg.empty()) write_file(o.roc_svg, roc_svg(report_curves(rep)));
  std::cout << report_table_csv(rep);
  return 0;
}

struct SimulateOpts {
  std::string data, model, bank, alerts, store, manifest, config;
  std::uint64_t seed = 0;
  std::size_t sets = 4;
};

int cmd_simulate(const SimulateOpts& o) {
  const CliConfig cfg = load_config(o.config);
  const auto manifest = load_manifest(cfg, o.manifest);
  const Dataset ds = load_nonempty(need(cfg.path_or("data", o.data), "--data"), manifest, cfg.encoder);
  const auto model = load_model(need(cfg.path_or("model", o.model), "--model"));
  const QuestionSetPool pool(QuestionBank::load(need(cfg.path_or("bank", o.bank), "--bank")), o.sets, o.seed);
  const auto r = replay(ds, manifest, *model, pool, o.seed, cfg.encoder);

  std::ostringstream jsonl;
  write_alerts_jsonl(jsonl, r.alerts);
  write_file(need(cfg.path_or("alerts", o.alerts), "--alerts"), jsonl.str());
  if (!o.store.empty()) write_file(o.store, r.store.dump(2) + "\n");

  std::size_t ip_alerts = 0, behavior = 0;
  for (const auto& a : r.alerts) (a.trigger == AlertTrigger::ip_repeat ? ip_alerts : behavior) += 1;
  std::cout << nlohmann::json{{"sessions", r.decisions.size()},
                              {"ip_alerts", ip_alerts},
                              {"behavior_alerts", behavior},
                              {"registered_ips", r.store.size()}}
                   .dump()
            << '\n';
  return 0;
}

struct IpscanOpts {
  std::string store, labels, manifest, out_svg, out_json, config;
};

int cmd_ipscan(const IpscanOpts& o) {
  const CliConfig cfg = load_config(o.config);
  std::vector<IpAddress> ips;
  std::map<IpAddress, Label> labels;
  if (fs::path(o.store).extension() == ".csv") {
    const Dataset ds = load_nonempty(o.store, load_manifest(cfg, o.manifest), cfg.encoder);
    for (const auto& s : ds.samples) {
      ips.push_back(s.raw->ip);
      if (s.label == Label::suspected || !labels.count(s.raw->ip)) labels[s.raw->ip] = s.label;
    }
  } else {
    std::ifstream in(o.store);
    if (!in) throw LoadError("cannot open store '" + o.store + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("store '" + o.store + "': " + e.what());
    }
    for (const auto& [ip, e] : IpStore::from_json(j).snapshot()) {
      ips.push_back(ip);
      if (e.flag_reason == FlagReason::behavior_suspected) labels[ip] = Label::suspected;
    }
  }
  if (!o.labels.empty()) {
    for (const auto& [ip, l] : read_labels(o.labels)) labels[ip] = l;
  }
  const auto pts = project_ips(ips, labels);
  if (pts.empty()) throw ValidationError("no IP addresses in '" + o.store + "'");
  write_file(o.out_svg, pca_svg(pts));
  if (!o.out_json.empty()) write_file(o.out_json, to_json(pts).dump(2) + "\n");
  std::cout << "ip,x,y,label\n";
  for (const auto& p : pts) {
    std::cout << p.ip.str() << ',' << detail::fmt_num(p.x, 10) << ',' << detail::fmt_num(p.y, 10) << ','
              << to_string(p.label) << '\n';
  }
  return 0;
}

struct PlotOpts {
  bool roc = false, pca = false;
  std::string in, out;
};

int cmd_plot(const PlotOpts& o) {
  if (o.roc == o.pca) throw UsageError("exactly one of --roc and --pca is required");
  std::ifstream in(o.in);
  if (!in) throw LoadError("cannot open '" + o.in + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("'" + o.in + "': " + e.what());
  }
  if (o.roc) {
    write_file(o.out, roc_svg(report_curves(report_from_json(j))));
  } else {
    write_file(o.out, pca_svg(points_from_json(j)));
  }
  std::cout << nlohmann::json{{"out", o.out}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral e-cheating detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("echeat ") + kToolVersion + " checkpoint-format " +
                                        std::to_string(static_cast<int>(kCheckpointVersion)));
  std::function<int()> run;

  EncodeOpts enc;
  auto* c_enc = app.add_subcommand("encode", "Encode an assessment CSV into 23-dim feature vectors");
  c_enc->add_option("--data", enc.data, "Assessment CSV");
  c_enc->add_option("--manifest", enc.manifest, "Assessment manifest JSON");
  c_enc->add_option("--out", enc.out, "Feature CSV to write")->required();
  c_enc->add_option("--config", enc.config, "Config JSON");
  c_enc->callback([&] { run = [&] { return cmd_encode(enc); }; });

  SynthOpts syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  c_syn->add_option("--n", syn.n, "Number of records")->required();
  c_syn->add_option("--prior", syn.prior, "Fraction of suspected records")->check(CLI::Range(0.0, 1.0));
  c_syn->add_option("--seed", syn.seed, "Random seed")->required();
  c_syn->add_option("--out", syn.out, "CSV to write")->required();
  c_syn->add_option("--manifest", syn.manifest, "Assessment manifest JSON (default: 20 easy questions)");
  c_syn->add_option("--config", syn.config, "Config JSON");
  c_syn->callback([&] { run = [&] { return cmd_synth(syn); }; });

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  c_tr->add_option("--data", tr.data, "Training CSV");
  c_tr->add_option("--manifest", tr.manifest, "Assessment manifest JSON");
  c_tr->add_option("--config", tr.config, "Config JSON");
  c_tr->add_option("--out-model", tr.out_model, "Checkpoint to write");
  c_tr->add_option("--seed", tr.seed, "Random seed")->required();
  c_tr->add_option("--model", tr.kind, "Model kind")->check(CLI::IsMember(model_kinds()));
  c_tr->add_option("--epochs", tr.epochs, "Epochs (overrides config)");
  c_tr->add_option("--lr", tr.lr, "Learning rate (overrides config)");
  c_tr->add_option("--val-fraction", tr.val_fraction, "Hold out a stratified validation split")
      ->check(CLI::Range(0.0, 0.9));
  c_tr->add_flag("--augment", tr.augment, "Oversample the minority class");
  c_tr->add_option("--resume", tr.resume, "Continue from a checkpoint");
  c_tr->callback([&] { run = [&] { return cmd_train(tr); }; });

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a checkpoint on test sets");
  c_ev->add_option("--model", ev.model, "Checkpoint");
  c_ev->add_option("--test", ev.tests, "Test CSV (repeatable)")->required();
  c_ev->add_option("--manifest", ev.manifest, "Assessment manifest JSON");
  c_ev->add_option("--report", ev.report, "Report CSV to write");
  c_ev->add_option("--json", ev.json, "Report JSON to write");
  c_ev->add_option("--roc-svg", ev.roc_svg, "ROC plot to write");
  c_ev->add_option("--config", ev.config, "Config JSON");
  c_ev->callback([&] { run = [&] { return cmd_eval(ev); }; });

  CompareOpts cmp;
  auto* c_cmp = app.add_subcommand("compare", "Train and evaluate several models per seed");
  c_cmp->add_option("--models", cmp.models, "Comma-separated model kinds");
  c_cmp->add_option("--train", cmp.train, "Training CSV");
  c_cmp->add_option("--tests", cmp.tests, "Test CSVs")->required();
  c_cmp->add_option("--manifest", cmp.manifest, "Assessment manifest JSON");
  c_cmp->add_option("--seed", cmp.seeds, "Seeds, comma-separated")->required()->delimiter(',');
  c_cmp->add_option("--report", cmp.report, "Long-format report CSV");
  c_cmp->add_option("--table", cmp.table, "Model-by-test-set accuracy table CSV");
  c_cmp->add_option("--json", cmp.json, "Report JSON");
  c_cmp->add_option("--roc-svg", cmp.roc_svg, "ROC plot");
  c_cmp->add_option("--epochs", cmp.epochs, "Epochs (overrides config)");
  c_cmp->add_option("--lr", cmp.lr, "Learning rate (overrides config)");
  c_cmp->add_flag("--augment", cmp.augment, "Oversample the minority class");
  c_cmp->add_option("--config", cmp.config, "Config JSON");
  c_cmp->callback([&] { run = [&] { return cmd_compare(cmp); }; });

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Replay records as live sessions and write alerts");
  c_sim->add_option("--data", sim.data, "Assessment CSV");
  c_sim->add_option("--model", sim.model, "Checkpoint");
  c_sim->add_option("--bank", sim.bank, "Question bank JSON");
  c_sim->add_option("--alerts", sim.alerts, "Alert JSONL to write");
  c_sim->add_option("--store", sim.store, "IP store snapshot JSON to write");
  c_sim->add_option("--manifest", sim.manifest, "Assessment manifest JSON");
  c_sim->add_option("--sets", sim.sets, "Question sets in the pool");
  c_sim->add_option("--seed", sim.seed, "Random seed")->required();
  c_sim->add_option("--config", sim.config, "Config JSON");
  c_sim->callback([&] { run = [&] { return cmd_simulate(sim); }; });

  IpscanOpts ips;
  auto* c_ips = app.add_subcommand("ipscan", "Project IP addresses to 2-D and plot them");
  c_ips->add_option("--store", ips.store, "IP store snapshot JSON or assessment CSV")->required();
  c_ips->add_option("--labels", ips.labels, "Labels: CSV ip,label or JSON object");
  c_ips->add_option("--manifest", ips.manifest, "Assessment manifest JSON (CSV input)");
  c_ips->add_option("--out-svg", ips.out_svg, "Scatter plot to write")->required();
  c_ips->add_option("--out-json", ips.out_json, "Projected points JSON");
  c_ips->add_option("--config", ips.config, "Config JSON");
  c_ips->callback([&] { run = [&] { return cmd_ipscan(ips); }; });

  PlotOpts pl;
  auto* c_pl = app.add_subcommand("plot", "Render a report or PCA points as SVG");
  c_pl->add_flag("--roc", pl.roc, "Input is a report JSON");
  c_pl->add_flag("--pca", pl.pca, "Input is a PCA points JSON");
  c_pl->add_option("--in", pl.in, "Input JSON")->required();
  c_pl->add_option("--out", pl.out, "SVG to write")->required();
  c_pl->callback([&] { run = [&] { return cmd_plot(pl); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
