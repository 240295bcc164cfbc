#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "echeat/cli/config.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = ECHEAT_CLI;
const std::string kData = ECHEAT_TEST_DATA;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "echeat_cli_test" / (info ? info->name() : "misc");
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Run cli(const std::string& args) {
  const fs::path dir = work_dir();
  const std::string out = (dir / "stdout.txt").string(), err = (dir / "stderr.txt").string();
  const std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Cli, VersionNamesCheckpointFormat) {
  const auto r = cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("checkpoint-format 1"), std::string::npos);
}

TEST(Cli, SynthIsByteIdentical) {
  ASSERT_EQ(cli("synth --n 200 --prior 0.3 --seed 7 --out d1.csv").code, 0);
  ASSERT_EQ(cli("synth --n 200 --prior 0.3 --seed 7 --out d2.csv").code, 0);
  const std::string a = slurp(work_dir() / "d1.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(work_dir() / "d2.csv"));
  ASSERT_EQ(cli("synth --n 200 --prior 0.3 --seed 8 --out d3.csv").code, 0);
  EXPECT_NE(a, slurp(work_dir() / "d3.csv"));
}

TEST(Cli, MissingSeedIsUsageError) {
  const auto r = cli("synth --n 10 --out x.csv");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("bogus").code, 2);
  EXPECT_EQ(cli("train --seed 1 --data x.csv --out-model m.ptbm").code, 2);  // no manifest
}

TEST(Cli, TrainOnEmptyCsvNamesFile) {
  ASSERT_EQ(cli("synth --n 5 --seed 1 --out full.csv").code, 0);
  std::ofstream(work_dir() / "empty_data.csv") << lines(slurp(work_dir() / "full.csv")).front() << '\n';
  const auto r = cli("train --data empty_data.csv --manifest " + kData + "/manifest_easy.json --seed 1 --out-model m.ptbm");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("empty_data.csv"), std::string::npos);
  EXPECT_FALSE(fs::exists(work_dir() / "m.ptbm"));

  std::ofstream(work_dir() / "zero.csv").close();
  const auto z = cli("train --data zero.csv --manifest " + kData + "/manifest_easy.json --seed 1 --out-model m.ptbm");
  EXPECT_EQ(z.code, 1);
  EXPECT_NE(z.err.find("zero.csv"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyRejected) {
  std::ofstream(work_dir() / "bad.json") << R"({"train": {"lr": 0.001, "momentum": 0.9}})";
  const auto r = cli("synth --n 5 --seed 1 --out s.csv --config bad.json");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("momentum"), std::string::npos);
  EXPECT_THROW(echeat::CliConfig::from_json({{"paths", {{"outdir", "x"}}}}), echeat::ValidationError);
  EXPECT_THROW(echeat::CliConfig::from_json({{"extra", 1}}), echeat::ValidationError);
  const auto ok = echeat::CliConfig::from_json(
      {{"model", {{"kind", "lstm"}}}, {"train", {{"epochs", 3}}}, {"encoder", {{"slow_factor", 2.0}}},
       {"paths", {{"data", "a.csv"}}}});
  EXPECT_EQ(ok.train.epochs, 3u);
  EXPECT_DOUBLE_EQ(ok.encoder.slow_factor, 2.0);
  EXPECT_EQ(ok.path_or("data", ""), "a.csv");
  EXPECT_EQ(ok.path_or("data", "b.csv"), "b.csv");
}

TEST(Cli, CompareEmitsTableShapedReport) {
  ASSERT_EQ(cli("synth --n 64 --prior 0.3 --seed 11 --out ctrain.csv").code, 0);
  ASSERT_EQ(cli("synth --n 20 --prior 0.3 --seed 12 --out test_a.csv").code, 0);
  ASSERT_EQ(cli("synth --n 20 --prior 0.3 --seed 13 --out test_b.csv").code, 0);
  const auto r = cli("compare --models dnn,rnn,lstm,denselstm --train ctrain.csv --tests test_a.csv test_b.csv --manifest " +
                     kData + "/manifest_easy.json --seed 1 --epochs 1 --lr 0.001 --report report.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = lines(r.out);
  ASSERT_EQ(table.size(), 5u);
  EXPECT_EQ(table[0], "model,test_a,test_b,overall");
  EXPECT_EQ(table[1].substr(0, 4), "dnn,");
  EXPECT_EQ(table[4].substr(0, 10), "denselstm,");
  for (std::size_t i = 1; i < table.size(); ++i) EXPECT_EQ(std::count(table[i].begin(), table[i].end(), ','), 3);
  const auto report = lines(slurp(work_dir() / "report.csv"));
  EXPECT_EQ(report[0], "testset,model,accuracy,auc");
  EXPECT_EQ(report.size(), 1u + 3 * 4);
  EXPECT_NE(r.err.find("epoch 1"), std::string::npos);
}

TEST(Cli, TrainEvalSimulateIpscanPipeline) {
  const std::string man = " --manifest " + kData + "/manifest_easy.json";
  ASSERT_EQ(cli("synth --n 80 --prior 0.4 --seed 21 --out ptrain.csv").code, 0);
  const auto t = cli("train --data ptrain.csv --seed 2 --model dnn --epochs 3 --lr 0.001 --out-model p.ptbm" + man);
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(nlohmann::json::parse(t.out).at("epochs"), 3);
  const auto e = cli("eval --model p.ptbm --test ptrain.csv --report e.csv --json e.json" + man);
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(lines(e.out)[0], "model,ptrain,overall");

  const auto s = cli("simulate --data " + kData + "/sample_records.csv --manifest " + kData +
                     "/sample_manifest.json --model p.ptbm --bank " + kData +
                     "/question_bank.json --alerts alerts.jsonl --store store.json --seed 4");
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(nlohmann::json::parse(s.out).at("ip_alerts"), 1);
  std::size_t ip_repeat = 0;
  for (const auto& l : lines(slurp(work_dir() / "alerts.jsonl"))) {
    const auto j = nlohmann::json::parse(l);
    if (j.at("trigger") == "ip_repeat") {
      ++ip_repeat;
      EXPECT_EQ(j.at("ip"), "211.243.246.3");
    }
  }
  EXPECT_EQ(ip_repeat, 1u);

  const auto ip = cli("ipscan --store store.json --out-svg ips.svg --out-json ips.json");
  ASSERT_EQ(ip.code, 0) << ip.err;
  EXPECT_EQ(lines(ip.out).size(), 7u);
  const std::string svg = slurp(work_dir() / "ips.svg");
  EXPECT_EQ(svg.substr(0, 5), "<?xml");
  EXPECT_EQ(cli("plot --pca --in ips.json --out replot.svg").code, 0);
  EXPECT_EQ(cli("plot --roc --in e.json --out roc.svg").code, 0);
  EXPECT_NE(slurp(work_dir() / "roc.svg").find("<polyline"), std::string::npos);
  EXPECT_EQ(cli("plot --roc --pca --in e.json --out x.svg").code, 2);
}
