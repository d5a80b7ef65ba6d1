// Drives the installed binary end to end. The binary path arrives as the
// last command-line argument (wired up by CMake).
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rrgat/checkpoint.hpp"
#include "rrgat/model.hpp"
#include "rrgat/run_io.hpp"
#include "rrgat/smiles.hpp"
#include "test_support.hpp"

using namespace rrgat;

namespace {

std::string g_binary;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string base =
      std::filesystem::temp_directory_path().string() + "/rrgat_cli_" +
      std::to_string(::getpid()) + "_" + std::to_string(++counter);
  const std::string cmd =
      "'" + g_binary + "' " + args + " >" + base + ".out 2>" + base + ".err";
  const int rc = std::system(cmd.c_str());
  RunResult res;
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(base + ".out");
  res.err = slurp(base + ".err");
  std::filesystem::remove(base + ".out");
  std::filesystem::remove(base + ".err");
  return res;
}

std::string q(const std::string& s) {
  REQUIRE(s.find('\'') == std::string::npos);
  return "'" + s + "'";
}

void write_dataset_csv(const std::string& path) {
  std::ofstream os(path);
  os << "monomer1_smiles,monomer2_smiles,copolymer_smiles,r1,r2\n";
  for (const auto& row : rrgat::testing::gold_dataset())
    os << row.m1 << "," << row.m2 << "," << row.copolymer << "," << row.r1 << ","
       << row.r2 << "\n";
  const std::vector<std::array<const char*, 2>> extra = {
      {"C=C", "C=CC#N"},           {"C=Cc1ccccc1", "C=CC(=O)OC"},
      {"C=CC#N", "C=COC(C)=O"},    {"C=CC(=O)OCCCCCCCC", "C=Cc1ccccc1"},
      {"CC(C)(C)OC(=O)C=C", "C=C"},{"C=COC(C)=O", "C=CC(=O)OC"},
      {"C=C", "C=Cc1ccccc1"},      {"C=CC(=O)OC", "C=C(C#N)C#N"},
      {"C=C(C)C(=O)OC", "C=CC#N"}};
  double r = 0.11;
  for (const auto& [m1, m2] : extra) {
    os << m1 << "," << m2 << ",," << r << "," << 2.4 - r << "\n";
    r += 0.23;
  }
}

const std::string kTinyConfig =
    "--set fingerprint_dim=8 --set radius=2 --set readout_steps=2 "
    "--set epochs=3 --set batch_size=4 --set dropout=0.0";

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("no-such-command").code == 1);
  CHECK(run_cli("gen-copolymer --m1 C=C").code == 1);  // missing --m2
  CHECK(run_cli("--help").code == 0);
  const RunResult version = run_cli("--version");
  CHECK(version.code == 0);
  CHECK(version.out.find("rrgat") != std::string::npos);
}

TEST_CASE("gen-copolymer") {
  const RunResult res =
      run_cli("gen-copolymer --m1 " + q("C=C(C)C(=O)OC") + " --m2 " + q("C=C(C#N)C#N"));
  REQUIRE(res.code == 0);
  std::string smiles = res.out;
  while (!smiles.empty() && (smiles.back() == '\n' || smiles.back() == '\r'))
    smiles.pop_back();
  CHECK(same_graph(parse_smiles(smiles),
                   parse_smiles("CCC(C)(CC(C)(C#N)C#N)C(=O)OC")));

  const RunResult hexane = run_cli("gen-copolymer --m1 C=C --m2 C=C");
  REQUIRE(hexane.code == 0);
  std::string hexane_smiles = hexane.out;
  while (!hexane_smiles.empty() && hexane_smiles.back() == '\n') hexane_smiles.pop_back();
  CHECK(same_graph(parse_smiles(hexane_smiles), parse_smiles("CCCCCC")));

  const RunResult benzene = run_cli("gen-copolymer --m1 " + q("c1ccccc1") + " --m2 C=C");
  CHECK(benzene.code == 2);
  CHECK(benzene.err.find("non-vinyl monomer") != std::string::npos);

  CHECK(run_cli("gen-copolymer --m1 " + q("C1CC") + " --m2 C=C").code == 2);
}

TEST_CASE("full pipeline through the CLI") {
  rrgat::testing::TempDir dir("cli_pipeline");
  const std::string csv = dir.str("data.csv");
  write_dataset_csv(csv);

  // preprocess
  const std::string splits = dir.str("splits");
  RunResult res = run_cli("preprocess --in " + q(csv) + " --out " + q(splits) +
                          " --seed 7");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("accepted 14, rejected 2") != std::string::npos);
  const std::string rejections = slurp(splits + "/rejections.csv");
  CHECK(rejections.find("3,\"copolymer inconsistent with monomers (errata)\"") !=
        std::string::npos);
  CHECK(rejections.find("4,\"copolymer inconsistent with monomers (errata)\"") !=
        std::string::npos);
  CHECK(slurp(splits + "/skewness.csv").find("target,skew_before,skew_after") == 0);

  // same seed reproduces the split manifest byte for byte
  const std::string splits2 = dir.str("splits_again");
  REQUIRE(run_cli("preprocess --in " + q(csv) + " --out " + q(splits2) +
                  " --seed 7").code == 0);
  CHECK(slurp(splits + "/split_manifest.json") ==
        slurp(splits2 + "/split_manifest.json"));
  CHECK(file_digest_hex(splits + "/records.csv") ==
        file_digest_hex(splits2 + "/records.csv"));

  // train twice with the same manifest: byte-identical artifacts
  const std::string run1 = dir.str("run1"), run2 = dir.str("run2");
  res = run_cli("train --splits " + q(splits) + " --out " + q(run1) + " --seed 3 " +
                kTinyConfig);
  REQUIRE(res.code == 0);
  REQUIRE(run_cli("train --splits " + q(splits) + " --out " + q(run2) +
                  " --seed 3 " + kTinyConfig).code == 0);
  CHECK(slurp(run1 + "/checkpoint.bin") == slurp(run2 + "/checkpoint.bin"));
  CHECK(slurp(run1 + "/train_log.csv") == slurp(run2 + "/train_log.csv"));
  CHECK(slurp(run1 + "/manifest.json") == slurp(run2 + "/manifest.json"));
  CHECK(slurp(run1 + "/train_log.csv").find(
            "epoch,lr,train_loss,val_loss,val_rmse1,val_rmse2,val_r21,val_r22") == 0);

  // a different seed changes the checkpoint
  const std::string run3 = dir.str("run3");
  REQUIRE(run_cli("train --splits " + q(splits) + " --out " + q(run3) +
                  " --seed 4 " + kTinyConfig).code == 0);
  CHECK(slurp(run1 + "/checkpoint.bin") != slurp(run3 + "/checkpoint.bin"));

  // evaluate
  const std::string eval_dir = dir.str("eval");
  res = run_cli("evaluate --checkpoint " + q(run1 + "/checkpoint.bin") + " --splits " +
                q(splits) + " --out " + q(eval_dir) + " --split train");
  REQUIRE(res.code == 0);
  CHECK(slurp(eval_dir + "/parity_train.csv").find("row_id,task,actual,predicted") == 0);
  CHECK(slurp(eval_dir + "/metrics_train.json").find("transformed") != std::string::npos);
  CHECK(run_cli("evaluate --checkpoint " + q(run1 + "/checkpoint.bin") + " --splits " +
                q(splits) + " --out " + q(eval_dir) + " --split bogus").code == 2);

  // predict prints two non-negative reals
  res = run_cli("predict --m1 " + q("C=C(C)C(=O)OC") + " --m2 " + q("C=C(C#N)C#N") +
                " --checkpoint " + q(run1 + "/checkpoint.bin"));
  REQUIRE(res.code == 0);
  std::istringstream ss(res.out);
  double r1 = -1.0, r2 = -1.0;
  ss >> r1 >> r2;
  CHECK(r1 >= 0.0);
  CHECK(r2 >= 0.0);

  // inspect: all three exports
  res = run_cli("inspect --checkpoint " + q(run1 + "/checkpoint.bin") +
                " --similarity " + q("C=Cc1ccccc1") + " --out " + q(dir.str("sim.csv")));
  REQUIRE(res.code == 0);
  CHECK(slurp(dir.str("sim.csv")).find("atom,C0,C1") == 0);
  res = run_cli("inspect --checkpoint " + q(run1 + "/checkpoint.bin") +
                " --attention " + q("C=CC#N") + " --out " + q(dir.str("att.csv")));
  REQUIRE(res.code == 0);
  CHECK(slurp(dir.str("att.csv")).find("layer,target,source,weight") == 0);
  res = run_cli("inspect --checkpoint " + q(run1 + "/checkpoint.bin") +
                " --ablation --splits " + q(splits) + " --out " + q(dir.str("abl.csv")));
  REQUIRE(res.code == 0);
  CHECK(slurp(dir.str("abl.csv")).find("group,mean_abs_delta_r1") == 0);
  CHECK(run_cli("inspect --checkpoint " + q(run1 + "/checkpoint.bin") + " --out " +
                q(dir.str("none.csv"))).code == 2);
}

TEST_CASE("data errors exit with code 2") {
  rrgat::testing::TempDir dir("cli_errors");
  CHECK(run_cli("preprocess --in " + q(dir.str("missing.csv")) + " --out " +
                q(dir.str("out"))).code == 2);

  {
    std::ofstream os(dir.str("empty.csv"));
    os << "monomer1_smiles,monomer2_smiles,copolymer_smiles,r1,r2\n";
  }
  const RunResult res = run_cli("preprocess --in " + q(dir.str("empty.csv")) +
                                " --out " + q(dir.str("out")));
  CHECK(res.code == 2);
  CHECK(res.err.find("no records") != std::string::npos);

  // checkpoint without a scaler cannot serve predictions
  ModelConfig cfg;
  cfg.fingerprint_dim = 6;
  cfg.radius = 2;
  cfg.readout_steps = 2;
  cfg.dropout = 0.0;
  cfg.seed = 0;
  const MimoGat model(cfg);
  const std::string raw_ck = dir.str("raw.bin");
  save_checkpoint(raw_ck, std::string("{\"model\":") +
                              model_config_to_json(cfg) + "}",
                  model.params().items());
  const RunResult predict =
      run_cli("predict --m1 C=C --m2 C=C --checkpoint " + q(raw_ck));
  CHECK(predict.code == 2);
  CHECK(predict.err.find("scaler") != std::string::npos);
}

TEST_CASE("grad-check reports success") {
  const RunResult res = run_cli("grad-check --seed 0");
  REQUIRE(res.code == 0);
  CHECK(res.out.find("max rel err < 1e-4") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli [doctest args] <rrgat binary>\n");
    return 1;
  }
  g_binary = argv[argc - 1];
  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv);
  return ctx.run();
}
