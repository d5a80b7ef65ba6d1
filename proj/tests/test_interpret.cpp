#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rrgat/errors.hpp"
#include "rrgat/interpret.hpp"
#include "rrgat/smiles.hpp"
#include "test_support.hpp"

using namespace rrgat;
using rrgat::testing::sample_molecule;

namespace {

ModelConfig small_config(int hidden = 8, std::uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.fingerprint_dim = hidden;
  cfg.radius = 3;
  cfg.readout_steps = 3;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  return cfg;
}

std::vector<PreparedSample> small_samples() {
  static const std::vector<std::pair<const char*, const char*>> pairs = {
      {"C=C(C)C(=O)OC", "C=C(C#N)C#N"},
      {"C=Cc1ccccc1", "C=CC(=O)OC"},
      {"C=C", "C=CC#N"},
  };
  TargetScaler scaler;
  scaler.center = {0.5, 0.5};
  scaler.scale = {1.0, 1.0};
  std::vector<PreparedSample> samples;
  int id = 0;
  for (const auto& [m1, m2] : pairs) {
    RawRecord rec;
    rec.row_id = ++id;
    rec.monomer1_smiles = m1;
    rec.monomer2_smiles = m2;
    rec.copolymer_smiles = generate_copolymer(parse_smiles(m1), parse_smiles(m2));
    rec.r1 = 0.4;
    rec.r2 = 1.3;
    samples.push_back(prepare_sample(rec, scaler));
  }
  return samples;
}

}  // namespace

TEST_CASE("similarity matrix basics") {
  const MimoGat model(small_config());
  const SimilarityMatrix m = atom_similarity(model, parse_smiles("C=C(C)C(=O)OC"));
  REQUIRE(m.n == 7);
  REQUIRE(m.labels[0] == "C0");
  REQUIRE(m.labels[4] == "O4");
  CHECK(same_graph(parse_smiles(m.molecule), parse_smiles("C=C(C)C(=O)OC")));
  for (int i = 0; i < m.n; ++i) {
    CHECK_FALSE(static_cast<bool>(m.degenerate[static_cast<std::size_t>(i)]));
    CHECK(m.values[static_cast<std::size_t>(i) * m.n + i] == 1.0);
    for (int j = 0; j < m.n; ++j) {
      const double v = m.values[static_cast<std::size_t>(i) * m.n + j];
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      CHECK(v == m.values[static_cast<std::size_t>(j) * m.n + i]);
    }
  }
}

TEST_CASE("symmetric atoms correlate perfectly") {
  const MimoGat model(small_config(10, 3));
  // the two carbons of ethylene have identical embeddings
  SimilarityMatrix m = atom_similarity(model, parse_smiles("C=C"));
  CHECK(m.values[1] == doctest::Approx(1.0).epsilon(1e-9));

  // ethane and benzene: all carbons pairwise one
  m = atom_similarity(model, parse_smiles("CC"));
  CHECK(m.values[1] == doctest::Approx(1.0).epsilon(1e-6));
  m = atom_similarity(model, parse_smiles("c1ccccc1"));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(m.values[static_cast<std::size_t>(i) * 6 + j] ==
            doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("single-atom molecule is flagged trivial") {
  const MimoGat model(small_config());
  const SimilarityMatrix m = atom_similarity(model, parse_smiles("C"));
  CHECK(m.trivial);
  REQUIRE(m.n == 1);
  CHECK(m.values[0] == 1.0);
}

TEST_CASE("degenerate rows are zeroed and flagged") {
  std::vector<double> emb = {1.0, 2.0, 3.0,   // healthy row
                             5.0, 5.0, 5.0};  // zero variance
  const SimilarityMatrix m = similarity_from_embeddings(emb, 2, 3, {"a", "b"});
  CHECK_FALSE(static_cast<bool>(m.degenerate[0]));
  CHECK(static_cast<bool>(m.degenerate[1]));
  CHECK(m.values[0] == 1.0);
  CHECK(m.values[1] == 0.0);
  CHECK(m.values[3] == 0.0);  // flagged diagonal stays 0
}

TEST_CASE("pearson similarity is invariant to positive per-row affine maps") {
  SplitRng rng(19);
  const int n = 5, h = 16;
  std::vector<double> emb(n * h);
  for (auto& v : emb) v = rng.uniform(-2, 2);
  const SimilarityMatrix base =
      similarity_from_embeddings(emb, n, h, {"a", "b", "c", "d", "e"});

  std::vector<double> mapped = emb;
  for (int i = 0; i < n; ++i) {
    const double scale = 0.1 + rng.uniform(0.0, 3.0);
    const double shift = rng.uniform(-5.0, 5.0);
    for (int k = 0; k < h; ++k) mapped[i * h + k] = scale * emb[i * h + k] + shift;
  }
  const SimilarityMatrix after =
      similarity_from_embeddings(mapped, n, h, {"a", "b", "c", "d", "e"});
  for (std::size_t i = 0; i < base.values.size(); ++i)
    CHECK(after.values[i] == doctest::Approx(base.values[i]).epsilon(1e-9));
}

TEST_CASE("attention dump structure") {
  const MimoGat model(small_config(6, 1));
  const MolGraph g = parse_smiles("C=Cc1ccncc1");
  const AttentionDump dump = dump_attention(model, g);
  const FeaturizedGraph fg = featurize_graph(g);

  REQUIRE(dump.trace.layers.size() == 3);
  REQUIRE(dump.trace.readout.size() == 3);
  for (const AttentionRecord& rec : dump.trace.layers) {
    CHECK(static_cast<int>(rec.weight.size()) == fg.n_edges + fg.n_atoms);
    std::map<int, double> sums;
    for (std::size_t i = 0; i < rec.weight.size(); ++i)
      sums[rec.target[i]] += rec.weight[i];
    for (auto [target, sum] : sums) CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  for (const AttentionRecord& rec : dump.trace.readout) {
    CHECK(rec.weight.size() == static_cast<std::size_t>(fg.n_atoms));
    double sum = 0.0;
    for (double w : rec.weight) sum += w;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }

  // alignment scores ride along with the weights and are consistent with
  // them: within a target's segment, a larger score means a larger weight
  for (const AttentionRecord& rec : dump.trace.layers) {
    REQUIRE(rec.score.size() == rec.weight.size());
    for (std::size_t i = 0; i < rec.weight.size(); ++i)
      for (std::size_t j = i + 1; j < rec.weight.size(); ++j)
        if (rec.target[i] == rec.target[j] && rec.score[i] > rec.score[j])
          CHECK(rec.weight[i] > rec.weight[j]);
  }

  // deterministic across repeated calls
  const AttentionDump again = dump_attention(model, g);
  for (std::size_t l = 0; l < dump.trace.layers.size(); ++l)
    for (std::size_t i = 0; i < dump.trace.layers[l].weight.size(); ++i)
      CHECK(dump.trace.layers[l].weight[i] == again.trace.layers[l].weight[i]);
}

TEST_CASE("ablating the radical placeholder changes nothing") {
  const MimoGat model(small_config(7, 5));
  const auto samples = small_samples();
  const auto delta = feature_ablation_importance(model, samples, 8);  // radical
  CHECK(delta[0] == 0.0);
  CHECK(delta[1] == 0.0);
}

TEST_CASE("ablating all groups equals the zero-feature baseline") {
  const MimoGat model(small_config(7, 6));
  const auto samples = small_samples();
  std::vector<int> all_groups;
  for (const auto& g : feature_groups()) all_groups.push_back(g.id);

  for (const PreparedSample& s : samples) {
    const auto zeroed = model.predict_transformed(ablate_groups(s.m1, all_groups),
                                                  ablate_groups(s.m2, all_groups),
                                                  ablate_groups(s.co, all_groups));
    FeaturizedGraph z1 = s.m1, z2 = s.m2, zc = s.co;
    std::fill(z1.atom_matrix.begin(), z1.atom_matrix.end(), 0.0);
    std::fill(z1.bond_matrix.begin(), z1.bond_matrix.end(), 0.0);
    std::fill(z2.atom_matrix.begin(), z2.atom_matrix.end(), 0.0);
    std::fill(z2.bond_matrix.begin(), z2.bond_matrix.end(), 0.0);
    std::fill(zc.atom_matrix.begin(), zc.atom_matrix.end(), 0.0);
    std::fill(zc.bond_matrix.begin(), zc.bond_matrix.end(), 0.0);
    const auto baseline = model.predict_transformed(z1, z2, zc);
    CHECK(zeroed[0] == doctest::Approx(baseline[0]).epsilon(1e-12));
    CHECK(zeroed[1] == doctest::Approx(baseline[1]).epsilon(1e-12));
  }
}

TEST_CASE("ablation report ranks deterministically and matches recomputation") {
  const MimoGat model(small_config(7, 7));
  const auto samples = small_samples();
  const auto report = feature_ablation_report(model, samples);
  REQUIRE(report.size() == 13);
  for (std::size_t i = 0; i < report.size(); ++i)
    CHECK(report[i].rank == static_cast<int>(i) + 1);
  for (std::size_t i = 1; i < report.size(); ++i) {
    const double prev = report[i - 1].mean_abs_delta_r1 + report[i - 1].mean_abs_delta_r2;
    const double cur = report[i].mean_abs_delta_r1 + report[i].mean_abs_delta_r2;
    CHECK(prev >= cur);
  }
  // oracle: recompute each group's deltas independently
  for (const AblationImportance& row : report) {
    const auto direct = feature_ablation_importance(model, samples, row.group_id);
    CHECK(row.mean_abs_delta_r1 == doctest::Approx(direct[0]).epsilon(1e-12));
    CHECK(row.mean_abs_delta_r2 == doctest::Approx(direct[1]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(feature_ablation_importance(model, samples, 13), data_error);
  CHECK_THROWS_AS(feature_ablation_importance(model, {}, 0), data_error);
}

TEST_CASE("csv exports") {
  rrgat::testing::TempDir dir("interpret");
  const MimoGat model(small_config(6, 2));
  const MolGraph g = parse_smiles("C=CC#N");

  const SimilarityMatrix m = atom_similarity(model, g);
  write_similarity_csv(dir.str("sim.csv"), m);
  std::ifstream sim(dir.str("sim.csv"));
  std::string header;
  std::getline(sim, header);
  CHECK(header == "atom,C0,C1,C2,N3");
  int rows = 0;
  std::string line;
  while (std::getline(sim, line)) {
    ++rows;
    // 6 decimal places on every value
    const auto comma = line.find(',');
    const auto dot = line.find('.', comma);
    REQUIRE(dot != std::string::npos);
    CHECK(line.find(',', dot) - dot == 7);
  }
  CHECK(rows == 4);

  const AttentionDump dump = dump_attention(model, g);
  write_attention_csv(dir.str("att.csv"), dump);
  std::ifstream att(dir.str("att.csv"));
  std::getline(att, header);
  CHECK(header == "layer,target,source,weight");
  int atom_lines = 0, readout_lines = 0;
  while (std::getline(att, line)) {
    if (line.rfind("atom", 0) == 0) ++atom_lines;
    if (line.rfind("readout", 0) == 0) ++readout_lines;
  }
  const FeaturizedGraph fg = featurize_graph(g);
  CHECK(atom_lines == 3 * (fg.n_edges + fg.n_atoms));
  CHECK(readout_lines == 3 * fg.n_atoms);

  const auto report = feature_ablation_report(model, small_samples());
  write_ablation_csv(dir.str("abl.csv"), report);
  std::ifstream abl(dir.str("abl.csv"));
  std::getline(abl, header);
  CHECK(header == "group,mean_abs_delta_r1,mean_abs_delta_r2,rank");
  rows = 0;
  while (std::getline(abl, line)) ++rows;
  CHECK(rows == 13);
}
