#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>

#include "rrgat/errors.hpp"
#include "rrgat/pipeline.hpp"
#include "rrgat/run_io.hpp"
#include "rrgat/smiles.hpp"
#include "test_support.hpp"

using namespace rrgat;
using rrgat::testing::gold_dataset;

namespace {

std::vector<CsvRow> table_rows() {
  std::vector<CsvRow> rows;
  for (const auto& r : gold_dataset())
    rows.push_back({r.m1, r.m2, r.copolymer, std::to_string(r.r1), std::to_string(r.r2)});
  return rows;
}

int non_aromatic_cc_doubles(const MolGraph& g) {
  int n = 0;
  for (const BondEdge& b : g.bonds)
    if (b.order == BondOrder::kDouble && g.atoms[b.a].element == Element::kC &&
        g.atoms[b.b].element == Element::kC)
      ++n;
  return n;
}

}  // namespace

TEST_CASE("copolymer generation reproduces the consistent printed rows") {
  for (const auto& row : gold_dataset()) {
    const std::string generated =
        generate_copolymer(parse_smiles(row.m1), parse_smiles(row.m2));
    const bool matches = same_graph(parse_smiles(generated), parse_smiles(row.copolymer));
    CHECK(matches == row.consistent);
  }
}

TEST_CASE("copolymer generation by hand rule") {
  // two ethylenes chain into hexane under the methyl caps
  const std::string hexane =
      generate_copolymer(parse_smiles("C=C"), parse_smiles("C=C"));
  CHECK(same_graph(parse_smiles(hexane), parse_smiles("CCCCCC")));

  // generated output always re-parses and the consumed vinyls are gone
  for (const auto& row : gold_dataset()) {
    const MolGraph m1 = parse_smiles(row.m1);
    const MolGraph m2 = parse_smiles(row.m2);
    const MolGraph dimer = parse_smiles(generate_copolymer(m1, m2));
    const int before = non_aromatic_cc_doubles(m1) + non_aromatic_cc_doubles(m2);
    CHECK(non_aromatic_cc_doubles(dimer) == before - 2);
  }

  CHECK_THROWS_WITH_AS(
      generate_copolymer(parse_smiles("c1ccccc1"), parse_smiles("C=C")),
      "non-vinyl monomer (monomer 1)", data_error);
  CHECK_THROWS_AS(generate_copolymer(parse_smiles("C=C"), parse_smiles("CCO")),
                  data_error);
}

TEST_CASE("generation is deterministic") {
  const MolGraph m1 = parse_smiles("C=C(C)C(=O)OC");
  const MolGraph m2 = parse_smiles("C=C(C#N)C#N");
  CHECK(generate_copolymer(m1, m2) == generate_copolymer(m1, m2));
}

TEST_CASE("cleaning accepts the consistent rows and rejects the errata") {
  const CleanResult res = clean_rows(table_rows());
  REQUIRE(res.accepted.size() == 5);
  REQUIRE(res.rejected.size() == 2);
  CHECK(res.accepted[0].row_id == 1);
  CHECK(res.accepted[0].r1 == doctest::Approx(0.29));
  CHECK(res.accepted[0].r2 == doctest::Approx(2.32));
  CHECK(res.rejected[0].row_id == 3);
  CHECK(res.rejected[0].reason == "copolymer inconsistent with monomers (errata)");
  CHECK(res.rejected[1].row_id == 4);

  // accepted rows carry a parseable generated copolymer
  for (const RawRecord& r : res.accepted) CHECK_NOTHROW(parse_smiles(r.copolymer_smiles));

  // cleaning is idempotent: re-clean the survivors
  std::vector<CsvRow> again;
  for (const RawRecord& r : res.accepted)
    again.push_back({r.monomer1_smiles, r.monomer2_smiles, r.copolymer_smiles,
                     std::to_string(r.r1), std::to_string(r.r2)});
  const CleanResult res2 = clean_rows(again);
  CHECK(res2.accepted.size() == res.accepted.size());
  CHECK(res2.rejected.empty());
  for (std::size_t i = 0; i < res2.accepted.size(); ++i)
    CHECK(res2.accepted[i].copolymer_smiles == res.accepted[i].copolymer_smiles);
}

TEST_CASE("cleaning rejection reasons") {
  std::vector<CsvRow> rows = {
      {"C=C", "C=C", "", "", "1.0"},          // blank r1
      {"C=C", "C=C", "", "0.5", "abc"},       // malformed
      {"C=C", "C=C", "", "-0.5", "1.0"},      // negative
      {"C=C", "C=C", "", "inf", "1.0"},       // non-finite
      {"C1CC", "C=C", "", "0.5", "1.0"},      // unparsable monomer
      {"C=C", "C=C", "C1CC", "0.5", "1.0"},   // unparsable copolymer
      {"CCO", "C=C", "", "0.5", "1.0"},       // no vinyl
      {"C=C", "C=C", "", "0.5", "1.0"},       // fine
  };
  const CleanResult res = clean_rows(rows);
  REQUIRE(res.rejected.size() == 7);
  CHECK(res.rejected[0].reason == "missing target");
  CHECK(res.rejected[1].reason == "malformed target");
  CHECK(res.rejected[2].reason == "negative target");
  CHECK(res.rejected[3].reason == "non-finite target");
  CHECK(res.rejected[4].reason.find("unparsable structure (monomer 1)") == 0);
  CHECK(res.rejected[5].reason.find("unparsable structure (copolymer)") == 0);
  CHECK(res.rejected[6].reason == "non-vinyl monomer (monomer 1)");
  REQUIRE(res.accepted.size() == 1);
  CHECK(res.accepted[0].row_id == 8);
}

TEST_CASE("csv ingestion") {
  rrgat::testing::TempDir dir("ingest");
  {
    std::ofstream os(dir.str("data.csv"));
    os << "monomer1_smiles,monomer2_smiles,copolymer_smiles,r1,r2\n";
    os << "C=C(C)C(=O)OC,C=C(C#N)C#N,CCC(C)(CC(C)(C#N)C#N)C(=O)OC,0.057,0.03\n";
    os << "C=C,C=C,,0.5,\n";
    os << "C1CC,C=C,,0.5,1.0\n";
  }
  const CleanResult res = ingest_csv(dir.str("data.csv"));
  REQUIRE(res.accepted.size() == 1);
  CHECK(res.accepted[0].r1 == doctest::Approx(0.057));
  REQUIRE(res.rejected.size() == 2);

  CHECK_THROWS_AS(ingest_csv(dir.str("missing.csv")), data_error);
  {
    std::ofstream os(dir.str("badheader.csv"));
    os << "a,b,c,d,e\nC=C,C=C,,0.5,1.0\n";
  }
  CHECK_THROWS_AS(ingest_csv(dir.str("badheader.csv")), data_error);
  {
    std::ofstream os(dir.str("empty.csv"));
    os << "monomer1_smiles,monomer2_smiles,copolymer_smiles,r1,r2\n";
  }
  CHECK_THROWS_AS(ingest_csv(dir.str("empty.csv")), data_error);
}

TEST_CASE("square root transform") {
  CHECK(sqrt_transform(0.29) == doctest::Approx(0.53851648071).epsilon(1e-10));
  CHECK(sqrt_transform(0.0) == 0.0);
  CHECK_THROWS_AS(sqrt_transform(-0.1), data_error);
  CHECK(sqrt_invert(-3.0) == 0.0);

  for (const auto& row : gold_dataset()) {
    CHECK(std::abs(sqrt_invert(sqrt_transform(row.r1)) - row.r1) < 1e-12);
    CHECK(std::abs(sqrt_invert(sqrt_transform(row.r2)) - row.r2) < 1e-12);
  }
}

TEST_CASE("robust scaler") {
  // uniform 0..100: median 50, q95 - q5 = 90
  std::vector<std::array<double, 2>> values;
  for (int i = 0; i <= 100; ++i)
    values.push_back({static_cast<double>(i), static_cast<double>(100 - i)});
  const TargetScaler s = TargetScaler::fit(values);
  CHECK(s.center[0] == doctest::Approx(50.0));
  CHECK(s.scale[0] == doctest::Approx(90.0));
  CHECK(s.center[1] == doctest::Approx(50.0));
  CHECK(s.scale[1] == doctest::Approx(90.0));

  // constant shift moves only the center
  std::vector<std::array<double, 2>> shifted = values;
  for (auto& row : shifted) row = {row[0] + 7.0, row[1] + 7.0};
  const TargetScaler s2 = TargetScaler::fit(shifted);
  CHECK(s2.center[0] == doctest::Approx(57.0));
  CHECK(s2.scale[0] == doctest::Approx(90.0));

  // round trip within 1e-12 on random data
  SplitRng rng(77);
  std::vector<std::array<double, 2>> sample;
  for (int i = 0; i < 200; ++i) sample.push_back({rng.uniform(0, 5), rng.uniform(0, 9)});
  const TargetScaler s3 = TargetScaler::fit(sample);
  for (int i = 0; i < 100; ++i) {
    const double y = rng.uniform(-4, 4);
    CHECK(std::abs(s3.invert(0, s3.apply(0, y)) - y) < 1e-12);
    CHECK(std::abs(s3.apply(1, s3.invert(1, y)) - y) < 1e-12);
  }

  CHECK_THROWS_AS(TargetScaler::fit({{1.0, 1.0}, {1.0, 2.0}}), data_error);
  // q95 == q5 while two distinct values exist
  std::vector<std::array<double, 2>> degenerate(100, {1.0, 1.0});
  degenerate[0] = {2.0, 2.0};
  CHECK_THROWS_AS(TargetScaler::fit(degenerate), data_error);
}

TEST_CASE("skewness") {
  CHECK(skewness({1.0, 2.0, 3.0}) == doctest::Approx(0.0));
  CHECK(skewness({0.0, 0.0, 0.0, 1.0}) > 0.0);
  CHECK_THROWS_AS(skewness({1.0, 2.0}), data_error);
  CHECK_THROWS_AS(skewness({1.0, 1.0, 1.0}), data_error);

  // square root de-skews an exponential-like sample
  SplitRng rng(13);
  std::vector<double> raw, rooted;
  for (int i = 0; i < 400; ++i) {
    const double v = -std::log(1.0 - rng.uniform());  // Exp(1)
    raw.push_back(v);
    rooted.push_back(std::sqrt(v));
  }
  CHECK(skewness(rooted) < skewness(raw));
}

TEST_CASE("shuffle split") {
  SplitIndices idx = shuffle_split(100, 5);
  CHECK(idx.train.size() == 70);
  CHECK(idx.val.size() == 10);
  CHECK(idx.test.size() == 20);

  // deterministic per seed
  const SplitIndices again = shuffle_split(100, 5);
  CHECK(idx.train == again.train);
  CHECK(idx.val == again.val);
  CHECK(idx.test == again.test);
  CHECK(shuffle_split(100, 6).train != idx.train);

  // floor-then-remainder rule
  idx = shuffle_split(103, 0);
  CHECK(idx.train.size() == 72);
  CHECK(idx.val.size() == 10);
  CHECK(idx.test.size() == 21);

  // partition is disjoint and exhaustive
  std::vector<int> all;
  for (auto* part : {&idx.train, &idx.val, &idx.test})
    all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 103; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);

  CHECK_THROWS_AS(shuffle_split(9, 0), data_error);
}

TEST_CASE("prepared dataset fits the scaler on the training slice only") {
  std::vector<RawRecord> records;
  SplitRng rng(3);
  const CleanResult cleaned = clean_rows(table_rows());
  for (int copy = 0; copy < 4; ++copy)
    for (const RawRecord& r : cleaned.accepted) {
      RawRecord jittered = r;
      jittered.row_id = static_cast<int>(records.size()) + 1;
      jittered.r1 += rng.uniform(0.0, 0.2);
      jittered.r2 += rng.uniform(0.0, 0.2);
      records.push_back(jittered);
    }
  REQUIRE(records.size() == 20);

  const SplitIndices idx = shuffle_split(static_cast<int>(records.size()), 9);
  const PreparedDataset ds = prepare_dataset(records, idx, 9);
  CHECK(ds.train.size() == 14);
  CHECK(ds.val.size() == 2);
  CHECK(ds.test.size() == 4);

  // refit on the train slice reproduces the stored scaler exactly
  std::vector<std::array<double, 2>> train_targets;
  for (int i : idx.train)
    train_targets.push_back({sqrt_transform(records[static_cast<std::size_t>(i)].r1),
                             sqrt_transform(records[static_cast<std::size_t>(i)].r2)});
  const TargetScaler refit = TargetScaler::fit(train_targets);
  for (int task = 0; task < 2; ++task) {
    CHECK(refit.center[task] == ds.scaler.center[task]);
    CHECK(refit.scale[task] == ds.scaler.scale[task]);
  }

  // transformed targets invert back to the original ratios
  for (const PreparedSample& s : ds.test)
    for (int task = 0; task < 2; ++task)
      CHECK(std::abs(sqrt_invert(ds.scaler.invert(task, s.y[task])) - s.r[task]) < 1e-12);
}

TEST_CASE("preprocess outputs reload into the identical dataset") {
  rrgat::testing::TempDir dir("roundtrip");
  // irrational-ish targets stress the JSON double round trip
  std::vector<CsvRow> rows;
  SplitRng rng(31);
  for (int i = 0; i < 12; ++i) {
    char r1[32], r2[32];
    std::snprintf(r1, sizeof(r1), "%.17g", 0.05 + rng.uniform(0.0, 2.0));
    std::snprintf(r2, sizeof(r2), "%.17g", 0.05 + rng.uniform(0.0, 2.0));
    rows.push_back({i % 2 ? "C=Cc1ccccc1" : "C=C(C)C(=O)OC", "C=CC#N", "", r1, r2});
  }
  const CleanResult cleaned = clean_rows(rows);
  REQUIRE(cleaned.accepted.size() == 12);
  const SplitIndices idx = shuffle_split(12, 17);
  const PreparedDataset ds = prepare_dataset(cleaned.accepted, idx, 17);

  SkewnessSummary skew;
  {
    const std::string csv = dir.str("in.csv");
    std::ofstream os(csv);
    os << "monomer1_smiles,monomer2_smiles,copolymer_smiles,r1,r2\n";
    for (const auto& row : rows)
      os << row[0] << "," << row[1] << "," << row[2] << "," << row[3] << ","
         << row[4] << "\n";
    os.close();
    write_preprocess_outputs(dir.str("splits"), cleaned, idx, ds, skew,
                             file_digest_hex(csv), 17);
  }

  const PreparedDataset loaded = load_prepared_dataset(dir.str("splits"));
  REQUIRE(loaded.train.size() == ds.train.size());
  REQUIRE(loaded.val.size() == ds.val.size());
  REQUIRE(loaded.test.size() == ds.test.size());
  for (int task = 0; task < 2; ++task) {
    CHECK(loaded.scaler.center[task] == ds.scaler.center[task]);  // bit-exact
    CHECK(loaded.scaler.scale[task] == ds.scaler.scale[task]);
  }
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(loaded.train[i].row_id == ds.train[i].row_id);
    for (int task = 0; task < 2; ++task) {
      CHECK(loaded.train[i].y[task] == ds.train[i].y[task]);
      CHECK(loaded.train[i].r[task] == ds.train[i].r[task]);
    }
    CHECK(loaded.train[i].co.n_atoms == ds.train[i].co.n_atoms);
  }

  CHECK_THROWS_AS(load_prepared_dataset(dir.str("nowhere")), data_error);
}

TEST_CASE("config files and overrides") {
  rrgat::testing::TempDir dir("config");
  const std::string path = dir.str("run.cfg");
  {
    std::ofstream os(path);
    os << "# comment line\n";
    os << "fingerprint_dim = 32\n";
    os << "lr=1.2e-3   # trailing comment\n";
    os << "dropout = 0.1\n";
    os << "seed = 99\n";
    os << "\n";
  }
  ModelConfig model;
  TrainConfig train;
  apply_config_file(path, model, train);
  CHECK(model.fingerprint_dim == 32);
  CHECK(train.lr == 1.2e-3);
  CHECK(train.dropout == 0.1);
  CHECK(model.dropout == 0.1);  // one key feeds both configs
  CHECK(train.seed == 99);
  CHECK(model.seed == 99);

  CHECK_THROWS_AS(apply_config_entry("bogus_key", "1", model, train), data_error);
  CHECK_THROWS_AS(apply_config_entry("lr", "fast", model, train), data_error);
  {
    std::ofstream os(dir.str("bad.cfg"));
    os << "just a line without equals\n";
  }
  CHECK_THROWS_AS(apply_config_file(dir.str("bad.cfg"), model, train), data_error);
  CHECK_THROWS_AS(apply_config_file(dir.str("missing.cfg"), model, train), data_error);
}
