#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rrgat/featurize.hpp"
#include "rrgat/mol_graph.hpp"

namespace rrgat {

struct RawRecord {
  int row_id = 0;  // 1-based data row in the source CSV
  std::string monomer1_smiles;
  std::string monomer2_smiles;
  std::string copolymer_smiles;  // generated when the input column is empty
  double r1 = 0.0;
  double r2 = 0.0;
};

struct Rejection {
  int row_id = 0;
  std::string reason;
};

struct CleanResult {
  std::vector<RawRecord> accepted;
  std::vector<Rejection> rejected;
};

// Raw CSV cells in schema order: m1, m2, copolymer (may be empty), r1, r2.
using CsvRow = std::array<std::string, 5>;

// Applies the cleaning rules: targets present, finite and non-negative;
// monomer SMILES parse; a provided copolymer must parse and be isomorphic
// to the generated one; copolymer generation must succeed. Accepted rows
// carry the generated copolymer SMILES. Idempotent.
CleanResult clean_rows(const std::vector<CsvRow>& rows);

// Reads the CSV (header: monomer1_smiles,monomer2_smiles,copolymer_smiles,
// r1,r2) and cleans it. Throws data_error on missing file or bad header.
CleanResult ingest_csv(const std::string& path);

// Head-to-tail single-unit dimer: the polymerizable C=C of each monomer is
// reduced to a single bond, monomer 1's head carbon and monomer 2's tail
// carbon get methyl caps, and monomer 1's tail bonds to monomer 2's head.
// Throws data_error("non-vinyl monomer ...") when no candidate C=C exists.
std::string generate_copolymer(const MolGraph& m1, const MolGraph& m2);

double sqrt_transform(double r);  // throws on negative input
double sqrt_invert(double y);     // clamps negatives to 0 before squaring

// Per-target robust scaling fitted on training rows only: center is the
// median, scale the 5th-to-95th inter-quantile range of the transformed
// values.
struct TargetScaler {
  std::array<double, 2> center{0.0, 0.0};
  std::array<double, 2> scale{1.0, 1.0};

  static TargetScaler fit(const std::vector<std::array<double, 2>>& transformed);
  double apply(int task, double y) const { return (y - center[task]) / scale[task]; }
  double invert(int task, double y) const { return y * scale[task] + center[task]; }
};

// Linear-interpolation percentile of a sample, p in [0,100].
double percentile(std::vector<double> values, double p);

// Fisher-Pearson moment coefficient g1 with population moments.
double skewness(const std::vector<double>& values);

struct SplitIndices {
  std::vector<int> train, val, test;
};

// Seeded Fisher-Yates shuffle, then contiguous 70/10/20 slices; train and
// validation counts floor, the remainder goes to test.
SplitIndices shuffle_split(int n, std::uint64_t seed);

struct PreparedSample {
  int row_id = 0;
  FeaturizedGraph m1, m2, co;
  std::array<double, 2> y{0.0, 0.0};  // sqrt-transformed, robust-scaled
  std::array<double, 2> r{0.0, 0.0};  // original reactivity ratios
};

struct PreparedDataset {
  std::vector<PreparedSample> train, val, test;
  TargetScaler scaler;
  std::uint64_t seed = 0;
};

// Fits the scaler on the train slice only, then featurizes every record.
PreparedDataset prepare_dataset(const std::vector<RawRecord>& records,
                                const SplitIndices& idx, std::uint64_t seed);

PreparedSample prepare_sample(const RawRecord& rec, const TargetScaler& scaler);

}  // namespace rrgat
