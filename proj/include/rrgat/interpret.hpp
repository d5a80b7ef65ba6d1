#pragma once

#include <array>
#include <string>
#include <vector>

#include "rrgat/model.hpp"
#include "rrgat/pipeline.hpp"

namespace rrgat {

struct SimilarityMatrix {
  std::string molecule;              // SMILES of the analyzed molecule
  int n = 0;
  std::vector<double> values;        // n x n, row-major, in [-1, 1]
  std::vector<std::string> labels;   // element + atom index, e.g. "C0"
  std::vector<char> degenerate;      // zero-variance embedding rows
  bool trivial = false;              // single-atom molecule
};

// Pearson correlation between embedding rows across the hidden dimension.
// Degenerate (zero-variance) rows are recorded as 0 with a flag.
SimilarityMatrix similarity_from_embeddings(const std::vector<double>& embeddings,
                                            int n, int hidden,
                                            std::vector<std::string> labels);

// Similarity of the final-layer atom embeddings of one molecule.
SimilarityMatrix atom_similarity(const MimoGat& model, const MolGraph& g);

struct AttentionDump {
  EncoderTrace trace;
  int n_atoms = 0;
};

// All attention weights of a recorded forward pass, per layer and readout
// step. Per-target weights sum to 1.
AttentionDump dump_attention(const MimoGat& model, const MolGraph& g);

struct AblationImportance {
  int group_id = 0;
  std::string group;
  double mean_abs_delta_r1 = 0.0;
  double mean_abs_delta_r2 = 0.0;
  int rank = 0;
};

// Zeroes one feature group's columns across all three input graphs of every
// sample and reports the mean absolute prediction change per task.
std::array<double, 2> feature_ablation_importance(const MimoGat& model,
                                                  const std::vector<PreparedSample>& samples,
                                                  int group_id);

// All 13 groups ranked by mean absolute prediction change.
std::vector<AblationImportance> feature_ablation_report(
    const MimoGat& model, const std::vector<PreparedSample>& samples);

// Zeroed copy of a featurized graph for the given groups; used by the
// ablation ops and their tests.
FeaturizedGraph ablate_groups(const FeaturizedGraph& fg, const std::vector<int>& group_ids);

void write_similarity_csv(const std::string& path, const SimilarityMatrix& m);
void write_attention_csv(const std::string& path, const AttentionDump& dump);
void write_ablation_csv(const std::string& path,
                        const std::vector<AblationImportance>& report);

}  // namespace rrgat
