#pragma once

#include <array>
#include <string>
#include <vector>

#include "rrgat/checkpoint.hpp"
#include "rrgat/featurize.hpp"
#include "rrgat/optim.hpp"
#include "rrgat/tensor.hpp"

namespace rrgat {

struct ModelConfig {
  int fingerprint_dim = 300;  // hidden width of atom and molecule states
  int radius = 3;             // atom-level attention layers
  int readout_steps = 3;      // super-node update steps
  double dropout = 0.05;
  std::uint64_t seed = 0;

  void validate() const;  // throws data_error
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

// One attention pass: alignment score and normalized weight of each edge
// (target <- source). In readout records the target is the molecule index
// within the batch.
struct AttentionRecord {
  std::vector<int> target;
  std::vector<int> source;
  std::vector<double> score;   // pre-softmax alignment
  std::vector<double> weight;  // softmax-normalized per target
};

struct EncoderTrace {
  std::vector<AttentionRecord> layers;
  std::vector<AttentionRecord> readout;
};

// Disjoint union of featurized graphs with self-augmented attention edges.
// Attention edges are grouped per target atom, self edge first, so softmax
// segments are never empty.
struct BatchGraph {
  int n_atoms = 0;
  int n_mols = 0;
  int n_real_edges = 0;
  TensorPtr atom_feats;              // N x 33
  TensorPtr bond_feats;              // E x 7
  std::vector<int> att_target;       // E+N entries
  std::vector<int> att_source;
  std::vector<int> att_offsets;      // N+1
  std::vector<int> att_row_map;      // row into [atom states (N) ; projected real edges (E)]
  std::vector<int> real_src;         // E source atoms
  std::vector<int> mol_offsets;      // M+1, atoms per molecule are contiguous
  std::vector<int> atom_mol;         // N molecule ids
};

BatchGraph build_batch(const std::vector<const FeaturizedGraph*>& graphs);

struct EncodeResult {
  TensorPtr embedding;    // M x H
  TensorPtr atom_states;  // N x H, final layer
};

// Shared-encoder graph attention network with a three-input fusion head and
// two regression outputs in transformed target space.
class MimoGat {
 public:
  explicit MimoGat(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  EncodeResult encode(Tape& tape, const BatchGraph& g, bool train,
                      SplitRng* rng, EncoderTrace* trace = nullptr) const;

  // Embeds the three inputs with the same encoder, fuses and predicts the
  // two transformed-scale targets. Output is M x 2.
  TensorPtr forward(Tape& tape, const BatchGraph& g1, const BatchGraph& g2,
                    const BatchGraph& gco, bool train, SplitRng* rng,
                    std::array<EncoderTrace*, 3> traces = {nullptr, nullptr, nullptr}) const;

  // Final-layer atom states for one molecule, row-major N x H.
  std::vector<double> extract_atom_embeddings(const FeaturizedGraph& fg,
                                              EncoderTrace* trace = nullptr) const;

  std::array<double, 2> predict_transformed(const FeaturizedGraph& m1,
                                            const FeaturizedGraph& m2,
                                            const FeaturizedGraph& co) const;

  // Rebuilds a model from a checkpoint whose config block carries a "model"
  // object; refuses mismatched shapes or widths.
  static MimoGat from_checkpoint(const Checkpoint& ck);

  // Update/reset-gated state merge over the named parameter block
  // (base + ".z", ".r", ".h").
  TensorPtr gru_cell(Tape& tape, const TensorPtr& context, const TensorPtr& state,
                     const std::string& base) const;

 private:
  TensorPtr linear(Tape& tape, const TensorPtr& x, const std::string& base) const;

  ModelConfig cfg_;
  ParamStore params_;
};

}  // namespace rrgat
