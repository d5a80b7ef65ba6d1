#include "rrgat/model.hpp"

#include <cstring>

#include "json.hpp"
#include "rrgat/errors.hpp"

namespace rrgat {

using nlohmann::json;

void ModelConfig::validate() const {
  if (fingerprint_dim <= 0) throw data_error("fingerprint_dim must be positive");
  if (radius < 1) throw data_error("radius must be at least 1");
  if (readout_steps < 1) throw data_error("readout steps must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) throw data_error("dropout must be in [0,1)");
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["fingerprint_dim"] = cfg.fingerprint_dim;
  j["radius"] = cfg.radius;
  j["readout_steps"] = cfg.readout_steps;
  j["dropout"] = cfg.dropout;
  j["seed"] = cfg.seed;
  j["atom_feature_dim"] = kAtomFeatureDim;
  j["bond_feature_dim"] = kBondFeatureDim;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw data_error(std::string("bad model config: ") + e.what());
  }
  ModelConfig cfg;
  cfg.fingerprint_dim = j.at("fingerprint_dim").get<int>();
  cfg.radius = j.at("radius").get<int>();
  cfg.readout_steps = j.at("readout_steps").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.value("atom_feature_dim", kAtomFeatureDim) != kAtomFeatureDim ||
      j.value("bond_feature_dim", kBondFeatureDim) != kBondFeatureDim)
    throw data_error("checkpoint feature widths do not match this build");
  cfg.validate();
  return cfg;
}

BatchGraph build_batch(const std::vector<const FeaturizedGraph*>& graphs) {
  if (graphs.empty()) throw data_error("build_batch: no graphs");
  BatchGraph b;
  b.n_mols = static_cast<int>(graphs.size());
  for (const FeaturizedGraph* g : graphs) {
    if (g->n_atoms == 0) throw data_error("build_batch: empty molecule");
    b.n_atoms += g->n_atoms;
    b.n_real_edges += g->n_edges;
  }

  b.atom_feats = Tensor::zeros(b.n_atoms, kAtomFeatureDim);
  b.bond_feats = Tensor::zeros(b.n_real_edges, kBondFeatureDim);
  b.att_offsets.reserve(b.n_atoms + 1);
  b.att_offsets.push_back(0);
  b.mol_offsets.reserve(b.n_mols + 1);
  b.mol_offsets.push_back(0);
  b.atom_mol.reserve(b.n_atoms);

  int atom_base = 0, edge_base = 0, mol = 0;
  for (const FeaturizedGraph* g : graphs) {
    std::memcpy(b.atom_feats->data() +
                    static_cast<std::size_t>(atom_base) * kAtomFeatureDim,
                g->atom_matrix.data(), g->atom_matrix.size() * sizeof(double));
    if (g->n_edges > 0)
      std::memcpy(b.bond_feats->data() +
                      static_cast<std::size_t>(edge_base) * kBondFeatureDim,
                  g->bond_matrix.data(), g->bond_matrix.size() * sizeof(double));

    for (int v = 0; v < g->n_atoms; ++v) {
      // self edge first, mapped onto the atom-state block
      b.att_target.push_back(atom_base + v);
      b.att_source.push_back(atom_base + v);
      b.att_row_map.push_back(atom_base + v);
      for (int e = g->neighbor_offsets[v]; e < g->neighbor_offsets[v + 1]; ++e) {
        b.att_target.push_back(atom_base + g->edge_at[e]);
        b.att_source.push_back(atom_base + g->edge_nbr[e]);
        b.att_row_map.push_back(b.n_atoms + edge_base + e);
        b.real_src.push_back(atom_base + g->edge_nbr[e]);
      }
      b.att_offsets.push_back(static_cast<int>(b.att_target.size()));
      b.atom_mol.push_back(mol);
    }
    atom_base += g->n_atoms;
    edge_base += g->n_edges;
    b.mol_offsets.push_back(atom_base);
    ++mol;
  }
  return b;
}

MimoGat::MimoGat(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t h = static_cast<std::size_t>(cfg_.fingerprint_dim);
  SplitRng root(cfg_.seed);

  auto add_linear = [&](const std::string& base, std::size_t in, std::size_t out) {
    params_.add_weight(base + ".w", in, out, root);
    params_.add_zeros(base + ".b", 1, out);
  };
  auto add_gru = [&](const std::string& base) {
    add_linear(base + ".z", 2 * h, h);
    add_linear(base + ".r", 2 * h, h);
    add_linear(base + ".h", 2 * h, h);
  };

  add_linear("enc.atom_in", kAtomFeatureDim, h);
  add_linear("enc.nbr_in", h + kBondFeatureDim, h);
  for (int k = 0; k < cfg_.radius; ++k) {
    const std::string base = "enc.layer" + std::to_string(k);
    add_linear(base + ".align", 2 * h, 1);
    add_linear(base + ".ctx", h, h);
    add_gru(base + ".gru");
  }
  add_linear("enc.readout.align", 2 * h, 1);
  add_linear("enc.readout.ctx", h, h);
  add_gru("enc.readout.gru");
  add_linear("head.fusion", 3 * h, h);
  add_linear("head.out", h, 2);
}

TensorPtr MimoGat::linear(Tape& tape, const TensorPtr& x, const std::string& base) const {
  return tape.add(tape.matmul(x, params_.at(base + ".w")), params_.at(base + ".b"));
}

TensorPtr MimoGat::gru_cell(Tape& tape, const TensorPtr& context,
                            const TensorPtr& state, const std::string& base) const {
  TensorPtr joint = tape.concat_cols(context, state);
  TensorPtr z = tape.sigmoid(linear(tape, joint, base + ".z"));
  TensorPtr r = tape.sigmoid(linear(tape, joint, base + ".r"));
  TensorPtr candidate = tape.tanh_op(
      linear(tape, tape.concat_cols(context, tape.mul(r, state)), base + ".h"));
  // h' = (1 - z) * h + z * candidate
  return tape.add(tape.sub(state, tape.mul(z, state)), tape.mul(z, candidate));
}

namespace {

void record_attention(EncoderTrace* trace, bool readout, const std::vector<int>& target,
                      const std::vector<int>& source, const TensorPtr& scores,
                      const TensorPtr& weights) {
  if (!trace) return;
  AttentionRecord rec;
  rec.target = target;
  rec.source = source;
  rec.score.assign(scores->data(), scores->data() + scores->size());
  rec.weight.assign(weights->data(), weights->data() + weights->size());
  (readout ? trace->readout : trace->layers).push_back(std::move(rec));
}

std::vector<int> identity_vector(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

}  // namespace

EncodeResult MimoGat::encode(Tape& tape, const BatchGraph& g, bool train,
                             SplitRng* rng, EncoderTrace* trace) const {
  const bool use_dropout = train && cfg_.dropout > 0.0;
  if (use_dropout && rng == nullptr)
    throw data_error("encode: training with dropout requires an RNG");
  SplitRng unused(0);
  SplitRng& drop_rng = rng ? *rng : unused;

  TensorPtr h = tape.leaky_relu(linear(tape, g.atom_feats, "enc.atom_in"));

  for (int k = 0; k < cfg_.radius; ++k) {
    TensorPtr nbr;
    if (k == 0) {
      // Bond features enter only here, fused with the source atom state.
      TensorPtr src = tape.gather_rows(h, g.real_src);
      TensorPtr projected = tape.leaky_relu(
          linear(tape, tape.concat_cols(src, g.bond_feats), "enc.nbr_in"));
      nbr = tape.gather_rows(tape.concat_rows(h, projected), g.att_row_map);
    } else {
      nbr = tape.gather_rows(h, g.att_source);
    }
    const std::string base = "enc.layer" + std::to_string(k);
    TensorPtr tgt = tape.gather_rows(h, g.att_target);
    TensorPtr scores =
        tape.leaky_relu(linear(tape, tape.concat_cols(tgt, nbr), base + ".align"));
    TensorPtr a = tape.segment_softmax(scores, g.att_offsets);
    record_attention(trace, false, g.att_target, g.att_source, scores, a);
    TensorPtr ctx = tape.elu(tape.segment_sum(
        tape.scale_rows(linear(tape, nbr, base + ".ctx"), a), g.att_offsets));
    ctx = tape.dropout(ctx, cfg_.dropout, train, drop_rng);
    h = gru_cell(tape, ctx, h, base + ".gru");
  }

  TensorPtr s = tape.segment_sum(h, g.mol_offsets);
  for (int step = 0; step < cfg_.readout_steps; ++step) {
    TensorPtr tgt = tape.gather_rows(s, g.atom_mol);
    TensorPtr scores = tape.leaky_relu(
        linear(tape, tape.concat_cols(tgt, h), "enc.readout.align"));
    TensorPtr a = tape.segment_softmax(scores, g.mol_offsets);
    record_attention(trace, true, g.atom_mol, identity_vector(g.n_atoms), scores, a);
    TensorPtr ctx = tape.elu(tape.segment_sum(
        tape.scale_rows(linear(tape, h, "enc.readout.ctx"), a), g.mol_offsets));
    s = gru_cell(tape, ctx, s, "enc.readout.gru");
  }
  return {s, h};
}

TensorPtr MimoGat::forward(Tape& tape, const BatchGraph& g1, const BatchGraph& g2,
                           const BatchGraph& gco, bool train, SplitRng* rng,
                           std::array<EncoderTrace*, 3> traces) const {
  if (g1.n_mols != g2.n_mols || g1.n_mols != gco.n_mols)
    throw data_error("forward: input batches have different sizes");
  EncodeResult e1 = encode(tape, g1, train, rng, traces[0]);
  EncodeResult e2 = encode(tape, g2, train, rng, traces[1]);
  EncodeResult eco = encode(tape, gco, train, rng, traces[2]);

  TensorPtr cat =
      tape.concat_cols(tape.concat_cols(e1.embedding, e2.embedding), eco.embedding);
  SplitRng unused(0);
  cat = tape.dropout(cat, cfg_.dropout, train, rng ? *rng : unused);
  TensorPtr fused = tape.leaky_relu(linear(tape, cat, "head.fusion"));
  return linear(tape, fused, "head.out");
}

std::vector<double> MimoGat::extract_atom_embeddings(const FeaturizedGraph& fg,
                                                     EncoderTrace* trace) const {
  BatchGraph b = build_batch({&fg});
  Tape tape;
  tape.set_grad_enabled(false);
  EncodeResult r = encode(tape, b, /*train=*/false, nullptr, trace);
  return std::vector<double>(r.atom_states->data(),
                             r.atom_states->data() + r.atom_states->size());
}

std::array<double, 2> MimoGat::predict_transformed(const FeaturizedGraph& m1,
                                                   const FeaturizedGraph& m2,
                                                   const FeaturizedGraph& co) const {
  BatchGraph b1 = build_batch({&m1});
  BatchGraph b2 = build_batch({&m2});
  BatchGraph bco = build_batch({&co});
  Tape tape;
  tape.set_grad_enabled(false);
  TensorPtr out = forward(tape, b1, b2, bco, /*train=*/false, nullptr);
  return {out->at(0, 0), out->at(0, 1)};
}

MimoGat MimoGat::from_checkpoint(const Checkpoint& ck) {
  json j;
  try {
    j = json::parse(ck.config_json);
  } catch (const json::exception& e) {
    throw data_error(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!j.contains("model")) throw data_error("checkpoint config lacks a model block");
  MimoGat model(model_config_from_json(j["model"].dump()));
  model.params_.load_values(ck.tensors);
  return model;
}

}  // namespace rrgat
