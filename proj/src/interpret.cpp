#include "rrgat/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rrgat/errors.hpp"
#include "rrgat/smiles.hpp"

namespace rrgat {

SimilarityMatrix similarity_from_embeddings(const std::vector<double>& emb, int n,
                                            int h, std::vector<std::string> labels) {
  if (emb.size() != static_cast<std::size_t>(n) * h)
    throw data_error("similarity: embedding size does not match n x hidden");
  SimilarityMatrix m;
  m.n = n;
  m.trivial = n == 1;
  m.values.assign(static_cast<std::size_t>(n) * n, 0.0);
  m.degenerate.assign(static_cast<std::size_t>(n), 0);
  m.labels = std::move(labels);

  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sd(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double* row = emb.data() + static_cast<std::size_t>(i) * h;
    double mu = 0.0;
    for (int k = 0; k < h; ++k) mu += row[k];
    mu /= h;
    double var = 0.0;
    for (int k = 0; k < h; ++k) var += (row[k] - mu) * (row[k] - mu);
    mean[i] = mu;
    sd[i] = std::sqrt(var / h);
    if (sd[i] < 1e-15) m.degenerate[i] = 1;
  }

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double value = 0.0;
      if (!m.degenerate[i] && !m.degenerate[j]) {
        const double* ri = emb.data() + static_cast<std::size_t>(i) * h;
        const double* rj = emb.data() + static_cast<std::size_t>(j) * h;
        double cov = 0.0;
        for (int k = 0; k < h; ++k) cov += (ri[k] - mean[i]) * (rj[k] - mean[j]);
        cov /= h;
        value = cov / (sd[i] * sd[j]);
        value = std::clamp(value, -1.0, 1.0);
        if (i == j) value = 1.0;
      }
      m.values[static_cast<std::size_t>(i) * n + j] = value;
      m.values[static_cast<std::size_t>(j) * n + i] = value;
    }
  }
  return m;
}

SimilarityMatrix atom_similarity(const MimoGat& model, const MolGraph& g) {
  const FeaturizedGraph fg = featurize_graph(g);
  std::vector<std::string> labels;
  for (int i = 0; i < g.atom_count(); ++i)
    labels.push_back(g.atoms[i].symbol + std::to_string(i));
  SimilarityMatrix m =
      similarity_from_embeddings(model.extract_atom_embeddings(fg), fg.n_atoms,
                                 model.config().fingerprint_dim, std::move(labels));
  m.molecule = write_smiles(g);
  return m;
}

AttentionDump dump_attention(const MimoGat& model, const MolGraph& g) {
  const FeaturizedGraph fg = featurize_graph(g);
  AttentionDump dump;
  dump.n_atoms = fg.n_atoms;
  model.extract_atom_embeddings(fg, &dump.trace);
  return dump;
}

FeaturizedGraph ablate_groups(const FeaturizedGraph& fg, const std::vector<int>& group_ids) {
  FeaturizedGraph out = fg;
  for (int id : group_ids) {
    const FeatureGroup& grp = feature_group(id);
    const int width = grp.is_atom_group ? kAtomFeatureDim : kBondFeatureDim;
    const int rows = grp.is_atom_group ? fg.n_atoms : fg.n_edges;
    std::vector<double>& matrix = grp.is_atom_group ? out.atom_matrix : out.bond_matrix;
    for (int r = 0; r < rows; ++r)
      for (int c = grp.offset; c < grp.offset + grp.width; ++c)
        matrix[static_cast<std::size_t>(r) * width + c] = 0.0;
  }
  return out;
}

std::array<double, 2> feature_ablation_importance(const MimoGat& model,
                                                  const std::vector<PreparedSample>& samples,
                                                  int group_id) {
  feature_group(group_id);  // validates the id
  if (samples.empty()) throw data_error("feature ablation: empty sample set");

  std::array<double, 2> acc{0.0, 0.0};
  for (const PreparedSample& s : samples) {
    const auto base = model.predict_transformed(s.m1, s.m2, s.co);
    const auto ablated = model.predict_transformed(ablate_groups(s.m1, {group_id}),
                                                   ablate_groups(s.m2, {group_id}),
                                                   ablate_groups(s.co, {group_id}));
    acc[0] += std::abs(ablated[0] - base[0]);
    acc[1] += std::abs(ablated[1] - base[1]);
  }
  acc[0] /= static_cast<double>(samples.size());
  acc[1] /= static_cast<double>(samples.size());
  return acc;
}

std::vector<AblationImportance> feature_ablation_report(
    const MimoGat& model, const std::vector<PreparedSample>& samples) {
  std::vector<AblationImportance> report;
  for (const FeatureGroup& grp : feature_groups()) {
    const auto delta = feature_ablation_importance(model, samples, grp.id);
    report.push_back({grp.id, grp.name, delta[0], delta[1], 0});
  }
  std::stable_sort(report.begin(), report.end(),
                   [](const AblationImportance& a, const AblationImportance& b) {
                     return a.mean_abs_delta_r1 + a.mean_abs_delta_r2 >
                            b.mean_abs_delta_r1 + b.mean_abs_delta_r2;
                   });
  for (std::size_t i = 0; i < report.size(); ++i)
    report[i].rank = static_cast<int>(i) + 1;
  return report;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot open for writing: " + path);
  return os;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_similarity_csv(const std::string& path, const SimilarityMatrix& m) {
  std::ofstream os = open_out(path);
  os << "atom";
  for (const auto& label : m.labels) os << "," << label;
  os << "\n";
  for (int i = 0; i < m.n; ++i) {
    os << m.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < m.n; ++j)
      os << "," << fixed6(m.values[static_cast<std::size_t>(i) * m.n + j]);
    os << "\n";
  }
  if (!os) throw data_error("write failed: " + path);
}

void write_attention_csv(const std::string& path, const AttentionDump& dump) {
  std::ofstream os = open_out(path);
  os << "layer,target,source,weight\n";
  int k = 0;
  for (const AttentionRecord& rec : dump.trace.layers) {
    for (std::size_t i = 0; i < rec.weight.size(); ++i)
      os << "atom" << k << "," << rec.target[i] << "," << rec.source[i] << ","
         << fixed6(rec.weight[i]) << "\n";
    ++k;
  }
  k = 1;
  for (const AttentionRecord& rec : dump.trace.readout) {
    for (std::size_t i = 0; i < rec.weight.size(); ++i)
      os << "readout" << k << "," << rec.target[i] << "," << rec.source[i] << ","
         << fixed6(rec.weight[i]) << "\n";
    ++k;
  }
  if (!os) throw data_error("write failed: " + path);
}

void write_ablation_csv(const std::string& path,
                        const std::vector<AblationImportance>& report) {
  std::ofstream os = open_out(path);
  os << "group,mean_abs_delta_r1,mean_abs_delta_r2,rank\n";
  for (const AblationImportance& row : report)
    os << row.group << "," << fixed6(row.mean_abs_delta_r1) << ","
       << fixed6(row.mean_abs_delta_r2) << "," << row.rank << "\n";
  if (!os) throw data_error("write failed: " + path);
}

}  // namespace rrgat
