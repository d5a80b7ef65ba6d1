#include "rrgat/featurize.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "rrgat/errors.hpp"

namespace rrgat {
namespace {

// Atom column layout.
constexpr int kElementOff = 0;        // 13 slots
constexpr int kDegreeOff = 13;        // 6 slots, degree 0..5 (clamped)
constexpr int kChargeOff = 19;        // 1 scalar
constexpr int kHCountOff = 20;        // 5 slots, 0..4 (clamped)
constexpr int kAromaticOff = 25;
constexpr int kAtomRingOff = 26;
constexpr int kHybridOff = 27;        // sp, sp2, sp3, other
constexpr int kChiralOff = 31;
constexpr int kRadicalOff = 32;       // placeholder, always 0

// Bond column layout.
constexpr int kOrderOff = 0;          // single, double, triple, aromatic
constexpr int kConjOff = 4;
constexpr int kBondRingOff = 5;
constexpr int kStereoOff = 6;

bool is_multiple(BondOrder o) {
  return o == BondOrder::kDouble || o == BondOrder::kTriple ||
         o == BondOrder::kAromatic;
}

}  // namespace

const std::vector<FeatureGroup>& feature_groups() {
  static const std::vector<FeatureGroup> groups = {
      {0, "element", true, kElementOff, 13},
      {1, "degree", true, kDegreeOff, 6},
      {2, "formal_charge", true, kChargeOff, 1},
      {3, "h_count", true, kHCountOff, 5},
      {4, "aromatic", true, kAromaticOff, 1},
      {5, "atom_in_ring", true, kAtomRingOff, 1},
      {6, "hybridization", true, kHybridOff, 4},
      {7, "chirality", true, kChiralOff, 1},
      {8, "radical", true, kRadicalOff, 1},
      {9, "bond_order", false, kOrderOff, 4},
      {10, "conjugated", false, kConjOff, 1},
      {11, "bond_in_ring", false, kBondRingOff, 1},
      {12, "bond_stereo", false, kStereoOff, 1},
  };
  return groups;
}

const FeatureGroup& feature_group(int id) {
  const auto& groups = feature_groups();
  if (id < 0 || id >= static_cast<int>(groups.size()))
    throw data_error("unknown feature group id " + std::to_string(id));
  return groups[static_cast<std::size_t>(id)];
}

void atom_features(const MolGraph& g, int i, double* out) {
  std::fill(out, out + kAtomFeatureDim, 0.0);
  const AtomNode& a = g.atoms.at(i);

  out[kElementOff + static_cast<int>(a.element)] = 1.0;

  const int degree = std::min<int>(static_cast<int>(g.adjacency[i].size()), 5);
  out[kDegreeOff + degree] = 1.0;

  out[kChargeOff] = static_cast<double>(a.formal_charge);

  const int h = std::min(implicit_h_count(g, i), 4);
  out[kHCountOff + h] = 1.0;

  out[kAromaticOff] = a.is_aromatic ? 1.0 : 0.0;
  out[kAtomRingOff] = a.in_ring ? 1.0 : 0.0;

  int doubles = 0, triples = 0, aromatics = 0;
  for (auto [u, e] : g.adjacency[i]) {
    (void)u;
    switch (g.bonds[e].order) {
      case BondOrder::kDouble: ++doubles; break;
      case BondOrder::kTriple: ++triples; break;
      case BondOrder::kAromatic: ++aromatics; break;
      default: break;
    }
  }
  int hybrid;  // 0 sp, 1 sp2, 2 sp3 (slot 3 "other" is reserved)
  if (triples >= 1 || doubles >= 2)
    hybrid = 0;
  else if (doubles >= 1 || aromatics >= 1)
    hybrid = 1;
  else
    hybrid = 2;
  out[kHybridOff + hybrid] = 1.0;

  out[kChiralOff] = a.chiral ? 1.0 : 0.0;
  out[kRadicalOff] = 0.0;
}

void bond_features(const MolGraph& g, int e, double* out) {
  std::fill(out, out + kBondFeatureDim, 0.0);
  const BondEdge& b = g.bonds.at(e);

  out[kOrderOff + static_cast<int>(b.order)] = 1.0;

  // Conjugated when either endpoint carries a multiple bond other than this
  // one, i.e. the bond sits next to a pi system.
  bool conjugated = false;
  for (int endpoint : {b.a, b.b}) {
    for (auto [u, f] : g.adjacency[endpoint]) {
      (void)u;
      if (f != e && is_multiple(g.bonds[f].order)) conjugated = true;
    }
  }
  out[kConjOff] = conjugated ? 1.0 : 0.0;

  out[kBondRingOff] = b.in_ring ? 1.0 : 0.0;
  out[kStereoOff] = b.stereo != BondStereo::kNone ? 1.0 : 0.0;
}

FeaturizedGraph featurize_graph(const MolGraph& g) {
  FeaturizedGraph fg;
  fg.n_atoms = g.atom_count();
  fg.n_edges = 2 * g.bond_count();
  fg.atom_matrix.resize(static_cast<std::size_t>(fg.n_atoms) * kAtomFeatureDim);
  fg.atom_mask.assign(static_cast<std::size_t>(fg.n_atoms), 1.0);
  for (int i = 0; i < fg.n_atoms; ++i)
    atom_features(g, i, fg.atom_matrix.data() + static_cast<std::size_t>(i) * kAtomFeatureDim);

  struct DirEdge {
    int at, nbr, bond;
  };
  std::vector<DirEdge> edges;
  edges.reserve(static_cast<std::size_t>(fg.n_edges));
  for (int e = 0; e < g.bond_count(); ++e) {
    edges.push_back({g.bonds[e].a, g.bonds[e].b, e});
    edges.push_back({g.bonds[e].b, g.bonds[e].a, e});
  }
  std::sort(edges.begin(), edges.end(), [](const DirEdge& x, const DirEdge& y) {
    return x.at != y.at ? x.at < y.at : x.nbr < y.nbr;
  });

  fg.bond_matrix.resize(static_cast<std::size_t>(fg.n_edges) * kBondFeatureDim);
  fg.edge_at.resize(edges.size());
  fg.edge_nbr.resize(edges.size());
  std::vector<double> row(kBondFeatureDim);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    fg.edge_at[k] = edges[k].at;
    fg.edge_nbr[k] = edges[k].nbr;
    bond_features(g, edges[k].bond, row.data());
    std::memcpy(fg.bond_matrix.data() + k * kBondFeatureDim, row.data(),
                sizeof(double) * kBondFeatureDim);
  }

  fg.neighbor_offsets.assign(static_cast<std::size_t>(fg.n_atoms) + 1, 0);
  for (const auto& e : edges) ++fg.neighbor_offsets[static_cast<std::size_t>(e.at) + 1];
  std::partial_sum(fg.neighbor_offsets.begin(), fg.neighbor_offsets.end(),
                   fg.neighbor_offsets.begin());
  return fg;
}

}  // namespace rrgat
