#pragma once

#include <string>
#include <vector>

#include "rrgat/mol_graph.hpp"

namespace rrgat {

inline constexpr int kAtomFeatureDim = 33;
inline constexpr int kBondFeatureDim = 7;

// The 13 feature groups: 9 atom groups followed by 4 bond groups. Offsets
// are column positions within the atom or bond feature matrix.
struct FeatureGroup {
  int id;
  std::string name;
  bool is_atom_group;
  int offset;
  int width;
};

const std::vector<FeatureGroup>& feature_groups();
const FeatureGroup& feature_group(int id);

// Writes the 33-wide atom descriptor for atom i. Rings must be perceived.
void atom_features(const MolGraph& g, int i, double* out);

// Writes the 7-wide bond descriptor for bond e.
void bond_features(const MolGraph& g, int e, double* out);

struct FeaturizedGraph {
  int n_atoms = 0;
  int n_edges = 0;                    // directed; 2 per undirected bond
  std::vector<double> atom_matrix;    // n_atoms x kAtomFeatureDim, row-major
  std::vector<double> bond_matrix;    // n_edges x kBondFeatureDim, row-major
  std::vector<int> edge_at;           // owning atom v of each directed edge
  std::vector<int> edge_nbr;          // neighbor u
  std::vector<int> neighbor_offsets;  // n_atoms+1, segments over the edge list
  std::vector<double> atom_mask;      // all ones; batching keeps the column
};

// Deterministic layout: atoms in parse order, directed edges sorted by
// (owning atom, neighbor).
FeaturizedGraph featurize_graph(const MolGraph& g);

}  // namespace rrgat
