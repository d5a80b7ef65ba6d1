#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rrgat {

// Element slots recognized by the featurizer; everything else parses as
// kOther (the "special atom" slot). The printed symbol is kept alongside.
enum class Element : std::uint8_t {
  kB, kC, kN, kO, kF, kSi, kP, kS, kCl, kSe, kBr, kI, kOther
};

enum class BondOrder : std::uint8_t { kSingle, kDouble, kTriple, kAromatic };
enum class BondStereo : std::uint8_t { kNone, kUp, kDown };

struct AtomNode {
  Element element = Element::kC;
  std::string symbol = "C";        // printed form, e.g. "Cl", "Na"
  bool is_aromatic = false;
  int formal_charge = 0;
  std::optional<int> explicit_h;   // set for bracket atoms only
  bool chiral = false;             // @ or @@ seen in the bracket
  bool in_ring = false;
  int index = 0;
};

struct BondEdge {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;
  BondStereo stereo = BondStereo::kNone;
  bool in_ring = false;
};

struct MolGraph {
  std::vector<AtomNode> atoms;
  std::vector<BondEdge> bonds;
  // adjacency[i] = list of (neighbor atom index, bond index)
  std::vector<std::vector<std::pair<int, int>>> adjacency;
  // Set when any atom's bond-order sum exceeds its default valence.
  bool over_valent = false;

  int atom_count() const { return static_cast<int>(atoms.size()); }
  int bond_count() const { return static_cast<int>(bonds.size()); }
};

// Rebuilds adjacency from the bond list (symmetric by construction).
void build_adjacency(MolGraph& g);

// Marks atoms and bonds lying on at least one simple cycle, using the
// fundamental cycles of a DFS spanning tree.
void perceive_rings(MolGraph& g);

// Hydrogens implied by default valence minus the bond-order sum (aromatic
// counts 1.5), floored at zero. Bracket atoms return their explicit count.
int implicit_h_count(const MolGraph& g, int atom);

// Recomputes adjacency, ring flags, indices and the over-valence diagnostic.
void finalize_graph(MolGraph& g);

// Returns the same molecule with atom i renamed to perm[i]; bonds and
// adjacency are rebuilt, ring/valence annotations recomputed.
MolGraph relabel_atoms(const MolGraph& g, const std::vector<int>& perm);

// Canonical invariant fingerprint: per-atom (element, charge, aromaticity,
// implicit H, degree, incident bond orders) refined by iterated neighbor
// hashing until the partition stabilizes, plus global counts. Equal
// fingerprints are taken as graph isomorphism for molecule-sized graphs.
std::vector<std::uint64_t> graph_fingerprint(const MolGraph& g);

bool same_graph(const MolGraph& a, const MolGraph& b);

Element element_from_symbol(const std::string& symbol);

}  // namespace rrgat
