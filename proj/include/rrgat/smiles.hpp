#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rrgat/mol_graph.hpp"

namespace rrgat {

enum class TokenKind {
  kAtom,         // organic-subset symbol, upper or aromatic lowercase
  kBracketAtom,  // [ ... ]
  kBond,         // - = # : / backslash
  kBranchOpen,
  kBranchClose,
  kRingBond,     // single digit or %nn
  kDot
};

struct Token {
  TokenKind kind;
  std::string lexeme;
  int position;  // byte offset in the input
};

// Splits a SMILES string into tokens. Concatenating the lexemes reproduces
// the input exactly. Throws parse_error on unknown characters, malformed
// bracket atoms, or empty input.
std::vector<Token> tokenize(std::string_view smiles);

// Parses the supported SMILES subset into a finalized MolGraph (adjacency,
// ring flags and valence diagnostics filled in). Multi-fragment input is
// rejected. Throws parse_error with the offending position.
MolGraph parse_smiles(std::string_view smiles);

// Emits a non-canonical SMILES for the graph. Constitution only: bond
// stereo markers and chirality are dropped. parse_smiles(write_smiles(g))
// is graph-isomorphic to g.
std::string write_smiles(const MolGraph& g);

}  // namespace rrgat
