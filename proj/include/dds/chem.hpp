// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dds/tensor.hpp"

namespace dds {

enum class BondOrder { single, double_bond, triple, aromatic };

struct Atom {
  std::string element;               // normalized symbol, e.g. "C", "Cl"
  bool aromatic = false;
  int formal_charge = 0;
  std::optional<int> explicit_h;     // set for bracket atoms
  int implicit_h = 0;                // filled by assign_hydrogens
  int degree = 0;                    // heavy-atom neighbors
  int implicit_valence = 0;          // filled by assign_hydrogens
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::single;
};

// Molecular graph in SMILES first-appearance atom order. Single fragment
// only; self-loops never appear (graph layers add them).
struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  bool hydrogens_assigned = false;

  std::size_t num_atoms() const { return atoms.size(); }
  // N x N symmetric 0/1 matrix with zero diagonal.
  Tensor adjacency() const;
  std::vector<std::vector<std::size_t>> neighbor_lists() const;
};

// Supported grammar: organic-subset atoms (B C N O P S F Cl Br I and
// aromatic b c n o p s), bracket atoms with isotope/chirality/H-count/
// charge, branches, ring closures (digit and %nn), bond symbols - = # :
// and the stereo markers / \ @ @@ which are parsed and discarded.
// Multi-fragment input (".") is rejected. Errors carry a byte offset.
MolGraph parse_smiles(std::string_view input);

// Fills implicit_h / implicit_valence from the default-valence table
// (B3 C4 N3 O2 P3 S2, halogens 1); bracket atoms keep their explicit H
// count. Aromatic bonds count 1.5 toward the bond-order sum, which is
// floored after summing. Negative H counts clamp to 0.
MolGraph assign_hydrogens(const MolGraph& graph);

// 44-symbol element vocabulary: organic subset in slots 0-9, then 34
// common heteroatoms/metals; any other symbol maps to the last slot.
std::span<const std::string_view> element_vocabulary();

inline constexpr std::size_t kAtomFeatureWidth = 67;

// Per-atom binary feature rows [N x 67]: element one-hot (44), degree
// one-hot (11, 0-10), attached-H one-hot (5, clamped to 4), implicit
// valence one-hot (6, clamped to 5), aromatic flag (1).
Tensor featurize(const MolGraph& graph);
Tensor featurize(const MolGraph& graph,
                 std::span<const std::string> vocabulary);

// parse + assign_hydrogens in one step.
MolGraph mol_from_smiles(std::string_view input);

}  // namespace dds
