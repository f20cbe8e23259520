// SPDX-License-Identifier: Apache-2.0

#include "dds/chem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>

#include "dds/error.hpp"

namespace dds {

namespace {

constexpr std::string_view kPeriodicTable[] = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
    "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

constexpr std::string_view kElementVocabulary[] = {
    // organic subset, fixed slots 0-9
    "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I",
    // 34 additional common elements; the final slot doubles as "unknown"
    "Na", "K", "Ca", "Fe", "Zn", "Se", "Si", "As", "Li", "Mg", "Al", "Sn",
    "Ag", "Pd", "Co", "Cu", "Au", "Ni", "Cd", "Mn", "Cr", "Pt", "Hg", "Pb",
    "Ti", "V", "Mo", "W", "Ru", "Rh", "Ir", "Os", "Re", "Bi"};

constexpr std::size_t kElementSlots = 44;
constexpr std::size_t kDegreeSlots = 11;
constexpr std::size_t kHydrogenSlots = 5;
constexpr std::size_t kValenceSlots = 6;
static_assert(std::size(kElementVocabulary) == kElementSlots);
static_assert(kElementSlots + kDegreeSlots + kHydrogenSlots + kValenceSlots +
                  1 ==
              kAtomFeatureWidth);

bool is_known_element(std::string_view symbol) {
  return std::find(std::begin(kPeriodicTable), std::end(kPeriodicTable),
                   symbol) != std::end(kPeriodicTable);
}

int default_valence(std::string_view element) {
  if (element == "B" || element == "N" || element == "P") return 3;
  if (element == "C") return 4;
  if (element == "O" || element == "S") return 2;
  if (element == "F" || element == "Cl" || element == "Br" || element == "I")
    return 1;
  return 0;
}

double bond_order_value(BondOrder order) {
  switch (order) {
    case BondOrder::single: return 1.0;
    case BondOrder::double_bond: return 2.0;
    case BondOrder::triple: return 3.0;
    case BondOrder::aromatic: return 1.5;
  }
  return 1.0;
}

struct RingSlot {
  std::size_t atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view input) : s_(input) {}

  MolGraph parse() {
    if (s_.empty())
      throw Error(ErrorCode::EmptyInput, "empty SMILES", 0);
    while (pos_ < s_.size()) step();
    finish();
    return std::move(graph_);
  }

 private:
  void step() {
    const char c = s_[pos_];
    const std::size_t at = pos_;
    switch (c) {
      case '.':
        throw Error(ErrorCode::MultiFragmentInput,
                    "multi-fragment SMILES not supported", at);
      case '(':
        if (!prev_)
          throw Error(ErrorCode::UnexpectedToken, "branch before any atom", at);
        if (pending_bond_)
          throw Error(ErrorCode::UnexpectedToken, "bond symbol before '('", at);
        branches_.push_back({*prev_, at});
        ++pos_;
        return;
      case ')': {
        if (branches_.empty())
          throw Error(ErrorCode::UnbalancedParenthesis, "unmatched ')'", at);
        if (pending_bond_)
          throw Error(ErrorCode::DanglingBond, "bond symbol before ')'",
                      pending_bond_offset_);
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      }
      case '-': set_pending(BondOrder::single, at); return;
      case '=': set_pending(BondOrder::double_bond, at); return;
      case '#': set_pending(BondOrder::triple, at); return;
      case ':': set_pending(BondOrder::aromatic, at); return;
      case '/':
      case '\\':
        // stereo bond markers carry single-bond connectivity
        set_pending(BondOrder::single, at);
        return;
      case '[': parse_bracket_atom(); return;
      case '%': {
        if (pos_ + 2 >= s_.size() || !std::isdigit(byte_at(pos_ + 1)) ||
            !std::isdigit(byte_at(pos_ + 2)))
          throw Error(ErrorCode::UnexpectedToken, "'%' needs two digits", at);
        const int ring = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
        pos_ += 3;
        ring_bond(ring, at);
        return;
      }
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          ++pos_;
          ring_bond(c - '0', at);
          return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
          parse_organic_atom();
          return;
        }
        throw Error(ErrorCode::UnexpectedToken,
                    std::string("unexpected character '") + c + "'", at);
    }
  }

  unsigned char byte_at(std::size_t i) const {
    return static_cast<unsigned char>(s_[i]);
  }

  void set_pending(BondOrder order, std::size_t at) {
    if (pending_bond_)
      throw Error(ErrorCode::UnexpectedToken, "two bond symbols in a row", at);
    if (!prev_)
      throw Error(ErrorCode::UnexpectedToken, "bond symbol before any atom",
                  at);
    pending_bond_ = order;
    pending_bond_offset_ = at;
    ++pos_;
  }

  void parse_organic_atom() {
    const std::size_t at = pos_;
    Atom atom;
    // two-letter organic symbols first
    if (s_.substr(pos_).starts_with("Cl")) {
      atom.element = "Cl";
      pos_ += 2;
    } else if (s_.substr(pos_).starts_with("Br")) {
      atom.element = "Br";
      pos_ += 2;
    } else {
      const char c = s_[pos_];
      static constexpr std::string_view kAliphatic = "BCNOPSFI";
      static constexpr std::string_view kAromatic = "bcnops";
      if (kAliphatic.find(c) != std::string_view::npos) {
        atom.element = std::string(1, c);
      } else if (kAromatic.find(c) != std::string_view::npos) {
        atom.element = std::string(1, static_cast<char>(std::toupper(c)));
        atom.aromatic = true;
      } else {
        throw Error(ErrorCode::UnknownElement,
                    std::string("element '") + c +
                        "' needs brackets or is unknown",
                    at);
      }
      ++pos_;
    }
    add_atom(std::move(atom), at);
  }

  void parse_bracket_atom() {
    const std::size_t open = pos_;
    ++pos_;  // '['
    Atom atom;

    while (pos_ < s_.size() && std::isdigit(byte_at(pos_))) ++pos_;  // isotope

    if (pos_ >= s_.size())
      throw Error(ErrorCode::BadBracketAtom, "unterminated bracket atom", open);

    const std::size_t sym_at = pos_;
    const char c = s_[pos_];
    if (std::islower(static_cast<unsigned char>(c))) {
      static constexpr std::string_view kAromatic = "bcnops";
      if (kAromatic.find(c) == std::string_view::npos)
        throw Error(ErrorCode::UnknownElement,
                    std::string("unknown aromatic symbol '") + c + "'", sym_at);
      atom.element = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
      ++pos_;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::string symbol(1, c);
      if (pos_ + 1 < s_.size() &&
          std::islower(byte_at(pos_ + 1)) && s_[pos_ + 1] != 'h') {
        std::string two = symbol + s_[pos_ + 1];
        if (is_known_element(two)) {
          symbol = two;
        }
      }
      if (!is_known_element(symbol))
        throw Error(ErrorCode::UnknownElement,
                    "unknown element '" + symbol + "'", sym_at);
      atom.element = symbol;
      pos_ += symbol.size();
    } else {
      throw Error(ErrorCode::BadBracketAtom, "expected element symbol",
                  sym_at);
    }

    // chirality markers, discarded
    while (pos_ < s_.size() && s_[pos_] == '@') ++pos_;

    int hcount = 0;
    if (pos_ < s_.size() && s_[pos_] == 'H') {
      ++pos_;
      hcount = 1;
      if (pos_ < s_.size() && std::isdigit(byte_at(pos_))) {
        hcount = 0;
        while (pos_ < s_.size() && std::isdigit(byte_at(pos_)))
          hcount = hcount * 10 + (s_[pos_++] - '0');
      }
    }
    atom.explicit_h = hcount;

    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const int sign = s_[pos_] == '+' ? 1 : -1;
      const char mark = s_[pos_];
      ++pos_;
      int magnitude = 1;
      if (pos_ < s_.size() && std::isdigit(byte_at(pos_))) {
        magnitude = 0;
        while (pos_ < s_.size() && std::isdigit(byte_at(pos_)))
          magnitude = magnitude * 10 + (s_[pos_++] - '0');
      } else {
        while (pos_ < s_.size() && s_[pos_] == mark) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.formal_charge = sign * magnitude;
    }

    if (pos_ >= s_.size() || s_[pos_] != ']')
      throw Error(ErrorCode::BadBracketAtom, "expected ']'", open);
    ++pos_;
    add_atom(std::move(atom), open);
  }

  void add_atom(Atom atom, std::size_t at) {
    graph_.atoms.push_back(std::move(atom));
    const std::size_t idx = graph_.atoms.size() - 1;
    if (prev_) {
      add_bond(*prev_, idx, take_pending(idx), at);
    } else if (pending_bond_) {
      throw Error(ErrorCode::DanglingBond, "bond with no preceding atom",
                  pending_bond_offset_);
    }
    prev_ = idx;
  }

  // Resolves a pending symbol, or defaults to aromatic between two
  // aromatic atoms and single otherwise.
  BondOrder take_pending(std::size_t to) {
    if (pending_bond_) {
      const BondOrder order = *pending_bond_;
      pending_bond_.reset();
      return order;
    }
    if (prev_ && graph_.atoms[*prev_].aromatic && graph_.atoms[to].aromatic)
      return BondOrder::aromatic;
    return BondOrder::single;
  }

  void ring_bond(int ring, std::size_t at) {
    if (!prev_)
      throw Error(ErrorCode::UnexpectedToken, "ring closure before any atom",
                  at);
    std::optional<BondOrder> symbol;
    if (pending_bond_) {
      symbol = *pending_bond_;
      pending_bond_.reset();
    }
    auto it = rings_.find(ring);
    if (it == rings_.end()) {
      rings_.emplace(ring, RingSlot{*prev_, symbol, at});
      return;
    }
    const RingSlot slot = it->second;
    rings_.erase(it);
    if (slot.atom == *prev_)
      throw Error(ErrorCode::InvalidRingBond, "ring bond to the same atom",
                  at);
    BondOrder order;
    if (slot.order && symbol) {
      if (*slot.order != *symbol)
        throw Error(ErrorCode::InvalidRingBond,
                    "ring closure bond orders disagree", at);
      order = *symbol;
    } else if (slot.order) {
      order = *slot.order;
    } else if (symbol) {
      order = *symbol;
    } else if (graph_.atoms[slot.atom].aromatic &&
               graph_.atoms[*prev_].aromatic) {
      order = BondOrder::aromatic;
    } else {
      order = BondOrder::single;
    }
    add_edge(slot.atom, *prev_, order, at);
  }

  void add_bond(std::size_t a, std::size_t b, BondOrder order,
                std::size_t at) {
    add_edge(a, b, order, at);
  }

  void add_edge(std::size_t a, std::size_t b, BondOrder order,
                std::size_t at) {
    const auto key = std::minmax(a, b);
    if (!bonded_.insert(key).second)
      throw Error(ErrorCode::InvalidRingBond,
                  "duplicate bond between one atom pair", at);
    graph_.bonds.push_back(Bond{a, b, order});
  }

  void finish() {
    if (pending_bond_)
      throw Error(ErrorCode::DanglingBond, "trailing bond symbol",
                  pending_bond_offset_);
    if (!branches_.empty())
      throw Error(ErrorCode::UnbalancedParenthesis, "unclosed '('",
                  branches_.back().second);
    if (!rings_.empty()) {
      std::size_t first = s_.size();
      for (const auto& [digit, slot] : rings_) first = std::min(first, slot.offset);
      throw Error(ErrorCode::UnclosedRingBond, "unclosed ring bond", first);
    }
    for (const Bond& bond : graph_.bonds) {
      ++graph_.atoms[bond.a].degree;
      ++graph_.atoms[bond.b].degree;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  MolGraph graph_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_bond_;
  std::size_t pending_bond_offset_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> branches_;
  std::map<int, RingSlot> rings_;
  std::set<std::pair<std::size_t, std::size_t>> bonded_;
};

}  // namespace

Tensor MolGraph::adjacency() const {
  const std::size_t n = atoms.size();
  Tensor adj = Tensor::zeros({n, n});
  auto v = adj.values_mut();
  for (const Bond& bond : bonds) {
    v[bond.a * n + bond.b] = 1.0;
    v[bond.b * n + bond.a] = 1.0;
  }
  return adj;
}

std::vector<std::vector<std::size_t>> MolGraph::neighbor_lists() const {
  std::vector<std::vector<std::size_t>> nbrs(atoms.size());
  for (const Bond& bond : bonds) {
    nbrs[bond.a].push_back(bond.b);
    nbrs[bond.b].push_back(bond.a);
  }
  return nbrs;
}

MolGraph parse_smiles(std::string_view input) {
  return SmilesParser(input).parse();
}

MolGraph assign_hydrogens(const MolGraph& graph) {
  if (graph.hydrogens_assigned)
    throw Error(ErrorCode::HydrogensAlreadyAssigned,
                "hydrogens already assigned");
  MolGraph out = graph;
  std::vector<double> bond_sum(out.atoms.size(), 0.0);
  for (const Bond& bond : out.bonds) {
    const double v = bond_order_value(bond.order);
    bond_sum[bond.a] += v;
    bond_sum[bond.b] += v;
  }
  for (std::size_t i = 0; i < out.atoms.size(); ++i) {
    Atom& atom = out.atoms[i];
    const int floored = static_cast<int>(std::floor(bond_sum[i]));
    if (atom.explicit_h) {
      atom.implicit_h = *atom.explicit_h;
    } else {
      atom.implicit_h = std::max(0, default_valence(atom.element) - floored);
    }
    atom.implicit_valence = atom.implicit_h + floored;
  }
  out.hydrogens_assigned = true;
  return out;
}

std::span<const std::string_view> element_vocabulary() {
  return {kElementVocabulary, std::size(kElementVocabulary)};
}

namespace {

template <typename VocabRange>
Tensor featurize_impl(const MolGraph& graph, const VocabRange& vocab) {
  if (!graph.hydrogens_assigned)
    throw Error(ErrorCode::HydrogensNotAssigned,
                "featurize needs hydrogen counts");
  const std::size_t n = graph.atoms.size();
  Tensor features = Tensor::zeros({n, kAtomFeatureWidth});
  auto rows = features.values_mut();
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& atom = graph.atoms[i];
    double* row = rows.data() + i * kAtomFeatureWidth;

    std::size_t element_slot = kElementSlots - 1;  // unknown
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      if (vocab[k] == atom.element) {
        element_slot = k;
        break;
      }
    }
    row[element_slot] = 1.0;

    const std::size_t degree =
        std::min<std::size_t>(static_cast<std::size_t>(atom.degree),
                              kDegreeSlots - 1);
    row[kElementSlots + degree] = 1.0;

    const std::size_t hydrogens =
        std::min<std::size_t>(static_cast<std::size_t>(atom.implicit_h),
                              kHydrogenSlots - 1);
    row[kElementSlots + kDegreeSlots + hydrogens] = 1.0;

    const std::size_t valence = std::min<std::size_t>(
        static_cast<std::size_t>(atom.implicit_valence), kValenceSlots - 1);
    row[kElementSlots + kDegreeSlots + kHydrogenSlots + valence] = 1.0;

    if (atom.aromatic)
      row[kElementSlots + kDegreeSlots + kHydrogenSlots + kValenceSlots] = 1.0;
  }
  return features;
}

}  // namespace

Tensor featurize(const MolGraph& graph) {
  return featurize_impl(graph, element_vocabulary());
}

Tensor featurize(const MolGraph& graph,
                 std::span<const std::string> vocabulary) {
  return featurize_impl(graph, vocabulary);
}

MolGraph mol_from_smiles(std::string_view input) {
  return assign_hydrogens(parse_smiles(input));
}

}  // namespace dds
