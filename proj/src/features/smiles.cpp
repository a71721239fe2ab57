//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/features/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

#include "hbgsa/error.hpp"

namespace hbgsa {

SmilesVocabulary::SmilesVocabulary() {
  tokens_ = {
    "<pad>",
    // organic subset atoms, aromatic forms, common bracket elements
    "C", "c", "N", "n", "O", "o", "S", "s", "P", "p", "F", "Cl", "Br", "I",
    "B", "b", "H", "K",
    // structure
    "(", ")", "[", "]", "=", "#", "-", "+",
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "0", "%", ".", ":", "$", "*",
    // second letters and extra element initials used inside brackets
    "a", "e", "i", "l", "r", "g", "u", "Z", "M", "A", "L", "T", "t", "d", "G",
    "R", "E", "V", "W", "h", "m", "f",
  };
}

const SmilesVocabulary &SmilesVocabulary::standard() {
  static const SmilesVocabulary v;
  return v;
}

const std::string &SmilesVocabulary::token(std::int32_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size())
    throw DataError("SMILES token index out of range: " + std::to_string(index));
  return tokens_[static_cast<std::size_t>(index)];
}

std::int32_t SmilesVocabulary::index_of(std::string_view token) const noexcept {
  for (std::size_t i = 1; i < tokens_.size(); ++i)
    if (tokens_[i] == token)
      return static_cast<std::int32_t>(i);
  return -1;
}

std::uint64_t SmilesVocabulary::checksum() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto &t: tokens_) {
    for (unsigned char c: t) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0xFF;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::string> tokenize_smiles(std::string_view smiles) {
  const auto &vocab = SmilesVocabulary::standard();
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < smiles.size()) {
    if (i + 1 < smiles.size()) {
      const std::string_view two = smiles.substr(i, 2);
      if ((two == "Cl" || two == "Br") && vocab.index_of(two) > 0) {
        out.emplace_back(two);
        i += 2;
        continue;
      }
    }
    const std::string_view one = smiles.substr(i, 1);
    if (vocab.index_of(one) < 0)
      throw DataError("unknown SMILES token '" + std::string(one)
                      + "' at position " + std::to_string(i));
    out.emplace_back(one);
    ++i;
  }
  return out;
}

std::string detokenize(const std::vector<std::string> &tokens) {
  std::string s;
  for (const auto &t: tokens)
    s += t;
  return s;
}

std::string detokenize(const std::vector<std::int32_t> &indices) {
  const auto &vocab = SmilesVocabulary::standard();
  std::string s;
  for (std::int32_t i: indices)
    if (i != kSmilesPad)
      s += vocab.token(i);
  return s;
}

std::vector<std::int32_t> encode_smiles(std::string_view smiles, int max_len) {
  if (smiles.empty())
    throw DataError("SMILES string is empty");
  if (max_len <= 0)
    throw ConfigError("SMILES max_len must be positive");
  const auto &vocab = SmilesVocabulary::standard();
  std::vector<std::int32_t> out(static_cast<std::size_t>(max_len), kSmilesPad);
  const auto tokens = tokenize_smiles(smiles);
  const std::size_t n = std::min(tokens.size(), out.size());
  for (std::size_t i = 0; i < n; ++i)
    out[i] = vocab.index_of(tokens[i]);
  return out;
}

// --- formula atom count -----------------------------------------------------

namespace {

const std::set<std::string> &bracket_elements() {
  static const std::set<std::string> k {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Ti", "V",  "Cr", "Mn",
    "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb",
    "Sr", "Ag", "Cd", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "Pt", "Au",
    "Hg", "Pb", "Bi", "Gd", "Ru", "Rh", "Pd", "Mo", "W",  "Re", "Os", "Ir",
  };
  return k;
}

const std::map<std::string, std::vector<int>> &organic_valences() {
  static const std::map<std::string, std::vector<int>> k {
    { "B", { 3 } },     { "C", { 4 } },     { "N", { 3, 5 } },
    { "O", { 2 } },     { "P", { 3, 5 } },  { "S", { 2, 4, 6 } },
    { "F", { 1 } },     { "Cl", { 1 } },    { "Br", { 1 } },
    { "I", { 1 } },
  };
  return k;
}

struct ParsedAtom {
  std::string element;  // capitalized symbol
  bool aromatic = false;
  bool bracket = false;
  int explicit_h = 0;
  int bond_sum = 0;  // aromatic bonds counted as 1
};

constexpr int kAromaticBond = -1;

class CountParser {
public:
  explicit CountParser(std::string_view s): s_(s) { }

  int run() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '(') {
        if (prev_ < 0)
          fail("branch without a preceding atom");
        branches_.push_back(prev_);
        ++i_;
      } else if (c == ')') {
        if (branches_.empty())
          fail("unbalanced ')'");
        prev_ = branches_.back();
        branches_.pop_back();
        ++i_;
      } else if (c == '-' || c == '/' || c == '\\') {
        set_bond(1);
      } else if (c == '=') {
        set_bond(2);
      } else if (c == '#') {
        set_bond(3);
      } else if (c == '$') {
        set_bond(4);
      } else if (c == ':') {
        set_bond(kAromaticBond);
      } else if (c == '.') {
        prev_ = -1;
        pending_ = 0;
        ++i_;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        ring(c - '0');
        ++i_;
      } else if (c == '%') {
        if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))
            || !std::isdigit(static_cast<unsigned char>(s_[i_ + 2])))
          fail("malformed '%' ring label");
        ring((s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0'));
        i_ += 3;
      } else if (c == '[') {
        bracket_atom();
      } else {
        organic_atom();
      }
    }
    if (!branches_.empty())
      fail("unclosed '('");
    if (!rings_.empty())
      fail("unclosed ring bond " + std::to_string(rings_.begin()->first));
    if (atoms_.empty())
      fail("no atoms");

    int total = 0;
    for (const ParsedAtom &a: atoms_)
      total += 1 + hydrogens(a);
    return total;
  }

private:
  [[noreturn]] void fail(const std::string &what) const {
    throw DataError("unsupported SMILES construct at position "
                    + std::to_string(i_) + ": " + what);
  }

  void set_bond(int order) {
    if (pending_ != 0)
      fail("two consecutive bond symbols");
    pending_ = order;
    ++i_;
  }

  static int bond_value(int order) { return order == kAromaticBond ? 1 : order; }

  void connect(int a, int b, int order) {
    if (order == 0)
      order = (atoms_[a].aromatic && atoms_[b].aromatic) ? kAromaticBond : 1;
    atoms_[a].bond_sum += bond_value(order);
    atoms_[b].bond_sum += bond_value(order);
  }

  void add_atom(ParsedAtom a) {
    atoms_.push_back(std::move(a));
    const int idx = static_cast<int>(atoms_.size()) - 1;
    if (prev_ >= 0)
      connect(prev_, idx, pending_);
    else if (pending_ != 0)
      fail("bond symbol without a preceding atom");
    pending_ = 0;
    prev_ = idx;
  }

  void ring(int label) {
    if (prev_ < 0)
      fail("ring label without a preceding atom");
    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_[label] = { prev_, pending_ };
    } else {
      const auto [other, open_order] = it->second;
      if (other == prev_)
        fail("ring bond from an atom to itself");
      connect(other, prev_, pending_ != 0 ? pending_ : open_order);
      rings_.erase(it);
    }
    pending_ = 0;
  }

  void organic_atom() {
    const char c = s_[i_];
    ParsedAtom a;
    if (s_.substr(i_, 2) == "Cl" || s_.substr(i_, 2) == "Br") {
      a.element = std::string(s_.substr(i_, 2));
      i_ += 2;
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      a.element = std::string(1, c);
      ++i_;
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      a.element = std::string(1, static_cast<char>(std::toupper(c)));
      a.aromatic = true;
      ++i_;
    } else {
      fail(std::string("'") + c + "' outside brackets");
    }
    add_atom(std::move(a));
  }

  void bracket_atom() {
    const std::size_t close = s_.find(']', i_);
    if (close == std::string_view::npos)
      fail("unterminated bracket atom");
    std::string_view body = s_.substr(i_ + 1, close - i_ - 1);
    std::size_t j = 0;
    while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j])))
      ++j;  // isotope
    ParsedAtom a;
    a.bracket = true;
    if (j < body.size() && std::islower(static_cast<unsigned char>(body[j]))) {
      // aromatic: se, as, or a single organic letter
      std::string two(body.substr(j, 2));
      if (two == "se" || two == "as") {
        a.element = std::string(1, static_cast<char>(std::toupper(two[0]))) + two[1];
        j += 2;
      } else {
        a.element = std::string(1, static_cast<char>(std::toupper(body[j])));
        ++j;
      }
      a.aromatic = true;
    } else if (j < body.size() && std::isupper(static_cast<unsigned char>(body[j]))) {
      std::string two(body.substr(j, 2));
      if (two.size() == 2 && std::islower(static_cast<unsigned char>(two[1]))
          && bracket_elements().contains(two)) {
        a.element = two;
        j += 2;
      } else {
        a.element = std::string(1, body[j]);
        ++j;
      }
    }
    if (a.element.empty() || !bracket_elements().contains(a.element))
      fail("unknown bracket element in '[" + std::string(body) + "]'");
    while (j < body.size() && body[j] == '@')
      ++j;
    if (j < body.size() && body[j] == 'H') {
      ++j;
      a.explicit_h = 1;
      if (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j])))
        a.explicit_h = body[j++] - '0';
    }
    while (j < body.size() && (body[j] == '+' || body[j] == '-'
                               || std::isdigit(static_cast<unsigned char>(body[j]))))
      ++j;
    if (j < body.size() && body[j] == ':') {
      ++j;
      while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j])))
        ++j;
    }
    if (j != body.size())
      fail("unsupported bracket atom '[" + std::string(body) + "]'");
    i_ = close + 1;
    add_atom(std::move(a));
  }

  static int hydrogens(const ParsedAtom &a) {
    if (a.bracket)
      return a.explicit_h;
    const auto &vals = organic_valences().at(a.element);
    if (a.aromatic)
      return std::max(0, vals.front() - a.bond_sum - 1);
    for (int v: vals)
      if (v >= a.bond_sum)
        return v - a.bond_sum;
    return 0;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::vector<ParsedAtom> atoms_;
  std::vector<int> branches_;
  std::map<int, std::pair<int, int>> rings_;
  int prev_ = -1;
  int pending_ = 0;
};

}  // namespace

int smiles_atom_count(std::string_view smiles) {
  if (smiles.empty())
    throw DataError("SMILES string is empty");
  return CountParser(smiles).run();
}

}  // namespace hbgsa
