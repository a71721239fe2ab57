//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hbgsa {

inline constexpr int kSmilesLen = 150;

// Fixed 64-token alphabet; index 0 is padding. Two-character tokens are
// "Cl" and "Br" only and win over their one-character prefixes.
class SmilesVocabulary {
public:
  static const SmilesVocabulary &standard();

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string &token(std::int32_t index) const;
  // -1 when absent.
  std::int32_t index_of(std::string_view token) const noexcept;
  const std::vector<std::string> &tokens() const noexcept { return tokens_; }
  std::uint64_t checksum() const noexcept;

private:
  SmilesVocabulary();
  std::vector<std::string> tokens_;
};

inline constexpr std::int32_t kSmilesPad = 0;

// Greedy tokenization. Throws DataError naming the unknown substring and
// its 0-based position.
std::vector<std::string> tokenize_smiles(std::string_view smiles);
std::string detokenize(const std::vector<std::string> &tokens);
// Indices without the padding tail, i.e. the inverse of index lookup.
std::string detokenize(const std::vector<std::int32_t> &indices);

// Token indices truncated or padded with 0 to max_len.
std::vector<std::int32_t> encode_smiles(std::string_view smiles,
                                        int max_len = kSmilesLen);

// Heavy atoms plus implicit and bracket hydrogens. Implicit H follow the
// organic-subset valences B3 C4 N3/5 O2 P3/5 S2/4/6 and halogens 1; aromatic
// atoms reserve one extra valence for the delocalized bond. Throws
// DataError naming any unsupported construct.
int smiles_atom_count(std::string_view smiles);

}  // namespace hbgsa
