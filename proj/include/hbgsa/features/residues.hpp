//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "hbgsa/nn/tensor.hpp"

namespace hbgsa {

inline constexpr int kResidueFeatureDim = 40;
inline constexpr int kProteinLen = 1000;
inline constexpr int kPocketLen = 63;

// Residue descriptor layout (40 columns):
//   0..7   z-scored scales over the 20 standard residues: Kyte-Doolittle
//          hydropathy, side-chain charge at pH 7, Grantham polarity,
//          Zamyatnin volume, isoelectric point, Chou-Fasman helix, sheet and
//          turn propensities
//   8..19  chemical class one-hot: G | A | VIL | CM | ST | DE | NQ | KR |
//          H | F | WY | P
//   20..39 identity one-hot in "ACDEFGHIKLMNPQRSTVWY" order
// Unknown residues ('X' and any non-standard letter) map to the zero row.
using ResidueVector = std::array<float, kResidueFeatureDim>;

inline constexpr std::string_view kStandardResidues = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr std::uint32_t kResidueTableVersion = 1;

// Row for a one-letter code (case-insensitive).
const ResidueVector &residue_vector(char code);

// FNV-1a over the float32 bytes of the 21 rows (20 standard + X).
std::uint64_t residue_table_checksum();

// [max_len, 40]; rows past the sequence stay zero, longer input is
// truncated. Throws DataError on an empty sequence.
nn::Tensor<float> encode_protein(std::string_view sequence,
                                 int max_len = kProteinLen);
nn::Tensor<float> encode_pocket(std::string_view sequence,
                                int max_len = kPocketLen);

}  // namespace hbgsa
