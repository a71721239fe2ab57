//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/features/residues.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <vector>

#include "hbgsa/error.hpp"

namespace hbgsa {
namespace {

constexpr int kScales = 8;
constexpr int kClasses = 12;

struct RawResidue {
  char code;
  double scale[kScales];  // KD, charge, polarity, volume, pI, Pa, Pb, Pt
  int chem_class;
};

// Published literature values; z-scoring happens at table build time.
constexpr RawResidue kRaw[20] = {
  { 'A', { 1.8, 0.0, 8.1, 88.6, 6.00, 142, 83, 66 }, 1 },
  { 'C', { 2.5, 0.0, 5.5, 108.5, 5.07, 70, 119, 119 }, 3 },
  { 'D', { -3.5, -1.0, 13.0, 111.1, 2.77, 101, 54, 146 }, 5 },
  { 'E', { -3.5, -1.0, 12.3, 138.4, 3.22, 151, 37, 74 }, 5 },
  { 'F', { 2.8, 0.0, 5.2, 189.9, 5.48, 113, 138, 60 }, 9 },
  { 'G', { -0.4, 0.0, 9.0, 60.1, 5.97, 57, 75, 156 }, 0 },
  { 'H', { -3.2, 0.1, 10.4, 153.2, 7.59, 100, 87, 95 }, 8 },
  { 'I', { 4.5, 0.0, 5.2, 166.7, 6.02, 108, 160, 47 }, 2 },
  { 'K', { -3.9, 1.0, 11.3, 168.6, 9.74, 114, 74, 101 }, 7 },
  { 'L', { 3.8, 0.0, 4.9, 166.7, 5.98, 121, 130, 59 }, 2 },
  { 'M', { 1.9, 0.0, 5.7, 162.9, 5.74, 145, 105, 60 }, 3 },
  { 'N', { -3.5, 0.0, 11.6, 114.1, 5.41, 67, 89, 156 }, 6 },
  { 'P', { -1.6, 0.0, 8.0, 112.7, 6.30, 57, 55, 152 }, 11 },
  { 'Q', { -3.5, 0.0, 10.5, 143.8, 5.65, 111, 110, 98 }, 6 },
  { 'R', { -4.5, 1.0, 10.5, 173.4, 10.76, 98, 93, 95 }, 7 },
  { 'S', { -0.8, 0.0, 9.2, 89.0, 5.68, 77, 75, 143 }, 4 },
  { 'T', { -0.7, 0.0, 8.6, 116.1, 5.60, 83, 119, 96 }, 4 },
  { 'V', { 4.2, 0.0, 5.9, 140.0, 5.96, 106, 170, 50 }, 2 },
  { 'W', { -0.9, 0.0, 5.4, 227.8, 5.89, 108, 137, 96 }, 10 },
  { 'Y', { -1.3, 0.0, 6.2, 193.6, 5.66, 69, 147, 114 }, 10 },
};

struct Table {
  ResidueVector rows[26] {};  // indexed by letter; non-standard stay zero
  ResidueVector unknown {};
};

Table build_table() {
  Table t;
  double mean[kScales] = {}, sd[kScales] = {};
  for (int s = 0; s < kScales; ++s) {
    for (const auto &r: kRaw)
      mean[s] += r.scale[s];
    mean[s] /= 20.0;
    for (const auto &r: kRaw)
      sd[s] += (r.scale[s] - mean[s]) * (r.scale[s] - mean[s]);
    sd[s] = std::sqrt(sd[s] / 20.0);
  }
  for (int i = 0; i < 20; ++i) {
    const RawResidue &r = kRaw[i];
    ResidueVector &v = t.rows[r.code - 'A'];
    for (int s = 0; s < kScales; ++s)
      v[s] = static_cast<float>((r.scale[s] - mean[s]) / sd[s]);
    v[kScales + r.chem_class] = 1.0f;
    v[kScales + kClasses + kStandardResidues.find(r.code)] = 1.0f;
  }
  return t;
}

const Table &table() {
  static const Table t = build_table();
  return t;
}

nn::Tensor<float> encode_residues(std::string_view sequence, int max_len,
                                  const char *what) {
  if (sequence.empty())
    throw DataError(std::string(what) + " sequence is empty");
  if (max_len <= 0)
    throw ConfigError(std::string(what) + " max_len must be positive");
  nn::Tensor<float> out(
      { static_cast<std::size_t>(max_len), std::size_t { kResidueFeatureDim } });
  const std::size_t n = std::min(sequence.size(), static_cast<std::size_t>(max_len));
  for (std::size_t i = 0; i < n; ++i) {
    const ResidueVector &v = residue_vector(sequence[i]);
    std::memcpy(out.data() + i * kResidueFeatureDim, v.data(),
                sizeof(float) * kResidueFeatureDim);
  }
  return out;
}

}  // namespace

const ResidueVector &residue_vector(char code) {
  const int c = std::toupper(static_cast<unsigned char>(code));
  if (c >= 'A' && c <= 'Z')
    return table().rows[c - 'A'];
  return table().unknown;
}

std::uint64_t residue_table_checksum() {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const ResidueVector &v) {
    const auto *bytes = reinterpret_cast<const unsigned char *>(v.data());
    for (std::size_t i = 0; i < sizeof(float) * v.size(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  };
  for (char c: kStandardResidues)
    mix(residue_vector(c));
  mix(residue_vector('X'));
  return h;
}

nn::Tensor<float> encode_protein(std::string_view sequence, int max_len) {
  return encode_residues(sequence, max_len, "protein");
}

nn::Tensor<float> encode_pocket(std::string_view sequence, int max_len) {
  return encode_residues(sequence, max_len, "pocket");
}

}  // namespace hbgsa
