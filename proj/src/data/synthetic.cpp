//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "hbgsa/features/residues.hpp"
#include "hbgsa/features/smiles.hpp"

namespace hbgsa {
namespace {

constexpr std::array<const char *, 10> kSmilesPool {
  "CC(=O)Nc1nnc(s1)S(=O)(=O)N",
  "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
  "CC(=O)Oc1ccccc1C(=O)O",
  "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
  "OC1C(O)C(O)C(CO)OC1O",
  "c1ccc2c(c1)cc[nH]2",
  "NCCc1ccc(O)c(O)c1",
  "CCN(CC)CCNC(=O)c1ccc(N)cc1",
  "O=C(O)CCCc1ccc(N(CCCl)CCCl)cc1",
  "Nc1ncnc2c1ncn2C1OC(CO)C(O)C1O",
};

std::string random_residues(std::mt19937_64 &rng, int len) {
  std::uniform_int_distribution<std::size_t> pick(0, kStandardResidues.size() - 1);
  std::string s(static_cast<std::size_t>(len), 'A');
  for (auto &c: s)
    c = kStandardResidues[pick(rng)];
  return s;
}

}  // namespace

std::vector<EncodedSample> synthetic_samples(const HbgsaConfig &cfg, std::size_t n,
                                             std::uint64_t seed, SyntheticLabels labels) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<EncodedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    EncodedSample s;
    s.id = "syn" + std::to_string(i);

    const int plen = std::uniform_int_distribution<int>(
        std::min(50, cfg.protein_len), cfg.protein_len)(rng);
    const int klen = std::uniform_int_distribution<int>(
        std::min(10, cfg.pocket_len), cfg.pocket_len)(rng);
    s.protein = encode_protein(random_residues(rng, plen), cfg.protein_len);
    s.pocket = encode_pocket(random_residues(rng, klen), cfg.pocket_len);
    s.smiles = encode_smiles(kSmilesPool[rng() % kSmilesPool.size()], cfg.smiles_len);

    const auto rows = static_cast<std::size_t>(cfg.hbond_n);
    const int n_bonds = std::uniform_int_distribution<int>(0, cfg.hbond_n)(rng);
    s.hbond = nn::Tensor<float>({ rows, 9 });
    std::normal_distribution<double> dir(0.0, 1.0);
    std::vector<std::array<double, 7>> bonds;  // distance first, then ends
    for (int b = 0; b < n_bonds; ++b) {
      std::array<double, 3> p, d;
      for (auto &v: p)
        v = 12.0 * unit(rng) - 6.0;
      double norm = 0.0;
      for (auto &v: d) {
        v = dir(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm) + 1e-12;
      const double dist = 2.5 + unit(rng);
      bonds.push_back({ dist, p[0], p[1], p[2], p[0] + dist * d[0] / norm,
                        p[1] + dist * d[1] / norm, p[2] + dist * d[2] / norm });
    }
    std::sort(bonds.begin(), bonds.end());
    for (std::size_t b = 0; b < bonds.size(); ++b) {
      for (std::size_t c = 0; c < 6; ++c)
        s.hbond.at(b, c) = static_cast<float>(bonds[b][c + 1]);
      for (std::size_t c = 0; c < 3; ++c)
        s.hbond.at(b, 6 + c) =
            static_cast<float>(0.5 * (bonds[b][c + 1] + bonds[b][c + 4]));
    }

    if (labels == SyntheticLabels::kLinear)
      s.affinity = 4.0 + 4.0 * n_bonds / cfg.hbond_n + 2.0 * plen / cfg.protein_len
                   + 1.5 * klen / cfg.pocket_len;
    else
      s.affinity = 4.0 + 6.0 * unit(rng);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hbgsa
